#ifndef OMNISIM_H
#define OMNISIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum OmniStatus {
  OMNI_STATUS_OK = 0,
  OMNI_STATUS_NULL_POINTER = 1,
  OMNI_STATUS_VALIDATION = 2,
  OMNI_STATUS_NUMERICAL = 3,
  OMNI_STATUS_GUARD = 4,
  OMNI_STATUS_IO = 5,
  OMNI_STATUS_PANIC = 6,
} OmniStatus;

typedef enum OmniOptimizer {
  OMNI_OPTIMIZER_GREEDY = 0,
  OMNI_OPTIMIZER_EXHAUSTIVE = 1,
  OMNI_OPTIMIZER_RANDOM = 2,
  OMNI_OPTIMIZER_STATISTICAL = 3,
} OmniOptimizer;

typedef enum OmniGranularity {
  OMNI_GRANULARITY_ELEMENT = 0,
  OMNI_GRANULARITY_GROUP = 1,
} OmniGranularity;

/**
 * Result of an optimization run.
 */
typedef struct OmniOutcome OmniOutcome;

/**
 * A parsed and validated scene.
 */
typedef struct OmniScene OmniScene;

/**
 * Optimizer settings. Fill with [`omni_params_default`] and override.
 */
typedef struct OmniOptimizeParams {
  enum OmniOptimizer optimizer;
  enum OmniGranularity granularity;
  uint64_t seed;
  size_t max_sweeps;
  double epsilon;
  /**
   * Draws for the random baseline.
   */
  size_t trials;
  /**
   * Fading realizations for the statistical optimizer.
   */
  size_t samples;
  /**
   * Rician K-factor in dB for the statistical optimizer; +inf disables fading.
   */
  double k_factor_db;
} OmniOptimizeParams;

/**
 * Message for the most recent failure on this thread, or null if none.
 * The pointer stays valid until the next failing call on this thread.
 */
const char *omni_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *omni_version(void);

/**
 * Writes the default optimizer settings to `out`.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum OmniStatus omni_params_default(struct OmniOptimizeParams *out);

/**
 * Loads a scene file.
 *
 * # Safety
 * `path` must be null or a NUL-terminated string; `out` must be null or
 * valid for writes.
 */
enum OmniStatus omni_scene_load(const char *path, struct OmniScene **out);

/**
 * Parses a scene from JSON text.
 *
 * # Safety
 * As [`omni_scene_load`].
 */
enum OmniStatus omni_scene_from_json(const char *json, struct OmniScene **out);

/**
 * The built-in 640-element prototype scene.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum OmniStatus omni_scene_prototype(struct OmniScene **out);

/**
 * Releases a scene. Null is ignored.
 *
 * # Safety
 * `scene` must be null or a handle from this library not yet freed.
 */
void omni_scene_free(struct OmniScene *scene);

/**
 * Writes element, group, user and BS antenna counts. Any output pointer
 * may be null to skip it.
 *
 * # Safety
 * `scene` must be a live handle; non-null outputs must be valid for writes.
 */
enum OmniStatus omni_scene_counts(const struct OmniScene *scene,
                                  size_t *elements,
                                  size_t *groups,
                                  size_t *users,
                                  size_t *antennas);

/**
 * Runs an optimizer. `params` may be null for the defaults.
 *
 * # Safety
 * `scene` must be a live handle, `params` null or valid, `out` valid for
 * writes.
 */
enum OmniStatus omni_optimize(const struct OmniScene *scene,
                              const struct OmniOptimizeParams *params,
                              struct OmniOutcome **out);

/**
 * Releases an outcome. Null is ignored.
 *
 * # Safety
 * `outcome` must be null or a handle from this library not yet freed.
 */
void omni_outcome_free(struct OmniOutcome *outcome);

/**
 * Sum rate in bits/s/Hz and whether the channel was degenerate.
 *
 * # Safety
 * `outcome` must be a live handle; outputs valid for writes or null to skip.
 */
enum OmniStatus omni_outcome_objective(const struct OmniOutcome *outcome,
                                       double *sum_rate,
                                       bool *degenerate);

/**
 * Copies per-user rates into `buf`, which must hold the scene's user count.
 *
 * # Safety
 * `outcome` must be a live handle and `buf` valid for `len` writes.
 */
enum OmniStatus omni_outcome_per_user_rate(const struct OmniOutcome *outcome,
                                           double *buf,
                                           size_t len);

/**
 * Copies one state index per element into `buf`, which must hold the
 * scene's element count.
 *
 * # Safety
 * `outcome` must be a live handle and `buf` valid for `len` writes.
 */
enum OmniStatus omni_outcome_element_states(const struct OmniOutcome *outcome,
                                            uint32_t *buf,
                                            size_t len);

/**
 * Number of objective evaluations the optimizer performed.
 *
 * # Safety
 * `outcome` must be a live handle and `out` valid for writes.
 */
enum OmniStatus omni_outcome_evaluations(const struct OmniOutcome *outcome, size_t *out);

/**
 * ZF sum rate of a per-element configuration of `len` state indices.
 *
 * # Safety
 * `scene` must be a live handle, `states` valid for `len` reads and `out`
 * valid for writes.
 */
enum OmniStatus omni_sum_rate(const struct OmniScene *scene,
                              const uint32_t *states,
                              size_t len,
                              double *out);

/**
 * Received SNR in dB at `(x, y, z)` for a per-element configuration.
 *
 * # Safety
 * As [`omni_sum_rate`].
 */
enum OmniStatus omni_snr_at(const struct OmniScene *scene,
                            const uint32_t *states,
                            size_t len,
                            double x,
                            double y,
                            double z,
                            double *out);

#endif  /* OMNISIM_H */
