//! C ABI for omnisim.
//!
//! Scenes and optimization outcomes are opaque handles owned by the caller
//! and released with the matching `*_free` function. Every fallible call
//! returns an [`OmniStatus`]; on failure a description is available from
//! [`omni_last_error_message`] on the same thread until the next failing
//! call. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use omnisim::analysis::snr_at;
use omnisim::beamforming::{
    exhaustive_optimize, greedy_optimize, random_baseline, statistical_optimize, sum_rate,
    OptimizationOutcome, DEFAULT_EPSILON, DEFAULT_MAX_SWEEPS,
};
use omnisim::channel::FadingModel;
use omnisim::element::{Configuration, Granularity};
use omnisim::geometry::Vec3;
use omnisim::scenefile::{parse_scene, parse_scene_str, SceneBundle};
use omnisim::{Error, ErrorKind};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmniStatus {
    Ok = 0,
    NullPointer = 1,
    Validation = 2,
    Numerical = 3,
    Guard = 4,
    Io = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmniOptimizer {
    Greedy = 0,
    Exhaustive = 1,
    Random = 2,
    Statistical = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmniGranularity {
    Element = 0,
    Group = 1,
}

/// Optimizer settings. Fill with [`omni_params_default`] and override.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct OmniOptimizeParams {
    pub optimizer: OmniOptimizer,
    pub granularity: OmniGranularity,
    pub seed: u64,
    pub max_sweeps: usize,
    pub epsilon: f64,
    /// Draws for the random baseline.
    pub trials: usize,
    /// Fading realizations for the statistical optimizer.
    pub samples: usize,
    /// Rician K-factor in dB for the statistical optimizer; +inf disables fading.
    pub k_factor_db: f64,
}

impl Default for OmniOptimizeParams {
    fn default() -> Self {
        Self {
            optimizer: OmniOptimizer::Greedy,
            granularity: OmniGranularity::Group,
            seed: 0,
            max_sweeps: DEFAULT_MAX_SWEEPS,
            epsilon: DEFAULT_EPSILON,
            trials: 100,
            samples: 100,
            k_factor_db: 10.0,
        }
    }
}

/// A parsed and validated scene.
pub struct OmniScene {
    bundle: SceneBundle,
}

/// Result of an optimization run.
pub struct OmniOutcome {
    outcome: OptimizationOutcome,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(OmniStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match (&e, e.kind()) {
            (Error::Io { .. }, _) => OmniStatus::Io,
            (_, ErrorKind::Validation) => OmniStatus::Validation,
            (_, ErrorKind::Numerical) => OmniStatus::Numerical,
            (_, ErrorKind::Guard) => OmniStatus::Guard,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(OmniStatus::NullPointer, format!("{what} is null"))
}

fn set_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(message));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> OmniStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => OmniStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {message}"));
            OmniStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or_else(|| null(what))
}

unsafe fn c_str<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| Failure(OmniStatus::Validation, format!("{what} is not valid UTF-8")))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn copy_out<T: Copy>(src: &[T], buf: *mut T, len: usize) -> Result<(), Failure> {
    if buf.is_null() {
        return Err(null("buffer"));
    }
    if len < src.len() {
        return Err(Error::DimensionMismatch {
            expected: src.len(),
            found: len,
        }
        .into());
    }
    std::ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

unsafe fn config_from(
    scene: &OmniScene,
    states: *const u32,
    len: usize,
) -> Result<Configuration, Failure> {
    if states.is_null() {
        return Err(null("states"));
    }
    let layout = &scene.bundle.layout;
    if len != layout.len() {
        return Err(Error::DimensionMismatch {
            expected: layout.len(),
            found: len,
        }
        .into());
    }
    let states = std::slice::from_raw_parts(states, len);
    let config = Configuration::per_element(states.iter().map(|&s| s as usize).collect());
    config.validate(layout, &scene.bundle.table)?;
    Ok(config)
}

/// Message for the most recent failure on this thread, or null if none.
/// The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn omni_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn omni_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Writes the default optimizer settings to `out`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn omni_params_default(out: *mut OmniOptimizeParams) -> OmniStatus {
    guard(|| write(out, OmniOptimizeParams::default(), "out"))
}

fn boxed_scene(bundle: SceneBundle) -> *mut OmniScene {
    Box::into_raw(Box::new(OmniScene { bundle }))
}

/// Loads a scene file.
///
/// # Safety
/// `path` must be null or a NUL-terminated string; `out` must be null or
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn omni_scene_load(
    path: *const c_char,
    out: *mut *mut OmniScene,
) -> OmniStatus {
    guard(|| {
        let path = c_str(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let bundle = parse_scene(Path::new(path))?;
        write(out, boxed_scene(bundle), "out")
    })
}

/// Parses a scene from JSON text.
///
/// # Safety
/// As [`omni_scene_load`].
#[no_mangle]
pub unsafe extern "C" fn omni_scene_from_json(
    json: *const c_char,
    out: *mut *mut OmniScene,
) -> OmniStatus {
    guard(|| {
        let json = c_str(json, "json")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let bundle = parse_scene_str(json)?;
        write(out, boxed_scene(bundle), "out")
    })
}

/// The built-in 640-element prototype scene.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn omni_scene_prototype(out: *mut *mut OmniScene) -> OmniStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        write(out, boxed_scene(SceneBundle::prototype()), "out")
    })
}

/// Releases a scene. Null is ignored.
///
/// # Safety
/// `scene` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn omni_scene_free(scene: *mut OmniScene) {
    if !scene.is_null() {
        drop(Box::from_raw(scene));
    }
}

/// Writes element, group, user and BS antenna counts. Any output pointer
/// may be null to skip it.
///
/// # Safety
/// `scene` must be a live handle; non-null outputs must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn omni_scene_counts(
    scene: *const OmniScene,
    elements: *mut usize,
    groups: *mut usize,
    users: *mut usize,
    antennas: *mut usize,
) -> OmniStatus {
    guard(|| {
        let b = &deref(scene, "scene")?.bundle;
        for (ptr, value) in [
            (elements, b.layout.len()),
            (groups, b.layout.num_groups),
            (users, b.scene.users.len()),
            (antennas, b.scene.bs_antennas.len()),
        ] {
            if !ptr.is_null() {
                ptr.write(value);
            }
        }
        Ok(())
    })
}

/// Runs an optimizer. `params` may be null for the defaults.
///
/// # Safety
/// `scene` must be a live handle, `params` null or valid, `out` valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn omni_optimize(
    scene: *const OmniScene,
    params: *const OmniOptimizeParams,
    out: *mut *mut OmniOutcome,
) -> OmniStatus {
    guard(|| {
        let b = &deref(scene, "scene")?.bundle;
        let p = params.as_ref().copied().unwrap_or_default();
        if out.is_null() {
            return Err(null("out"));
        }
        let granularity = match p.granularity {
            OmniGranularity::Element => Granularity::PerElement,
            OmniGranularity::Group => Granularity::PerGroup,
        };
        let (scene, layout, table) = (&b.scene, &b.layout, &b.table);
        let outcome = match p.optimizer {
            OmniOptimizer::Greedy => {
                greedy_optimize(scene, layout, table, granularity, p.max_sweeps, p.epsilon)?
            }
            OmniOptimizer::Exhaustive => exhaustive_optimize(scene, layout, table, granularity)?,
            OmniOptimizer::Random => {
                random_baseline(scene, layout, table, granularity, p.trials, p.seed)?
            }
            OmniOptimizer::Statistical => statistical_optimize(
                scene,
                layout,
                table,
                &FadingModel::from_db(p.k_factor_db),
                p.samples,
                p.seed,
                granularity,
                p.max_sweeps,
                p.epsilon,
            )?,
        };
        write(out, Box::into_raw(Box::new(OmniOutcome { outcome })), "out")
    })
}

/// Releases an outcome. Null is ignored.
///
/// # Safety
/// `outcome` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn omni_outcome_free(outcome: *mut OmniOutcome) {
    if !outcome.is_null() {
        drop(Box::from_raw(outcome));
    }
}

/// Sum rate in bits/s/Hz and whether the channel was degenerate.
///
/// # Safety
/// `outcome` must be a live handle; outputs valid for writes or null to skip.
#[no_mangle]
pub unsafe extern "C" fn omni_outcome_objective(
    outcome: *const OmniOutcome,
    sum_rate: *mut f64,
    degenerate: *mut bool,
) -> OmniStatus {
    guard(|| {
        let o = &deref(outcome, "outcome")?.outcome;
        if !sum_rate.is_null() {
            sum_rate.write(o.objective);
        }
        if !degenerate.is_null() {
            degenerate.write(o.degenerate);
        }
        Ok(())
    })
}

/// Copies per-user rates into `buf`, which must hold the scene's user count.
///
/// # Safety
/// `outcome` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn omni_outcome_per_user_rate(
    outcome: *const OmniOutcome,
    buf: *mut f64,
    len: usize,
) -> OmniStatus {
    guard(|| copy_out(&deref(outcome, "outcome")?.outcome.per_user_rate, buf, len))
}

/// Copies one state index per element into `buf`, which must hold the
/// scene's element count.
///
/// # Safety
/// `outcome` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn omni_outcome_element_states(
    outcome: *const OmniOutcome,
    buf: *mut u32,
    len: usize,
) -> OmniStatus {
    guard(|| {
        let states: Vec<u32> = deref(outcome, "outcome")?
            .outcome
            .config
            .state_index
            .iter()
            .map(|&s| s as u32)
            .collect();
        copy_out(&states, buf, len)
    })
}

/// Number of objective evaluations the optimizer performed.
///
/// # Safety
/// `outcome` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn omni_outcome_evaluations(
    outcome: *const OmniOutcome,
    out: *mut usize,
) -> OmniStatus {
    guard(|| write(out, deref(outcome, "outcome")?.outcome.evaluations, "out"))
}

/// ZF sum rate of a per-element configuration of `len` state indices.
///
/// # Safety
/// `scene` must be a live handle, `states` valid for `len` reads and `out`
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn omni_sum_rate(
    scene: *const OmniScene,
    states: *const u32,
    len: usize,
    out: *mut f64,
) -> OmniStatus {
    guard(|| {
        let s = deref(scene, "scene")?;
        let config = config_from(s, states, len)?;
        let b = &s.bundle;
        write(
            out,
            sum_rate(&b.scene, &b.layout, &b.table, &config)?.sum_rate,
            "out",
        )
    })
}

/// Received SNR in dB at `(x, y, z)` for a per-element configuration.
///
/// # Safety
/// As [`omni_sum_rate`].
#[no_mangle]
pub unsafe extern "C" fn omni_snr_at(
    scene: *const OmniScene,
    states: *const u32,
    len: usize,
    x: f64,
    y: f64,
    z: f64,
    out: *mut f64,
) -> OmniStatus {
    guard(|| {
        let s = deref(scene, "scene")?;
        let config = config_from(s, states, len)?;
        let b = &s.bundle;
        write(
            out,
            snr_at(&b.scene, &b.layout, &b.table, &config, Vec3::new(x, y, z))?,
            "out",
        )
    })
}
