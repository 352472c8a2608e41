//! Hybrid beamforming: a zero-forcing digital precoder at the BS combined
//! with discrete state selection at the panel.
//!
//! The digital precoder has a closed form once the panel configuration is
//! fixed, so the optimizers below search over panel states only and call
//! [`zf_precoder`] inside the objective. Power is split equally across
//! streams.
//!
//! Every optimizer evaluates the objective through the same
//! [`CascadedModel::channel`] path, so an outcome's objective is exactly what
//! [`sum_rate`] returns for its configuration.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{CascadedModel, ChannelMatrix, FadingModel, Scene};
use crate::element::{Configuration, Granularity, StateTable};
use crate::error::{Error, Result};
use crate::geometry::ElementLayout;

/// Gram matrices with a larger eigenvalue spread are treated as singular.
pub const MAX_CONDITION_NUMBER: f64 = 1e12;

/// Largest search space [`exhaustive_optimize`] will enumerate.
pub const EXHAUSTIVE_LIMIT: u64 = 1 << 20;

pub const DEFAULT_MAX_SWEEPS: usize = 10;
pub const DEFAULT_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerResult {
    /// Unit-norm ZF beam per user, `Nt × K`.
    pub precoder: DMatrix<Complex64>,
    /// Linear power per stream, watts.
    pub power_allocation: Vec<f64>,
    /// Amplitude gain `1/‖w̄_k‖` each user sees through its own beam.
    pub effective_gain: Vec<f64>,
    pub per_user_rate: Vec<f64>,
    pub sum_rate: f64,
}

impl BeamformerResult {
    pub fn total_power(&self) -> f64 {
        self.power_allocation
            .iter()
            .enumerate()
            .map(|(k, p)| p * self.precoder.column(k).norm_squared())
            .sum()
    }
}

/// Right pseudo-inverse `Hᴴ(HHᴴ)⁻¹`, so that `H·W̄ = I`.
pub fn zf_pseudo_inverse(h: &ChannelMatrix) -> Result<DMatrix<Complex64>> {
    let (users, antennas) = (h.users(), h.antennas());
    if users > antennas {
        return Err(Error::TooManyUsers { users, antennas });
    }
    if users == 0 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: 0,
        });
    }
    let hh = h.0.adjoint();
    let gram = &h.0 * &hh;
    let eig = gram.clone().symmetric_eigenvalues();
    let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if condition.is_nan() || condition >= MAX_CONDITION_NUMBER {
        return Err(Error::RankDeficient { condition });
    }
    let inv = gram
        .cholesky()
        .map(|c| c.inverse())
        .ok_or(Error::RankDeficient { condition })?;
    Ok(hh * inv)
}

/// Zero-forcing precoder with equal power `P/K` per stream.
///
/// User `k` receives `SINR_k = (P/K) / (σ²·‖w̄_k‖²)` where `w̄_k` is column
/// `k` of the pseudo-inverse.
pub fn zf_precoder(
    h: &ChannelMatrix,
    total_power: f64,
    noise_power: f64,
) -> Result<BeamformerResult> {
    let w = zf_pseudo_inverse(h)?;
    let k_users = h.users();
    let per_stream = total_power / k_users as f64;
    let mut precoder = w.clone();
    let mut effective_gain = Vec::with_capacity(k_users);
    let mut per_user_rate = Vec::with_capacity(k_users);
    for k in 0..k_users {
        let norm_sq = w.column(k).norm_squared();
        let norm = norm_sq.sqrt();
        precoder.column_mut(k).unscale_mut(norm);
        effective_gain.push(1.0 / norm);
        let sinr = per_stream / (noise_power * norm_sq);
        per_user_rate.push((1.0 + sinr).log2());
    }
    let sum_rate = per_user_rate.iter().sum();
    Ok(BeamformerResult {
        precoder,
        power_allocation: vec![per_stream; k_users],
        effective_gain,
        per_user_rate,
        sum_rate,
    })
}

/// Rates for one configuration. A singular channel is not an error here:
/// it yields zero rates with `degenerate` set.
#[derive(Debug, Clone, PartialEq)]
pub struct RateEvaluation {
    pub sum_rate: f64,
    pub per_user_rate: Vec<f64>,
    pub degenerate: bool,
}

impl RateEvaluation {
    fn degenerate(users: usize) -> Self {
        Self {
            sum_rate: 0.0,
            per_user_rate: vec![0.0; users],
            degenerate: true,
        }
    }
}

fn rates_for(h: &ChannelMatrix, total_power: f64, noise_power: f64) -> Result<RateEvaluation> {
    match zf_precoder(h, total_power, noise_power) {
        Ok(bf) => Ok(RateEvaluation {
            sum_rate: bf.sum_rate,
            per_user_rate: bf.per_user_rate,
            degenerate: false,
        }),
        Err(Error::RankDeficient { .. }) => Ok(RateEvaluation::degenerate(h.users())),
        Err(e) => Err(e),
    }
}

/// Sum-rate objective over one or more channel realizations (their mean).
pub struct SumRateObjective<'a> {
    models: Vec<CascadedModel>,
    table: &'a StateTable,
    total_power: f64,
    noise_power: f64,
}

impl<'a> SumRateObjective<'a> {
    pub fn new(scene: &Scene, layout: &ElementLayout, table: &'a StateTable) -> Result<Self> {
        Ok(Self::from_models(
            vec![CascadedModel::new(scene, layout)?],
            table,
            scene.effective_tx_power_w(),
            scene.noise_power_w(),
        ))
    }

    pub fn from_models(
        models: Vec<CascadedModel>,
        table: &'a StateTable,
        total_power: f64,
        noise_power: f64,
    ) -> Self {
        assert!(
            !models.is_empty(),
            "objective needs at least one channel realization"
        );
        Self {
            models,
            table,
            total_power,
            noise_power,
        }
    }

    pub fn num_realizations(&self) -> usize {
        self.models.len()
    }

    pub fn evaluate(&self, config: &Configuration) -> Result<RateEvaluation> {
        if let [model] = self.models.as_slice() {
            let h = model.channel(self.table, config)?;
            return rates_for(&h, self.total_power, self.noise_power);
        }
        let per_sample: Vec<RateEvaluation> = self
            .models
            .par_iter()
            .map(|m| {
                rates_for(
                    &m.channel(self.table, config)?,
                    self.total_power,
                    self.noise_power,
                )
            })
            .collect::<Result<_>>()?;
        let n = per_sample.len() as f64;
        let users = per_sample[0].per_user_rate.len();
        let mut sum = 0.0;
        let mut per_user = vec![0.0; users];
        let mut degenerate = true;
        for r in &per_sample {
            sum += r.sum_rate;
            for (acc, x) in per_user.iter_mut().zip(&r.per_user_rate) {
                *acc += x;
            }
            degenerate &= r.degenerate;
        }
        Ok(RateEvaluation {
            sum_rate: sum / n,
            per_user_rate: per_user.into_iter().map(|x| x / n).collect(),
            degenerate,
        })
    }
}

/// Cascaded channel → ZF → sum rate for one configuration.
pub fn sum_rate(
    scene: &Scene,
    layout: &ElementLayout,
    table: &StateTable,
    config: &Configuration,
) -> Result<RateEvaluation> {
    SumRateObjective::new(scene, layout, table)?.evaluate(config)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationOutcome {
    pub config: Configuration,
    /// One state per optimization unit (element or group).
    pub unit_states: Vec<usize>,
    pub objective: f64,
    pub per_user_rate: Vec<f64>,
    pub degenerate: bool,
    /// `(sweep, objective)`; sweep 0 is the starting point.
    pub trace: Vec<(usize, f64)>,
    pub evaluations: usize,
}

/// Maps unit states onto the element configuration.
struct UnitMap<'l> {
    layout: &'l ElementLayout,
    granularity: Granularity,
    members: Vec<Vec<usize>>,
}

impl<'l> UnitMap<'l> {
    fn new(layout: &'l ElementLayout, granularity: Granularity) -> Self {
        Self {
            layout,
            granularity,
            members: granularity.units(layout),
        }
    }

    fn len(&self) -> usize {
        self.members.len()
    }

    fn set(&self, config: &mut Configuration, unit: usize, state: usize) {
        for &m in &self.members[unit] {
            config.state_index[m] = state;
        }
    }

    fn config(&self, unit_states: &[usize]) -> Configuration {
        Configuration::from_unit_states(self.layout, self.granularity, unit_states)
            .expect("unit state count matches the layout")
    }
}

fn outcome(
    units: &UnitMap<'_>,
    unit_states: Vec<usize>,
    eval: RateEvaluation,
    trace: Vec<(usize, f64)>,
    evaluations: usize,
) -> OptimizationOutcome {
    OptimizationOutcome {
        config: units.config(&unit_states),
        unit_states,
        objective: eval.sum_rate,
        per_user_rate: eval.per_user_rate,
        degenerate: eval.degenerate,
        trace,
        evaluations,
    }
}

fn relative_improvement(before: f64, after: f64) -> f64 {
    if before > 0.0 {
        (after - before) / before
    } else if after > before {
        f64::INFINITY
    } else {
        0.0
    }
}

/// One-unit-at-a-time coordinate ascent from the all-zero configuration.
fn coordinate_ascent(
    objective: &SumRateObjective<'_>,
    units: &UnitMap<'_>,
    max_sweeps: usize,
    epsilon: f64,
) -> Result<OptimizationOutcome> {
    let num_states = objective.table.len();
    let mut unit_states = vec![0usize; units.len()];
    let mut config = units.config(&unit_states);
    let mut current = objective.evaluate(&config)?;
    let mut evaluations = 1;
    let mut trace = vec![(0, current.sum_rate)];

    for sweep in 1..=max_sweeps {
        let before = current.sum_rate;
        for (unit, slot) in unit_states.iter_mut().enumerate() {
            let keep = *slot;
            let mut best_state = keep;
            let mut best = current.clone();
            for state in (0..num_states).filter(|&s| s != keep) {
                units.set(&mut config, unit, state);
                let candidate = objective.evaluate(&config)?;
                evaluations += 1;
                if candidate.sum_rate > best.sum_rate {
                    best_state = state;
                    best = candidate;
                }
            }
            units.set(&mut config, unit, best_state);
            *slot = best_state;
            current = best;
        }
        trace.push((sweep, current.sum_rate));
        if relative_improvement(before, current.sum_rate) < epsilon {
            break;
        }
    }
    Ok(outcome(units, unit_states, current, trace, evaluations))
}

/// Greedy one-by-one state optimization.
///
/// Units start in state 0 and are visited in row-major order; each takes
/// the state with the highest sum rate while the others stay fixed (ties
/// keep the current state, otherwise the lowest index wins). Sweeps repeat
/// until the relative improvement of a sweep drops below `epsilon` or
/// `max_sweeps` is reached.
pub fn greedy_optimize(
    scene: &Scene,
    layout: &ElementLayout,
    table: &StateTable,
    granularity: Granularity,
    max_sweeps: usize,
    epsilon: f64,
) -> Result<OptimizationOutcome> {
    let objective = SumRateObjective::new(scene, layout, table)?;
    coordinate_ascent(
        &objective,
        &UnitMap::new(layout, granularity),
        max_sweeps,
        epsilon,
    )
}

fn search_space(num_states: usize, units: usize) -> Result<u64> {
    let size = (num_states as f64).powi(units as i32);
    if size > EXHAUSTIVE_LIMIT as f64 {
        return Err(Error::SearchSpaceTooLarge {
            size,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    Ok(size as u64)
}

/// Unit states for enumeration index `index`; unit 0 is the most
/// significant digit, so index order is lexicographic order.
fn decode(mut index: u64, num_states: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = (index % num_states as u64) as usize;
        index /= num_states as u64;
    }
}

/// Global optimum by enumerating every configuration. Ties go to the
/// lexicographically smallest configuration.
pub fn exhaustive_optimize(
    scene: &Scene,
    layout: &ElementLayout,
    table: &StateTable,
    granularity: Granularity,
) -> Result<OptimizationOutcome> {
    let units = UnitMap::new(layout, granularity);
    let size = search_space(table.len(), units.len())?;
    let objective = SumRateObjective::new(scene, layout, table)?;

    const CHUNK: u64 = 1024;
    let chunks = size.div_ceil(CHUNK);
    let best = (0..chunks)
        .into_par_iter()
        .map(|chunk| -> Result<(f64, u64)> {
            let mut states = vec![0; units.len()];
            let mut config = units.config(&states);
            let mut best = (f64::NEG_INFINITY, u64::MAX);
            for index in chunk * CHUNK..((chunk + 1) * CHUNK).min(size) {
                decode(index, table.len(), &mut states);
                for (unit, &s) in states.iter().enumerate() {
                    units.set(&mut config, unit, s);
                }
                let value = objective.evaluate(&config)?.sum_rate;
                if value > best.0 {
                    best = (value, index);
                }
            }
            Ok(best)
        })
        .try_reduce(
            || (f64::NEG_INFINITY, u64::MAX),
            |a, b| {
                Ok(if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                })
            },
        )?;

    let mut unit_states = vec![0; units.len()];
    decode(best.1, table.len(), &mut unit_states);
    let eval = objective.evaluate(&units.config(&unit_states))?;
    Ok(outcome(
        &units,
        unit_states,
        eval,
        vec![(0, best.0)],
        size as usize,
    ))
}

/// Best of `trials` uniformly drawn configurations.
pub fn random_baseline(
    scene: &Scene,
    layout: &ElementLayout,
    table: &StateTable,
    granularity: Granularity,
    trials: usize,
    seed: u64,
) -> Result<OptimizationOutcome> {
    if trials == 0 {
        return Err(Error::Usage(
            "random baseline needs at least one trial".into(),
        ));
    }
    let units = UnitMap::new(layout, granularity);
    let objective = SumRateObjective::new(scene, layout, table)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<Vec<usize>> = (0..trials)
        .map(|_| {
            (0..units.len())
                .map(|_| rng.random_range(0..table.len()))
                .collect()
        })
        .collect();
    let evals: Vec<RateEvaluation> = draws
        .par_iter()
        .map(|states| objective.evaluate(&units.config(states)))
        .collect::<Result<_>>()?;

    let mut best = 0;
    for (i, e) in evals.iter().enumerate() {
        if e.sum_rate > evals[best].sum_rate {
            best = i;
        }
    }
    let eval = evals[best].clone();
    let trace = vec![(0, eval.sum_rate)];
    Ok(outcome(&units, draws[best].clone(), eval, trace, trials))
}

/// Upper bound on the ZF sum rate over all configurations, from letting
/// each element co-phase its path to each user at the best amplitude
/// available on that user's side. Not necessarily tight.
pub fn relaxed_upper_bound(
    scene: &Scene,
    layout: &ElementLayout,
    table: &StateTable,
) -> Result<f64> {
    let model = CascadedModel::new(scene, layout)?;
    let per_stream = scene.effective_tx_power_w() / scene.users.len() as f64;
    let noise = scene.noise_power_w();
    Ok(model
        .co_phased_norm_bound(table)
        .iter()
        .map(|b| (1.0 + per_stream * b * b / noise).log2())
        .sum())
}

/// Greedy optimization against the mean sum rate over `num_samples` Rician
/// realizations drawn once from `seed` and shared by every candidate. The
/// ZF precoder is recomputed per realization.
#[allow(clippy::too_many_arguments)]
pub fn statistical_optimize(
    scene: &Scene,
    layout: &ElementLayout,
    table: &StateTable,
    fading: &FadingModel,
    num_samples: usize,
    seed: u64,
    granularity: Granularity,
    max_sweeps: usize,
    epsilon: f64,
) -> Result<OptimizationOutcome> {
    let objective = statistical_objective(scene, layout, table, fading, num_samples, seed)?;
    coordinate_ascent(
        &objective,
        &UnitMap::new(layout, granularity),
        max_sweeps,
        epsilon,
    )
}

/// The sample-average objective used by [`statistical_optimize`]. Without
/// fading every realization is identical, so only one is kept.
pub fn statistical_objective<'a>(
    scene: &Scene,
    layout: &ElementLayout,
    table: &'a StateTable,
    fading: &FadingModel,
    num_samples: usize,
    seed: u64,
) -> Result<SumRateObjective<'a>> {
    if num_samples == 0 {
        return Err(Error::Usage(
            "statistical optimization needs at least one sample".into(),
        ));
    }
    let base = CascadedModel::new(scene, layout)?;
    let models = if fading.is_degenerate() {
        vec![base]
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..num_samples)
            .map(|_| base.faded(fading, &mut rng))
            .collect()
    };
    Ok(SumRateObjective::from_models(
        models,
        table,
        scene.effective_tx_power_w(),
        scene.noise_power_w(),
    ))
}
