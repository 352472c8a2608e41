//! Discrete element states and their paired reflection/refraction responses.
//!
//! Every state fixes both coefficients at once: choosing a state for one
//! side also decides what the element does on the other side. Coefficients
//! do not depend on the direction of incidence.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ElementLayout, Side};

/// Tolerance on `amp² − declared power`.
pub const DECLARED_POWER_TOLERANCE: f64 = 0.005;

/// Amplitude and phase (radians, wrapped to `[0, 2π)`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficient {
    pub amp: f64,
    pub phase: f64,
}

impl Coefficient {
    pub fn new(amp: f64, phase: f64) -> Self {
        Self {
            amp,
            phase: wrap_phase(phase),
        }
    }

    pub fn from_degrees(amp: f64, phase_deg: f64) -> Self {
        Self::new(amp, phase_deg.to_radians())
    }

    pub fn power(&self) -> f64 {
        self.amp * self.amp
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::from_polar(self.amp, self.phase)
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_phase(phase: f64) -> f64 {
    let w = phase.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Shortest angular distance between two phases, in `[0, π]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = wrap_phase(a - b);
    d.min(TAU - d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientPair {
    pub reflection: Coefficient,
    pub refraction: Coefficient,
}

impl CoefficientPair {
    pub fn new(reflection: Coefficient, refraction: Coefficient) -> Self {
        Self {
            reflection,
            refraction,
        }
    }

    pub fn from_degrees(r_amp: f64, r_phase_deg: f64, t_amp: f64, t_phase_deg: f64) -> Self {
        Self::new(
            Coefficient::from_degrees(r_amp, r_phase_deg),
            Coefficient::from_degrees(t_amp, t_phase_deg),
        )
    }

    pub fn side(&self, side: Side) -> Coefficient {
        match side {
            Side::Reflection => self.reflection,
            Side::Refraction => self.refraction,
        }
    }

    /// Reflected plus refracted power.
    pub fn total_power(&self) -> f64 {
        self.reflection.power() + self.refraction.power()
    }
}

/// Tabulated powers to cross-check amplitudes against.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DeclaredPower {
    pub reflection: Option<f64>,
    pub refraction: Option<f64>,
}

/// Ordered set of states an element can take.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTable {
    states: Vec<CoefficientPair>,
    declared: Vec<DeclaredPower>,
    pin_diodes: Option<u32>,
    phase_wrapped: Vec<bool>,
}

impl StateTable {
    /// Builds a table, checking structure only: at least one state, finite
    /// values and amplitudes within `[0, 1]`. Passivity and declared-power
    /// consistency are reported by [`validate_table`].
    pub fn new(states: Vec<CoefficientPair>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidTable("at least one state is required".into()));
        }
        for (i, s) in states.iter().enumerate() {
            for (side, c) in [("reflection", s.reflection), ("refraction", s.refraction)] {
                if !c.amp.is_finite() || !c.phase.is_finite() {
                    return Err(Error::InvalidTable(format!(
                        "state {i} {side}: non-finite value"
                    )));
                }
                if !(0.0..=1.0).contains(&c.amp) {
                    return Err(Error::InvalidTable(format!(
                        "state {i} {side}: amplitude {} outside [0, 1]",
                        c.amp
                    )));
                }
            }
        }
        let n = states.len();
        Ok(Self {
            states,
            declared: vec![DeclaredPower::default(); n],
            pin_diodes: None,
            phase_wrapped: vec![false; n],
        })
    }

    /// Builds a table from amplitudes and phases in degrees, remembering
    /// which phases had to be wrapped into `[0°, 360°)`.
    pub fn from_degrees(rows: &[(f64, f64, f64, f64)]) -> Result<Self> {
        let states = rows
            .iter()
            .map(|&(ra, rp, ta, tp)| CoefficientPair::from_degrees(ra, rp, ta, tp))
            .collect();
        let mut table = Self::new(states)?;
        table.phase_wrapped = rows
            .iter()
            .map(|&(_, rp, _, tp)| !(0.0..360.0).contains(&rp) || !(0.0..360.0).contains(&tp))
            .collect();
        Ok(table)
    }

    pub fn with_declared_powers(mut self, declared: Vec<DeclaredPower>) -> Result<Self> {
        if declared.len() != self.states.len() {
            return Err(Error::DimensionMismatch {
                expected: self.states.len(),
                found: declared.len(),
            });
        }
        self.declared = declared;
        Ok(self)
    }

    pub fn with_pin_diodes(mut self, diodes: u32) -> Result<Self> {
        let max_states = 1u128.checked_shl(diodes).unwrap_or(u128::MAX);
        if self.states.len() as u128 > max_states {
            return Err(Error::InvalidTable(format!(
                "{} states exceed the 2^{diodes} available with {diodes} PIN diodes",
                self.states.len()
            )));
        }
        self.pin_diodes = Some(diodes);
        Ok(self)
    }

    /// Two-state table of the 640-element prototype at 3.6 GHz: state 1
    /// (both diodes OFF) and state 2 (both ON), with declared powers.
    pub fn prototype() -> Self {
        Self::from_degrees(&[(0.46, 20.0, 0.58, 300.0), (0.55, 215.0, 0.81, 123.0)])
            .and_then(|t| {
                t.with_declared_powers(vec![
                    DeclaredPower {
                        reflection: Some(0.21),
                        refraction: Some(0.34),
                    },
                    DeclaredPower {
                        reflection: Some(0.30),
                        refraction: Some(0.66),
                    },
                ])
            })
            .and_then(|t| t.with_pin_diodes(2))
            .expect("prototype table is well-formed")
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[CoefficientPair] {
        &self.states
    }

    pub fn declared_powers(&self) -> &[DeclaredPower] {
        &self.declared
    }

    pub fn pin_diodes(&self) -> Option<u32> {
        self.pin_diodes
    }

    pub fn state(&self, index: usize) -> Result<&CoefficientPair> {
        self.states.get(index).ok_or(Error::StateOutOfRange {
            state: index,
            num_states: self.states.len(),
        })
    }

    /// Largest amplitude any state offers on `side`.
    pub fn max_amplitude(&self, side: Side) -> f64 {
        self.states
            .iter()
            .map(|s| s.side(side).amp)
            .fold(0.0, f64::max)
    }

    /// Refracted over reflected power of one state.
    pub fn power_ratio(&self, index: usize) -> Result<f64> {
        let s = self.state(index)?;
        Ok(s.refraction.power() / s.reflection.power())
    }
}

/// Complex coefficient `amp·e^{j·phase}` of `state` on `side`.
pub fn response(table: &StateTable, state: usize, side: Side) -> Result<Complex64> {
    Ok(table.state(state)?.side(side).to_complex())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateCheck {
    pub index: usize,
    pub total_power: f64,
    pub passive: bool,
    /// `amp² − declared` on the reflection side, when a power was declared.
    pub reflection_residual: Option<f64>,
    pub refraction_residual: Option<f64>,
    pub phase_wrapped: bool,
}

impl StateCheck {
    pub fn declared_ok(&self) -> bool {
        [self.reflection_residual, self.refraction_residual]
            .into_iter()
            .flatten()
            .all(|r| r.abs() <= DECLARED_POWER_TOLERANCE)
    }

    pub fn ok(&self) -> bool {
        self.passive && self.declared_ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableReport {
    pub states: Vec<StateCheck>,
}

impl TableReport {
    pub fn ok(&self) -> bool {
        self.states.iter().all(StateCheck::ok)
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for s in &self.states {
            if !s.passive {
                out.push(format!(
                    "state {}: reflected + refracted power {:.4} exceeds 1",
                    s.index, s.total_power
                ));
            }
            for (side, r) in [
                ("reflection", s.reflection_residual),
                ("refraction", s.refraction_residual),
            ] {
                if let Some(r) = r.filter(|r| r.abs() > DECLARED_POWER_TOLERANCE) {
                    out.push(format!(
                        "state {} {side}: amplitude squared differs from declared power by {r:.4}",
                        s.index
                    ));
                }
            }
        }
        out
    }
}

/// Checks passivity and declared-power consistency of every state.
pub fn validate_table(table: &StateTable) -> TableReport {
    let states = table
        .states
        .iter()
        .zip(&table.declared)
        .zip(&table.phase_wrapped)
        .enumerate()
        .map(|(index, ((s, declared), &phase_wrapped))| {
            let total_power = s.total_power();
            StateCheck {
                index,
                total_power,
                passive: total_power <= 1.0,
                reflection_residual: declared.reflection.map(|p| s.reflection.power() - p),
                refraction_residual: declared.refraction.map(|p| s.refraction.power() - p),
                phase_wrapped,
            }
        })
        .collect();
    TableReport { states }
}

/// State whose `side` phase is circularly closest to `target_phase`;
/// ties go to the lowest index.
pub fn quantize_phase(table: &StateTable, side: Side, target_phase: f64) -> usize {
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for (i, s) in table.states.iter().enumerate() {
        let d = circular_distance(s.side(side).phase, target_phase);
        if d < best_dist {
            best = i;
            best_dist = d;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    #[serde(rename = "element")]
    PerElement,
    #[serde(rename = "group")]
    PerGroup,
}

impl Granularity {
    /// Element indices controlled by each optimization unit.
    pub fn units(self, layout: &ElementLayout) -> Vec<Vec<usize>> {
        match self {
            Granularity::PerElement => (0..layout.len()).map(|m| vec![m]).collect(),
            Granularity::PerGroup => layout.group_members(),
        }
    }

    pub fn num_units(self, layout: &ElementLayout) -> usize {
        match self {
            Granularity::PerElement => layout.len(),
            Granularity::PerGroup => layout.num_groups,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::PerElement => "element",
            Granularity::PerGroup => "group",
        }
    }
}

/// One state index per element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    pub state_index: Vec<usize>,
    pub granularity: Granularity,
}

impl Configuration {
    pub fn per_element(state_index: Vec<usize>) -> Self {
        Self {
            state_index,
            granularity: Granularity::PerElement,
        }
    }

    pub fn uniform(layout: &ElementLayout, state: usize, granularity: Granularity) -> Self {
        Self {
            state_index: vec![state; layout.len()],
            granularity,
        }
    }

    /// Expands one state per unit into one state per element.
    pub fn from_unit_states(
        layout: &ElementLayout,
        granularity: Granularity,
        unit_states: &[usize],
    ) -> Result<Self> {
        let units = granularity.num_units(layout);
        if unit_states.len() != units {
            return Err(Error::DimensionMismatch {
                expected: units,
                found: unit_states.len(),
            });
        }
        let state_index = match granularity {
            Granularity::PerElement => unit_states.to_vec(),
            Granularity::PerGroup => layout.group_of.iter().map(|&g| unit_states[g]).collect(),
        };
        Ok(Self {
            state_index,
            granularity,
        })
    }

    pub fn from_group_states(layout: &ElementLayout, group_states: &[usize]) -> Result<Self> {
        Self::from_unit_states(layout, Granularity::PerGroup, group_states)
    }

    pub fn len(&self) -> usize {
        self.state_index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.state_index.is_empty()
    }

    /// Per-group states, or `None` when some group is not uniform.
    pub fn group_states(&self, layout: &ElementLayout) -> Option<Vec<usize>> {
        let mut out: Vec<Option<usize>> = vec![None; layout.num_groups];
        for (&g, &s) in layout.group_of.iter().zip(&self.state_index) {
            match out[g] {
                None => out[g] = Some(s),
                Some(prev) if prev != s => return None,
                _ => {}
            }
        }
        out.into_iter().collect()
    }

    pub fn validate(&self, layout: &ElementLayout, table: &StateTable) -> Result<()> {
        if self.state_index.len() != layout.len() {
            return Err(Error::DimensionMismatch {
                expected: layout.len(),
                found: self.state_index.len(),
            });
        }
        if let Some(&bad) = self.state_index.iter().find(|&&s| s >= table.len()) {
            return Err(Error::StateOutOfRange {
                state: bad,
                num_states: table.len(),
            });
        }
        if self.granularity == Granularity::PerGroup && self.group_states(layout).is_none() {
            return Err(Error::InvalidConfiguration(
                "group granularity requires one state per group".into(),
            ));
        }
        Ok(())
    }
}
