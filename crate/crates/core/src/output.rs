//! Artifact serialization: CSV sweeps, PGM heatmaps, JSON run reports.

use std::fmt::Write as _;

use serde::Serialize;

use crate::analysis::{CoverageMap, RadiationPattern};
use crate::beamforming::OptimizationOutcome;
use crate::element::Granularity;
use crate::scenefile::SceneFile;

/// Six significant digits, `%g` style, `.` as decimal separator.
pub fn fmt_g6(value: f64) -> String {
    if value.is_nan() {
        return "nan".into();
    }
    if value.is_infinite() {
        return if value > 0.0 { "inf" } else { "-inf" }.into();
    }
    if value == 0.0 {
        return "0".into();
    }
    let sci = format!("{value:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{value:.decimals$}"))
    } else {
        format!(
            "{}e{}{:02}",
            trim_zeros(mantissa.to_string()),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn pattern_csv(pattern: &RadiationPattern) -> String {
    let mut out = String::from("angle_deg,power_db,side\n");
    for s in &pattern.samples {
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt_g6(s.angle_deg),
            fmt_g6(s.power_db),
            s.side
        );
    }
    out
}

pub fn coverage_csv(map: &CoverageMap) -> String {
    let mut out = String::from("x_m,y_m,se_bps_hz,side\n");
    let g = &map.grid;
    for iy in 0..g.ny {
        for ix in 0..g.nx {
            let cell = iy * g.nx + ix;
            let (se, side) = match (map.values[cell], map.sides[cell]) {
                (Some(v), Some(s)) => (fmt_g6(v), s.as_str()),
                _ => ("nan".to_string(), "masked"),
            };
            let _ = writeln!(
                out,
                "{},{},{},{}",
                fmt_g6(g.x(ix)),
                fmt_g6(g.y(iy)),
                se,
                side
            );
        }
    }
    out
}

/// Binary 8-bit PGM scaled linearly from the map's minimum to maximum.
/// The top image row is the largest y; masked cells are black.
pub fn coverage_pgm(map: &CoverageMap) -> Vec<u8> {
    let g = &map.grid;
    let present = map.values.iter().flatten();
    let lo = present.clone().cloned().fold(f64::INFINITY, f64::min);
    let hi = present.cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let mut out = format!("P5\n{} {}\n255\n", g.nx, g.ny).into_bytes();
    for iy in (0..g.ny).rev() {
        for ix in 0..g.nx {
            let pixel = match map.value(ix, iy) {
                Some(v) if span > 0.0 => ((v - lo) / span * 255.0).round() as u8,
                Some(_) => 255,
                None => 0,
            };
            out.push(pixel);
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct OutcomeReport {
    pub objective: f64,
    pub per_user_rate: Vec<f64>,
    pub degenerate: bool,
    pub evaluations: usize,
    pub trace: Vec<(usize, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group_states: Option<Vec<usize>>,
    pub element_states: Vec<usize>,
}

impl OutcomeReport {
    pub fn new(outcome: &OptimizationOutcome) -> Self {
        let group_states = match outcome.config.granularity {
            Granularity::PerGroup => Some(outcome.unit_states.clone()),
            Granularity::PerElement => None,
        };
        Self {
            objective: outcome.objective,
            per_user_rate: outcome.per_user_rate.clone(),
            degenerate: outcome.degenerate,
            evaluations: outcome.evaluations,
            trace: outcome.trace.clone(),
            group_states,
            element_states: outcome.config.state_index.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunParameters {
    pub optimizer: String,
    pub granularity: String,
    pub seed: u64,
    pub sweeps: usize,
    pub epsilon: f64,
    pub trials: usize,
    pub samples: usize,
    pub k_factor_db: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub parameters: RunParameters,
    pub outcome: OutcomeReport,
    pub relaxed_upper_bound: f64,
    pub scene: SceneFile,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(fmt_g6(0.0), "0");
        assert_eq!(fmt_g6(1.0), "1");
        assert_eq!(fmt_g6(-12.5), "-12.5");
        assert_eq!(fmt_g6(4.56789123), "4.56789");
        assert_eq!(fmt_g6(123456.7), "123457");
        assert_eq!(fmt_g6(1234567.0), "1.23457e+06");
        assert_eq!(fmt_g6(0.000123456789), "0.000123457");
        assert_eq!(fmt_g6(1.5e-7), "1.5e-07");
        assert_eq!(fmt_g6(999999.5), "1e+06");
        assert_eq!(fmt_g6(-90.0), "-90");
        assert_eq!(fmt_g6(f64::NEG_INFINITY), "-inf");
    }
}
