//! Evaluation artifacts: radiation patterns over angle, spectral-efficiency
//! maps over a plane, and point SNRs.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::{element_factor, friis_gain, linear_to_db, CascadedModel, Scene};
use crate::element::{Configuration, StateTable};
use crate::error::{Error, Result};
use crate::geometry::{ElementLayout, Side, Vec3};

pub const DEFAULT_EVAL_RADIUS_M: f64 = 100.0;

/// Plane in which a pattern is swept. Both contain the panel normal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cut {
    /// Spanned by the normal and the panel `u` axis.
    Horizontal,
    /// Spanned by the normal and the panel `v` axis.
    Vertical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternSample {
    /// Angle from the side's outward normal toward the cut's in-panel axis.
    pub angle_deg: f64,
    /// Normalized to the side's maximum.
    pub power_db: f64,
    pub side: Side,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadiationPattern {
    pub samples: Vec<PatternSample>,
    /// Probes that fell on the wrong side or in the panel plane.
    pub skipped: usize,
}

/// Sweep angles `k·step` strictly inside (−90°, 90°), always including 0°.
pub fn sweep_angles(step_deg: f64) -> Vec<f64> {
    let mut positive = Vec::new();
    let mut k = 1u64;
    loop {
        let a = k as f64 * step_deg;
        if a >= 90.0 {
            break;
        }
        positive.push(a);
        k += 1;
    }
    positive
        .iter()
        .rev()
        .map(|a| -a)
        .chain(std::iter::once(0.0))
        .chain(positive.iter().copied())
        .collect()
}

/// Far-field style pattern of the panel under a fixed configuration.
///
/// Each BS antenna feeds the panel with unit weight; a probe at
/// `eval_radius` collects `|Σ_m incident_m·Γ_m·g(p_m → probe)|²`. Each
/// side's sweep is normalized to its own peak.
#[allow(clippy::too_many_arguments)]
pub fn radiation_pattern(
    scene: &Scene,
    layout: &ElementLayout,
    table: &StateTable,
    config: &Configuration,
    sides: &[Side],
    cut: Cut,
    step_deg: f64,
    eval_radius: f64,
) -> Result<RadiationPattern> {
    if !(step_deg > 0.0 && step_deg.is_finite()) {
        return Err(Error::Usage(format!(
            "angular step must be positive, got {step_deg}"
        )));
    }
    if !(eval_radius > 0.0 && eval_radius.is_finite()) {
        return Err(Error::Usage(format!(
            "evaluation radius must be positive, got {eval_radius}"
        )));
    }
    let model = CascadedModel::new(scene, layout)?;
    config.validate(layout, table)?;

    let incident: Vec<Complex64> = (0..layout.len())
        .map(|m| {
            (0..model.num_antennas())
                .map(|n| model.incident(n, m))
                .sum()
        })
        .collect();
    let panel = &scene.panel;
    let towards_bs = if panel.signed_distance(scene.bs_antennas[0]) > 0.0 {
        panel.normal
    } else {
        -panel.normal
    };
    let axis = match cut {
        Cut::Horizontal => layout.u,
        Cut::Vertical => layout.v,
    };
    let lambda = scene.wavelength();
    let q = scene.options.element_factor_q;
    let angles = sweep_angles(step_deg);

    let mut samples = Vec::new();
    let mut skipped = 0;
    for &side in sides {
        let outward = match side {
            Side::Reflection => towards_bs,
            Side::Refraction => -towards_bs,
        };
        let gamma: Vec<Complex64> = config
            .state_index
            .iter()
            .map(|&s| table.states()[s].side(side).to_complex())
            .collect();
        let powers: Vec<Option<f64>> = angles
            .par_iter()
            .map(|&deg| {
                let t = deg.to_radians();
                let probe = panel.center + (outward * t.cos() + axis * t.sin()) * eval_radius;
                if scene.side_of(probe).ok() != Some(side) {
                    return Ok(None);
                }
                let mut acc = Complex64::new(0.0, 0.0);
                for (m, &p) in layout.positions.iter().enumerate() {
                    let g = friis_gain(p.distance(probe), lambda)?
                        * element_factor(probe, p, panel.normal, q);
                    acc += incident[m] * gamma[m] * g;
                }
                Ok(Some(acc.norm_sqr()))
            })
            .collect::<Result<_>>()?;

        let peak = powers.iter().flatten().cloned().fold(0.0, f64::max);
        for (&angle_deg, p) in angles.iter().zip(&powers) {
            match p {
                Some(p) => samples.push(PatternSample {
                    angle_deg,
                    power_db: if peak > 0.0 {
                        linear_to_db(p / peak)
                    } else {
                        f64::NEG_INFINITY
                    },
                    side,
                }),
                None => skipped += 1,
            }
        }
    }
    Ok(RadiationPattern { samples, skipped })
}

/// Rectangular grid in the plane spanned by the panel `u` axis (x) and the
/// panel normal (y), through the panel center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::Usage(
                "grid needs at least one cell along each axis".into(),
            ));
        }
        if ![self.x0, self.x1, self.y0, self.y1]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::Usage("grid bounds must be finite".into()));
        }
        Ok(())
    }

    fn coord(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
        if n == 1 {
            lo
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    }

    pub fn x(&self, ix: usize) -> f64 {
        Self::coord(self.x0, self.x1, self.nx, ix)
    }

    pub fn y(&self, iy: usize) -> f64 {
        Self::coord(self.y0, self.y1, self.ny, iy)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageMap {
    pub grid: GridSpec,
    /// Row-major over `(iy, ix)`; `None` marks cells in the panel plane.
    pub values: Vec<Option<f64>>,
    pub sides: Vec<Option<Side>>,
}

impl CoverageMap {
    pub fn value(&self, ix: usize, iy: usize) -> Option<f64> {
        self.values[iy * self.grid.nx + ix]
    }
}

/// Spectral efficiency `log2(1 + P·‖h‖²/σ²)` of a virtual single-antenna
/// user at every grid cell, with unit antenna gains.
pub fn coverage_map(
    scene: &Scene,
    layout: &ElementLayout,
    table: &StateTable,
    config: &Configuration,
    grid: GridSpec,
) -> Result<CoverageMap> {
    grid.validate()?;
    let model = CascadedModel::new(scene, layout)?;
    config.validate(layout, table)?;
    let snr_scale = scene.tx_power_w() / scene.noise_power_w();
    let center = scene.panel.center;
    let normal = scene.panel.normal;

    let cells: Vec<(Option<f64>, Option<Side>)> = (0..grid.len())
        .into_par_iter()
        .map(|cell| {
            let (ix, iy) = (cell % grid.nx, cell / grid.nx);
            let point = center + layout.u * grid.x(ix) + normal * grid.y(iy);
            match scene.side_of(point) {
                Ok(side) => {
                    let h = model.channel_to_point(scene, table, config, point)?;
                    let gain: f64 = h.iter().map(|z| z.norm_sqr()).sum();
                    Ok((Some((1.0 + snr_scale * gain).log2()), Some(side)))
                }
                Err(Error::SideUndefined { .. }) => Ok((None, None)),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let (values, sides) = cells.into_iter().unzip();
    Ok(CoverageMap {
        grid,
        values,
        sides,
    })
}

/// Received SNR in dB at `point`, with transmit/receive antenna and LNA
/// gains from the scene.
pub fn snr_at(
    scene: &Scene,
    layout: &ElementLayout,
    table: &StateTable,
    config: &Configuration,
    point: Vec3,
) -> Result<f64> {
    let model = CascadedModel::new(scene, layout)?;
    let h = model.channel_to_point(scene, table, config, point)?;
    let gain: f64 = h.iter().map(|z| z.norm_sqr()).sum();
    Ok(linear_to_db(
        scene.effective_tx_power_w() * gain / scene.noise_power_w(),
    ))
}
