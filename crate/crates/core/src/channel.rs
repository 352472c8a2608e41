//! Free-space propagation, the cascaded BS → element → user channel, thermal
//! noise and dB link budgets.
//!
//! The cascaded channel is purely geometric plus the element responses;
//! antenna and LNA gains live in [`Gains`] and are folded in only where an
//! SNR is formed.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::element::{Configuration, StateTable};
use crate::error::{Error, Result};
use crate::geometry::{side_of, ElementLayout, PanelSpec, Side, Vec3};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Thermal noise density at 290 K, dBm/Hz.
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

pub fn wavelength(frequency_hz: f64) -> f64 {
    SPEED_OF_LIGHT / frequency_hz
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    linear_to_db(w) + 30.0
}

/// Free-space amplitude gain `λ/(4πd)·e^{−j2πd/λ}`.
pub fn friis_gain(distance: f64, wavelength: f64) -> Result<Complex64> {
    if distance.is_nan() || distance <= 0.0 {
        return Err(Error::NonPositiveDistance(distance));
    }
    let amp = wavelength / (4.0 * PI * distance);
    let phase = -2.0 * PI * (distance / wavelength).fract();
    Ok(Complex64::from_polar(amp, phase))
}

/// Free-space power gain in dB, `20·log10(λ/(4πd))`.
pub fn friis_power_db(distance: f64, wavelength: f64) -> Result<f64> {
    Ok(20.0 * friis_gain(distance, wavelength)?.norm().log10())
}

/// Thermal noise power over `bandwidth_hz`, dBm.
pub fn noise_power_dbm(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    THERMAL_NOISE_DBM_PER_HZ + 10.0 * bandwidth_hz.log10() + noise_figure_db
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkBudgetChain {
    pub tx_power_dbm: f64,
    pub items: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkBudget {
    pub tx_power_dbm: f64,
    pub items: Vec<(String, f64)>,
    pub received_dbm: f64,
}

/// Sums the transmit power and all gains. Terms are added in ascending order
/// so the total does not depend on item order.
pub fn link_budget(chain: &LinkBudgetChain) -> LinkBudget {
    let mut terms: Vec<f64> = std::iter::once(chain.tx_power_dbm)
        .chain(chain.items.iter().map(|(_, v)| *v))
        .collect();
    terms.sort_by(f64::total_cmp);
    LinkBudget {
        tx_power_dbm: chain.tx_power_dbm,
        items: chain.items.clone(),
        received_dbm: terms.iter().sum(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Gains {
    pub tx_antenna_db: f64,
    pub rx_antenna_db: f64,
    pub lna_db: f64,
}

impl Gains {
    pub fn chain_db(&self) -> f64 {
        self.tx_antenna_db + self.rx_antenna_db + self.lna_db
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ModelOptions {
    /// Adds the BS → user path for users on the BS side.
    pub direct_path: bool,
    /// Replaces the spherical BS → element wave by a unit-amplitude plane wave.
    pub plane_wave_incidence: bool,
    /// Exponent of the `cos^q` element factor; 0 disables it.
    pub element_factor_q: f64,
}

/// Channel gains measured on site, used by link budgets in place of the
/// free-space prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasuredChannel {
    pub tx_ios_db: f64,
    pub ios_rx_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub frequency_hz: f64,
    pub panel: PanelSpec,
    pub bs_antennas: Vec<Vec3>,
    pub users: Vec<Vec3>,
    pub tx_power_dbm: f64,
    pub noise: NoiseSpec,
    pub gains: Gains,
    pub options: ModelOptions,
    pub measured: Option<MeasuredChannel>,
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        let invalid = |m: String| Err(Error::InvalidScene(m));
        if !(self.frequency_hz > 0.0 && self.frequency_hz.is_finite()) {
            return invalid("frequency must be positive".into());
        }
        if !(self.noise.bandwidth_hz > 0.0 && self.noise.bandwidth_hz.is_finite()) {
            return invalid("bandwidth must be positive".into());
        }
        if self.bs_antennas.is_empty() {
            return invalid("at least one BS antenna".into());
        }
        if self.users.is_empty() {
            return invalid("at least one user".into());
        }
        let scalars = [
            self.tx_power_dbm,
            self.noise.noise_figure_db,
            self.gains.tx_antenna_db,
            self.gains.rx_antenna_db,
            self.gains.lna_db,
            self.options.element_factor_q,
        ];
        if scalars.iter().any(|v| !v.is_finite()) {
            return invalid("power, gain and option values must be finite".into());
        }
        if self.options.element_factor_q < 0.0 {
            return invalid("element factor exponent must be non-negative".into());
        }
        self.panel.validate()?;
        let reference = self.bs_antennas[0];
        for (n, &a) in self.bs_antennas.iter().enumerate() {
            if !a.is_finite() {
                return invalid(format!("BS antenna {n} is not finite"));
            }
            // every antenna must sit on the same side as the first
            if side_of(&self.panel, reference, a)? != Side::Reflection {
                return invalid(format!(
                    "BS antenna {n} is on the opposite side of the panel"
                ));
            }
        }
        for (k, &u) in self.users.iter().enumerate() {
            if !u.is_finite() {
                return invalid(format!("user {k} is not finite"));
            }
            side_of(&self.panel, reference, u).map_err(|_| {
                Error::InvalidScene(format!("user {k} at {u} lies in the panel plane"))
            })?;
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        wavelength(self.frequency_hz)
    }

    pub fn tx_power_w(&self) -> f64 {
        dbm_to_watts(self.tx_power_dbm)
    }

    pub fn noise_power_dbm(&self) -> f64 {
        noise_power_dbm(self.noise.bandwidth_hz, self.noise.noise_figure_db)
    }

    pub fn noise_power_w(&self) -> f64 {
        dbm_to_watts(self.noise_power_dbm())
    }

    /// Transmit power with antenna and LNA gains folded in, watts.
    pub fn effective_tx_power_w(&self) -> f64 {
        dbm_to_watts(self.tx_power_dbm + self.gains.chain_db())
    }

    pub fn side_of(&self, point: Vec3) -> Result<Side> {
        side_of(&self.panel, self.bs_antennas[0], point)
    }

    pub fn user_sides(&self) -> Result<Vec<Side>> {
        self.users.iter().map(|&u| self.side_of(u)).collect()
    }
}

/// Cascaded channel, `users × BS antennas`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix(pub DMatrix<Complex64>);

impl ChannelMatrix {
    pub fn zeros(users: usize, antennas: usize) -> Self {
        Self(DMatrix::zeros(users, antennas))
    }

    pub fn users(&self) -> usize {
        self.0.nrows()
    }

    pub fn antennas(&self) -> usize {
        self.0.ncols()
    }

    pub fn row_norm(&self, k: usize) -> f64 {
        self.0
            .row(k)
            .iter()
            .map(|h| h.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Rician small-scale overlay on the element → user and direct paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingModel {
    /// Linear K-factor; `f64::INFINITY` means no fading.
    pub k_factor: f64,
}

impl FadingModel {
    pub fn from_db(k_db: f64) -> Self {
        Self {
            k_factor: db_to_linear(k_db),
        }
    }

    pub fn none() -> Self {
        Self {
            k_factor: f64::INFINITY,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.k_factor.is_infinite()
    }

    fn weights(&self) -> (f64, f64) {
        if self.is_degenerate() {
            (1.0, 0.0)
        } else {
            let k = self.k_factor;
            ((k / (k + 1.0)).sqrt(), (1.0 / (k + 1.0)).sqrt())
        }
    }

    /// One multiplicative coefficient `√(K/(K+1)) + √(1/(K+1))·CN(0,1)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        let (los, scatter) = self.weights();
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(los, 0.0)
            + Complex64::new(re, im) * (scatter * std::f64::consts::FRAC_1_SQRT_2)
    }
}

/// Path gains between every terminal and every element, precomputed so a
/// configuration can be evaluated cheaply.
///
/// Entries are summed over elements in ascending index order, so the same
/// configuration always produces a bit-identical matrix.
#[derive(Debug, Clone)]
pub struct CascadedModel {
    num_users: usize,
    num_antennas: usize,
    num_elements: usize,
    /// `incident[n * M + m]`: BS antenna `n` → element `m`.
    incident: Vec<Complex64>,
    /// `outgoing[k * M + m]`: element `m` → user `k`.
    outgoing: Vec<Complex64>,
    /// `direct[k * Nt + n]`, `None` when the direct path is off or blocked.
    direct: Vec<Option<Complex64>>,
    user_sides: Vec<Side>,
    positions: Vec<Vec3>,
    normal: Vec3,
    wavelength: f64,
    element_factor_q: f64,
}

/// `cos^q` of the angle between the panel normal and the path from `element`
/// to `from`.
pub fn element_factor(from: Vec3, element: Vec3, normal: Vec3, q: f64) -> f64 {
    if q == 0.0 {
        return 1.0;
    }
    let d = from - element;
    (d.dot(normal).abs() / d.norm()).powf(q)
}

fn side_index(side: Side) -> usize {
    match side {
        Side::Reflection => 0,
        Side::Refraction => 1,
    }
}

impl CascadedModel {
    pub fn new(scene: &Scene, layout: &ElementLayout) -> Result<Self> {
        scene.validate()?;
        let lambda = scene.wavelength();
        let q = scene.options.element_factor_q;
        let normal = scene.panel.normal;
        let m_count = layout.len();

        let mut incident = Vec::with_capacity(scene.bs_antennas.len() * m_count);
        for &a in &scene.bs_antennas {
            if scene.options.plane_wave_incidence {
                let to_center = scene.panel.center - a;
                let reference = to_center.norm();
                let dir = to_center * (1.0 / reference);
                for &p in &layout.positions {
                    let path = reference + (p - scene.panel.center).dot(dir);
                    let phase = -2.0 * PI * (path / lambda).fract();
                    let amp = element_factor(p - dir, p, normal, q);
                    incident.push(Complex64::from_polar(amp, phase));
                }
            } else {
                for &p in &layout.positions {
                    incident
                        .push(friis_gain(a.distance(p), lambda)? * element_factor(a, p, normal, q));
                }
            }
        }

        let user_sides = scene.user_sides()?;
        let mut outgoing = Vec::with_capacity(scene.users.len() * m_count);
        for &u in &scene.users {
            for &p in &layout.positions {
                outgoing.push(friis_gain(p.distance(u), lambda)? * element_factor(u, p, normal, q));
            }
        }

        let mut direct = Vec::with_capacity(scene.users.len() * scene.bs_antennas.len());
        for (&u, &side) in scene.users.iter().zip(&user_sides) {
            for &a in &scene.bs_antennas {
                direct.push(if scene.options.direct_path && side == Side::Reflection {
                    Some(friis_gain(a.distance(u), lambda)?)
                } else {
                    None
                });
            }
        }

        Ok(Self {
            num_users: scene.users.len(),
            num_antennas: scene.bs_antennas.len(),
            num_elements: m_count,
            incident,
            outgoing,
            direct,
            user_sides,
            positions: layout.positions.clone(),
            normal,
            wavelength: lambda,
            element_factor_q: q,
        })
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    pub fn user_sides(&self) -> &[Side] {
        &self.user_sides
    }

    pub fn incident(&self, antenna: usize, element: usize) -> Complex64 {
        self.incident[antenna * self.num_elements + element]
    }

    pub fn outgoing(&self, user: usize, element: usize) -> Complex64 {
        self.outgoing[user * self.num_elements + element]
    }

    pub fn direct(&self, user: usize, antenna: usize) -> Option<Complex64> {
        self.direct[user * self.num_antennas + antenna]
    }

    /// Contribution of one element to entry `(user, antenna)`.
    pub fn element_term(
        &self,
        user: usize,
        antenna: usize,
        element: usize,
        gamma: Complex64,
    ) -> Complex64 {
        self.incident(antenna, element) * gamma * self.outgoing(user, element)
    }

    fn response_lut(table: &StateTable) -> Vec<[Complex64; 2]> {
        table
            .states()
            .iter()
            .map(|s| [s.reflection.to_complex(), s.refraction.to_complex()])
            .collect()
    }

    fn check_config(&self, table: &StateTable, config: &Configuration) -> Result<()> {
        if config.len() != self.num_elements {
            return Err(Error::DimensionMismatch {
                expected: self.num_elements,
                found: config.len(),
            });
        }
        if let Some(&bad) = config.state_index.iter().find(|&&s| s >= table.len()) {
            return Err(Error::StateOutOfRange {
                state: bad,
                num_states: table.len(),
            });
        }
        Ok(())
    }

    pub fn channel(&self, table: &StateTable, config: &Configuration) -> Result<ChannelMatrix> {
        self.check_config(table, config)?;
        let lut = Self::response_lut(table);
        let m_count = self.num_elements;
        let mut h = DMatrix::zeros(self.num_users, self.num_antennas);
        for k in 0..self.num_users {
            let side = side_index(self.user_sides[k]);
            let out = &self.outgoing[k * m_count..(k + 1) * m_count];
            for n in 0..self.num_antennas {
                let inc = &self.incident[n * m_count..(n + 1) * m_count];
                let mut acc = Complex64::new(0.0, 0.0);
                for m in 0..m_count {
                    acc += inc[m] * lut[config.state_index[m]][side] * out[m];
                }
                if let Some(d) = self.direct(k, n) {
                    acc += d;
                }
                h[(k, n)] = acc;
            }
        }
        Ok(ChannelMatrix(h))
    }

    /// Channel vector (over BS antennas) to an arbitrary off-panel point.
    pub fn channel_to_point(
        &self,
        scene: &Scene,
        table: &StateTable,
        config: &Configuration,
        point: Vec3,
    ) -> Result<Vec<Complex64>> {
        self.check_config(table, config)?;
        let side = scene.side_of(point)?;
        let lut = Self::response_lut(table);
        let s = side_index(side);
        let out: Vec<Complex64> = self
            .positions
            .iter()
            .map(|&p| {
                Ok(friis_gain(p.distance(point), self.wavelength)?
                    * element_factor(point, p, self.normal, self.element_factor_q))
            })
            .collect::<Result<_>>()?;
        let mut h = Vec::with_capacity(self.num_antennas);
        for (n, &a) in scene.bs_antennas.iter().enumerate() {
            let inc = &self.incident[n * self.num_elements..(n + 1) * self.num_elements];
            let mut acc = Complex64::new(0.0, 0.0);
            for m in 0..self.num_elements {
                acc += inc[m] * lut[config.state_index[m]][s] * out[m];
            }
            if scene.options.direct_path && side == Side::Reflection {
                acc += friis_gain(a.distance(point), self.wavelength)?;
            }
            h.push(acc);
        }
        Ok(h)
    }

    /// Draws one small-scale realization: every element → user and direct
    /// coefficient is multiplied by an independent Rician sample.
    pub fn faded<R: Rng + ?Sized>(&self, fading: &FadingModel, rng: &mut R) -> Self {
        let mut out = self.clone();
        if fading.is_degenerate() {
            return out;
        }
        for g in out.outgoing.iter_mut() {
            *g *= fading.sample(rng);
        }
        for d in out.direct.iter_mut().flatten() {
            *d *= fading.sample(rng);
        }
        out
    }

    /// Per-user upper bound on the channel norm when every element could
    /// pick its phase freely at the best amplitude of the user's side.
    pub fn co_phased_norm_bound(&self, table: &StateTable) -> Vec<f64> {
        let incident_norms: Vec<f64> = (0..self.num_elements)
            .map(|m| {
                (0..self.num_antennas)
                    .map(|n| self.incident(n, m).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        (0..self.num_users)
            .map(|k| {
                let a_max = table.max_amplitude(self.user_sides[k]);
                let via_panel: f64 = (0..self.num_elements)
                    .map(|m| a_max * incident_norms[m] * self.outgoing(k, m).norm())
                    .sum();
                let direct: f64 = (0..self.num_antennas)
                    .filter_map(|n| self.direct(k, n))
                    .map(|d| d.norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                via_panel + direct
            })
            .collect()
    }
}

/// Cascaded BS → panel → user channel for one configuration.
pub fn cascaded_channel(
    scene: &Scene,
    layout: &ElementLayout,
    table: &StateTable,
    config: &Configuration,
) -> Result<ChannelMatrix> {
    CascadedModel::new(scene, layout)?.channel(table, config)
}
