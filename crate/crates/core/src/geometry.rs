//! Scene geometry: panel placement, the element lattice, group tiling and
//! which side of the panel a point falls on.
//!
//! The panel-local frame is fixed so that layouts are reproducible: `u` is
//! the normalized projection of global +x onto the panel plane (global +y
//! when the normal is parallel to x) and `v = normal × u`. Columns run along
//! `u` with pitch `dx`, rows run along `v` with pitch `dy`, and element
//! indices are row-major.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Signed distances below this (meters) count as lying in the panel plane.
pub const PLANE_TOLERANCE_M: f64 = 1e-9;

const UNIT_NORM_TOLERANCE: f64 = 1e-12;

/// Point or direction in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, other: Vec3) -> f64 {
        (self - other).norm()
    }

    /// Returns `None` for the zero vector or non-finite input.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(self * (1.0 / n))
        } else {
            None
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// Which half-space a point occupies relative to the panel.
///
/// `Reflection` is the half-space containing the base station.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Reflection,
    Refraction,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Reflection => "reflection",
            Side::Refraction => "refraction",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Placement and tiling of a planar panel.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelSpec {
    pub center: Vec3,
    pub normal: Vec3,
    pub rows: usize,
    pub cols: usize,
    /// Pitch along `u` (between columns), meters.
    pub dx: f64,
    /// Pitch along `v` (between rows), meters.
    pub dy: f64,
    pub group_rows: usize,
    pub group_cols: usize,
}

impl PanelSpec {
    /// 640-element prototype: 20 rows × 32 columns, 16 groups of 5×8,
    /// pitch equal to the 2.87 cm × 1.42 cm element footprint, centered at
    /// the origin facing +z.
    pub fn prototype() -> Self {
        Self {
            center: Vec3::ZERO,
            normal: Vec3::Z,
            rows: 20,
            cols: 32,
            dx: 0.0287,
            dy: 0.0142,
            group_rows: 5,
            group_cols: 8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.center.is_finite() || !self.normal.is_finite() {
            return Err(Error::InvalidPanel(
                "center and normal must be finite".into(),
            ));
        }
        if (self.normal.norm() - 1.0).abs() > UNIT_NORM_TOLERANCE {
            return Err(Error::InvalidPanel(format!(
                "normal must be unit length, |normal| = {}",
                self.normal.norm()
            )));
        }
        if self.rows == 0 || self.cols == 0 || self.group_rows == 0 || self.group_cols == 0 {
            return Err(Error::InvalidPanel(
                "rows, cols, group_rows and group_cols must be positive".into(),
            ));
        }
        if !(self.dx > 0.0 && self.dy > 0.0 && self.dx.is_finite() && self.dy.is_finite()) {
            return Err(Error::InvalidPanel("element pitch must be positive".into()));
        }
        if !self.rows.is_multiple_of(self.group_rows) || !self.cols.is_multiple_of(self.group_cols)
        {
            return Err(Error::InvalidPanel(format!(
                "{}x{} elements cannot be tiled by {}x{} groups",
                self.rows, self.cols, self.group_rows, self.group_cols
            )));
        }
        Ok(())
    }

    pub fn num_elements(&self) -> usize {
        self.rows * self.cols
    }

    pub fn num_groups(&self) -> usize {
        (self.rows / self.group_rows) * (self.cols / self.group_cols)
    }

    /// Signed distance of `point` from the panel plane along the normal.
    pub fn signed_distance(&self, point: Vec3) -> f64 {
        (point - self.center).dot(self.normal)
    }

    /// Panel-local axes `(u, v)`.
    pub fn basis(&self) -> (Vec3, Vec3) {
        panel_basis(self.normal)
    }
}

fn panel_basis(normal: Vec3) -> (Vec3, Vec3) {
    let axis = if normal.cross(Vec3::X).norm() > UNIT_NORM_TOLERANCE {
        Vec3::X
    } else {
        Vec3::Y
    };
    let u = (axis - normal * axis.dot(normal))
        .normalized()
        .expect("axis is not parallel to the normal");
    (u, normal.cross(u))
}

/// Element centers and group membership for a panel.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementLayout {
    pub positions: Vec<Vec3>,
    pub group_of: Vec<usize>,
    pub u: Vec3,
    pub v: Vec3,
    pub num_groups: usize,
    pub rows: usize,
    pub cols: usize,
}

impl ElementLayout {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Element indices of each group, in row-major element order.
    pub fn group_members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.num_groups];
        for (element, &group) in self.group_of.iter().enumerate() {
            members[group].push(element);
        }
        members
    }
}

/// Lays out `rows × cols` element centers on a regular lattice centered on
/// the panel and assigns row-major groups of `group_rows × group_cols`.
pub fn build_layout(spec: &PanelSpec) -> Result<ElementLayout> {
    spec.validate()?;
    let (u, v) = spec.basis();
    let col_mid = (spec.cols as f64 - 1.0) / 2.0;
    let row_mid = (spec.rows as f64 - 1.0) / 2.0;
    let groups_per_row = spec.cols / spec.group_cols;

    let mut positions = Vec::with_capacity(spec.num_elements());
    let mut group_of = Vec::with_capacity(spec.num_elements());
    for r in 0..spec.rows {
        let along_v = (r as f64 - row_mid) * spec.dy;
        for c in 0..spec.cols {
            let along_u = (c as f64 - col_mid) * spec.dx;
            positions.push(spec.center + u * along_u + v * along_v);
            group_of.push((r / spec.group_rows) * groups_per_row + c / spec.group_cols);
        }
    }
    Ok(ElementLayout {
        positions,
        group_of,
        u,
        v,
        num_groups: spec.num_groups(),
        rows: spec.rows,
        cols: spec.cols,
    })
}

/// Classifies `point` as on the base-station side of the panel or the
/// opposite side.
pub fn side_of(spec: &PanelSpec, bs_position: Vec3, point: Vec3) -> Result<Side> {
    let bs = spec.signed_distance(bs_position);
    if bs.is_nan() || bs.abs() <= PLANE_TOLERANCE_M {
        return Err(Error::InvalidScene(format!(
            "base station {bs_position} lies in the panel plane"
        )));
    }
    let p = spec.signed_distance(point);
    if p.is_nan() || p.abs() <= PLANE_TOLERANCE_M {
        return Err(Error::SideUndefined {
            point: point.into(),
        });
    }
    if (p > 0.0) == (bs > 0.0) {
        Ok(Side::Reflection)
    } else {
        Ok(Side::Refraction)
    }
}

/// Mirror-law direction `d − 2(d·n)n`.
pub fn specular_direction(incident_dir: Vec3, normal: Vec3) -> Vec3 {
    incident_dir - normal * (2.0 * incident_dir.dot(normal))
}
