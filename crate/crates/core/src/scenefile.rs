//! JSON scene files.
//!
//! Unknown keys are rejected. Units are carried in key suffixes; phases are
//! degrees in the file and radians everywhere else. Malformed documents
//! report a line and column, semantic problems report the key path.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{Gains, MeasuredChannel, ModelOptions, NoiseSpec, Scene};
use crate::element::{validate_table, DeclaredPower, StateTable};
use crate::error::{Error, Result};
use crate::geometry::{build_layout, ElementLayout, PanelSpec, Vec3, PLANE_TOLERANCE_M};

/// The bundled 640-element prototype deployment.
pub const PROTOTYPE_JSON: &str = include_str!("../data/prototype.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub frequency_hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pin_diodes: Option<u32>,
    pub panel: PanelFile,
    pub state_table: Vec<StateFile>,
    pub bs: BsFile,
    #[serde(default)]
    pub users: Vec<Vec3>,
    pub power: PowerFile,
    #[serde(default)]
    pub gains: GainsFile,
    #[serde(default)]
    pub options: OptionsFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measured: Option<MeasuredFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PanelFile {
    pub rows: usize,
    pub cols: usize,
    pub dx_m: f64,
    pub dy_m: f64,
    pub group_rows: usize,
    pub group_cols: usize,
    pub center: Vec3,
    pub normal: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientFile {
    pub amp: f64,
    pub phase_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub reflection: CoefficientFile,
    pub refraction: CoefficientFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_power_r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_power_t: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BsFile {
    #[serde(default)]
    pub antennas: Vec<Vec3>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerFile {
    pub tx_dbm: f64,
    pub bandwidth_hz: f64,
    #[serde(default)]
    pub noise_figure_db: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsFile {
    #[serde(default)]
    pub tx_db: f64,
    #[serde(default)]
    pub rx_db: f64,
    #[serde(default)]
    pub lna_db: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionsFile {
    #[serde(default)]
    pub direct_path: bool,
    #[serde(default)]
    pub plane_wave: bool,
    #[serde(default)]
    pub element_factor_q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasuredFile {
    pub tx_ios_db: f64,
    pub ios_rx_db: f64,
}

/// A validated scene together with its state table and element layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneBundle {
    pub file: SceneFile,
    pub scene: Scene,
    pub table: StateTable,
    pub layout: ElementLayout,
}

impl SceneBundle {
    pub fn prototype() -> Self {
        parse_scene_str(PROTOTYPE_JSON).expect("bundled prototype scene is valid")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.file).expect("scene file serializes")
    }
}

pub fn parse_scene(path: impl AsRef<Path>) -> Result<SceneBundle> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(Error::io(path.as_ref()))?;
    parse_scene_str(&text)
}

pub fn parse_scene_str(text: &str) -> Result<SceneBundle> {
    let file: SceneFile = serde_json::from_str(text).map_err(|e| Error::Schema {
        message: e.to_string(),
        line: e.line(),
        column: e.column(),
    })?;
    SceneBundle::try_from(file)
}

fn require(ok: bool, path: impl Into<String>, reason: impl Into<String>) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::validation(path, reason))
    }
}

fn positive(value: f64, path: &str) -> Result<()> {
    require(
        value > 0.0 && value.is_finite(),
        path,
        format!("must be positive, got {value}"),
    )
}

fn finite(value: f64, path: &str) -> Result<()> {
    require(value.is_finite(), path, "must be finite")
}

fn build_table(file: &SceneFile) -> Result<StateTable> {
    require(
        !file.state_table.is_empty(),
        "state_table",
        "at least one state",
    )?;
    for (i, s) in file.state_table.iter().enumerate() {
        for (side, c) in [("reflection", &s.reflection), ("refraction", &s.refraction)] {
            let path = format!("state_table[{i}].{side}");
            require(
                (0.0..=1.0).contains(&c.amp),
                format!("{path}.amp"),
                format!("amplitude {} outside [0, 1]", c.amp),
            )?;
            finite(c.phase_deg, &format!("{path}.phase_deg"))?;
        }
    }
    let rows: Vec<_> = file
        .state_table
        .iter()
        .map(|s| {
            (
                s.reflection.amp,
                s.reflection.phase_deg,
                s.refraction.amp,
                s.refraction.phase_deg,
            )
        })
        .collect();
    let declared = file
        .state_table
        .iter()
        .map(|s| DeclaredPower {
            reflection: s.declared_power_r,
            refraction: s.declared_power_t,
        })
        .collect();
    let mut table = StateTable::from_degrees(&rows)
        .and_then(|t| t.with_declared_powers(declared))
        .map_err(|e| Error::validation("state_table", e.to_string()))?;
    if let Some(n) = file.pin_diodes {
        table = table
            .with_pin_diodes(n)
            .map_err(|e| Error::validation("pin_diodes", e.to_string()))?;
    }

    let report = validate_table(&table);
    for check in &report.states {
        let i = check.index;
        require(
            check.passive,
            format!("state_table[{i}]"),
            format!(
                "passivity violated: reflected + refracted power {:.4} exceeds 1",
                check.total_power
            ),
        )?;
        if !check.declared_ok() {
            return Err(Error::validation(
                format!("state_table[{i}]"),
                "amplitude squared does not match the declared power",
            ));
        }
    }
    Ok(table)
}

impl TryFrom<SceneFile> for SceneBundle {
    type Error = Error;

    fn try_from(file: SceneFile) -> Result<Self> {
        positive(file.frequency_hz, "frequency_hz")?;

        let p = &file.panel;
        let panel = PanelSpec {
            center: p.center,
            normal: p.normal,
            rows: p.rows,
            cols: p.cols,
            dx: p.dx_m,
            dy: p.dy_m,
            group_rows: p.group_rows,
            group_cols: p.group_cols,
        };
        panel
            .validate()
            .map_err(|e| Error::validation("panel", e.to_string()))?;
        let layout = build_layout(&panel)?;

        let table = build_table(&file)?;

        require(
            !file.bs.antennas.is_empty(),
            "bs.antennas",
            "at least one BS antenna",
        )?;
        let bs_side = panel.signed_distance(file.bs.antennas[0]);
        for (n, a) in file.bs.antennas.iter().enumerate() {
            let path = format!("bs.antennas[{n}]");
            require(a.is_finite(), &path, "must be finite")?;
            let d = panel.signed_distance(*a);
            require(
                d.abs() > PLANE_TOLERANCE_M,
                &path,
                "lies in the panel plane",
            )?;
            require(
                (d > 0.0) == (bs_side > 0.0),
                &path,
                "all BS antennas must be on one side",
            )?;
        }
        require(!file.users.is_empty(), "users", "at least one user")?;
        for (k, u) in file.users.iter().enumerate() {
            let path = format!("users[{k}]");
            require(u.is_finite(), &path, "must be finite")?;
            require(
                panel.signed_distance(*u).abs() > PLANE_TOLERANCE_M,
                &path,
                "lies in the panel plane",
            )?;
        }

        finite(file.power.tx_dbm, "power.tx_dbm")?;
        positive(file.power.bandwidth_hz, "power.bandwidth_hz")?;
        finite(file.power.noise_figure_db, "power.noise_figure_db")?;
        finite(file.gains.tx_db, "gains.tx_db")?;
        finite(file.gains.rx_db, "gains.rx_db")?;
        finite(file.gains.lna_db, "gains.lna_db")?;
        let q = file.options.element_factor_q;
        require(
            q.is_finite() && q >= 0.0,
            "options.element_factor_q",
            "must be non-negative",
        )?;
        if let Some(m) = &file.measured {
            finite(m.tx_ios_db, "measured.tx_ios_db")?;
            finite(m.ios_rx_db, "measured.ios_rx_db")?;
        }

        let scene = Scene {
            frequency_hz: file.frequency_hz,
            panel,
            bs_antennas: file.bs.antennas.clone(),
            users: file.users.clone(),
            tx_power_dbm: file.power.tx_dbm,
            noise: NoiseSpec {
                bandwidth_hz: file.power.bandwidth_hz,
                noise_figure_db: file.power.noise_figure_db,
            },
            gains: Gains {
                tx_antenna_db: file.gains.tx_db,
                rx_antenna_db: file.gains.rx_db,
                lna_db: file.gains.lna_db,
            },
            options: ModelOptions {
                direct_path: file.options.direct_path,
                plane_wave_incidence: file.options.plane_wave,
                element_factor_q: q,
            },
            measured: file.measured.as_ref().map(|m| MeasuredChannel {
                tx_ios_db: m.tx_ios_db,
                ios_rx_db: m.ios_rx_db,
            }),
        };
        scene.validate()?;
        Ok(Self {
            file,
            scene,
            table,
            layout,
        })
    }
}
