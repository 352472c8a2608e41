#![allow(dead_code)]

use num_complex::Complex64;
use omnisim::channel::{Gains, ModelOptions, NoiseSpec, Scene};
use omnisim::element::{Configuration, StateTable};
use omnisim::geometry::{PanelSpec, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

pub const C: f64 = 299_792_458.0;

/// Free-space gain written out directly, without phase reduction.
pub fn oracle_friis(d: f64, lambda: f64) -> Complex64 {
    Complex64::from_polar(lambda / (4.0 * PI * d), -2.0 * PI * d / lambda)
}

/// Element centers of a +z-facing panel: u = +x, v = +y.
pub fn oracle_positions(panel: &PanelSpec) -> Vec<Vec3> {
    let mut out = Vec::new();
    for r in 0..panel.rows {
        for c in 0..panel.cols {
            let x = (c as f64 - (panel.cols as f64 - 1.0) / 2.0) * panel.dx;
            let y = (r as f64 - (panel.rows as f64 - 1.0) / 2.0) * panel.dy;
            out.push(panel.center + Vec3::new(x, y, 0.0));
        }
    }
    out
}

/// Brute-force cascaded channel for +z-facing panels with spherical
/// incidence, no element factor and no direct path.
pub fn oracle_channel(
    scene: &Scene,
    table: &StateTable,
    config: &Configuration,
) -> Vec<Vec<Complex64>> {
    assert_eq!(scene.panel.normal, Vec3::Z);
    let lambda = C / scene.frequency_hz;
    let positions = oracle_positions(&scene.panel);
    let bs_z = scene.bs_antennas[0].z - scene.panel.center.z;
    scene
        .users
        .iter()
        .map(|u| {
            let same_side = (u.z - scene.panel.center.z).signum() == bs_z.signum();
            scene
                .bs_antennas
                .iter()
                .map(|a| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (m, p) in positions.iter().enumerate() {
                        let s = &table.states()[config.state_index[m]];
                        let c = if same_side {
                            s.reflection
                        } else {
                            s.refraction
                        };
                        let gamma = Complex64::from_polar(c.amp, c.phase);
                        acc += oracle_friis(a.distance(*p), lambda)
                            * gamma
                            * oracle_friis(p.distance(*u), lambda);
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

pub fn base_scene(panel: PanelSpec, bs: Vec<Vec3>, users: Vec<Vec3>) -> Scene {
    Scene {
        frequency_hz: 3.6e9,
        panel,
        bs_antennas: bs,
        users,
        tx_power_dbm: 1.0,
        noise: NoiseSpec {
            bandwidth_hz: 24e6,
            noise_figure_db: 6.0,
        },
        gains: Gains::default(),
        options: ModelOptions::default(),
        measured: None,
    }
}

fn point_at(rng: &mut ChaCha8Rng, center: Vec3, side_sign: f64, r_lo: f64, r_hi: f64) -> Vec3 {
    let r = rng.random_range(r_lo..r_hi);
    let theta = rng.random_range(-70f64..70.0).to_radians();
    let phi = rng.random_range(0.0..2.0 * PI);
    center
        + Vec3::new(
            r * theta.sin() * phi.cos(),
            r * theta.sin() * phi.sin(),
            side_sign * r * theta.cos(),
        )
}

/// Small random scene with `units` groups of two elements, 1–3 BS antennas
/// and 1–2 users on random sides, using the prototype power budget.
pub fn oracle_scene(seed: u64, units: usize) -> Scene {
    let mut scene = low_gain_oracle_scene(seed, units);
    scene.gains = omnisim::scenefile::SceneBundle::prototype().scene.gains;
    scene
}

/// As [`oracle_scene`] but with unit antenna and LNA gains.
pub fn low_gain_oracle_scene(seed: u64, units: usize) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pitch = rng.random_range(0.015..0.05);
    let center = Vec3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        0.0,
    );
    let panel = PanelSpec {
        center,
        normal: Vec3::Z,
        rows: 2,
        cols: units,
        dx: pitch,
        dy: pitch,
        group_rows: 2,
        group_cols: 1,
    };
    let nt = rng.random_range(1..=3usize);
    let k = rng.random_range(1..=nt.min(2));
    let bs0 = point_at(&mut rng, center, 1.0, 0.8, 3.0);
    let bs: Vec<Vec3> = (0..nt)
        .map(|n| bs0 + Vec3::new(0.5 * (C / 3.6e9) * n as f64, 0.0, 0.0))
        .collect();
    let users = (0..k)
        .map(|_| {
            let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            point_at(&mut rng, center, side, 0.4, 3.0)
        })
        .collect();
    base_scene(panel, bs, users)
}

/// The prototype panel and power budget with coarse groups (8, 10 or 16
/// units), 1–3 BS antennas and 1–2 users placed at random.
pub fn prototype_oracle_scene(seed: u64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scene = omnisim::scenefile::SceneBundle::prototype().scene;
    let (gr, gc) = [(5, 8), (10, 4), (10, 8), (5, 16), (20, 4), (4, 16)][rng.random_range(0..6)];
    scene.panel.group_rows = gr;
    scene.panel.group_cols = gc;
    let center = scene.panel.center;
    let nt = rng.random_range(1..=3usize);
    let k = rng.random_range(1..=nt.min(2));
    let bs0 = point_at(&mut rng, center, 1.0, 0.8, 3.0);
    scene.bs_antennas = (0..nt)
        .map(|n| bs0 + Vec3::new(0.5 * (C / 3.6e9) * n as f64, 0.0, 0.0))
        .collect();
    scene.users = (0..k)
        .map(|_| {
            let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            point_at(&mut rng, center, side, 0.4, 3.0)
        })
        .collect();
    scene
}
