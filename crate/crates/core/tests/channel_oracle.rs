mod common;

use num_complex::Complex64;
use omnisim::analysis::snr_at;
use omnisim::channel::{cascaded_channel, friis_gain, linear_to_db};
use omnisim::element::{Configuration, StateTable};
use omnisim::geometry::{build_layout, PanelSpec, Side, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn close(a: Complex64, b: Complex64, rel: f64) -> bool {
    (a - b).norm() <= rel * a.norm().max(b.norm()).max(1e-300)
}

fn random_config(rng: &mut ChaCha8Rng, len: usize, states: usize) -> Configuration {
    Configuration::per_element((0..len).map(|_| rng.random_range(0..states)).collect())
}

#[test]
fn cascaded_channel_matches_brute_force() {
    let table = StateTable::prototype();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for seed in 0..40 {
        let scene = common::low_gain_oracle_scene(seed, rng.random_range(1..=12));
        let layout = build_layout(&scene.panel).unwrap();
        let config = random_config(&mut rng, layout.len(), table.len());
        let h = cascaded_channel(&scene, &layout, &table, &config).unwrap();
        let oracle = common::oracle_channel(&scene, &table, &config);
        for (k, row) in oracle.iter().enumerate() {
            for (n, want) in row.iter().enumerate() {
                assert!(
                    close(h.0[(k, n)], *want, 1e-9),
                    "seed {seed} ({k},{n}): {} vs {want}",
                    h.0[(k, n)]
                );
            }
        }
    }
}

#[test]
fn channel_is_the_sum_of_single_element_contributions() {
    // state 1 is a perfect absorber, so each partial channel has one active element
    let table =
        StateTable::from_degrees(&[(0.55, 215.0, 0.81, 123.0), (0.0, 0.0, 0.0, 0.0)]).unwrap();
    let scene = common::low_gain_oracle_scene(3, 6);
    let layout = build_layout(&scene.panel).unwrap();
    let full = cascaded_channel(
        &scene,
        &layout,
        &table,
        &Configuration::per_element(vec![0; layout.len()]),
    )
    .unwrap();
    let mut sum = full.0.map(|_| Complex64::new(0.0, 0.0));
    for m in 0..layout.len() {
        let mut states = vec![1; layout.len()];
        states[m] = 0;
        sum += &cascaded_channel(&scene, &layout, &table, &Configuration::per_element(states))
            .unwrap()
            .0;
    }
    for (a, b) in full.0.iter().zip(sum.iter()) {
        assert!(close(*a, *b, 1e-12));
    }
}

#[test]
fn channel_scales_linearly_with_coefficients() {
    let base = StateTable::from_degrees(&[(0.4, 30.0, 0.5, 250.0)]).unwrap();
    let half = StateTable::from_degrees(&[(0.2, 30.0, 0.25, 250.0)]).unwrap();
    let scene = common::low_gain_oracle_scene(8, 5);
    let layout = build_layout(&scene.panel).unwrap();
    let config = Configuration::per_element(vec![0; layout.len()]);
    let a = cascaded_channel(&scene, &layout, &base, &config).unwrap();
    let b = cascaded_channel(&scene, &layout, &half, &config).unwrap();
    for (x, y) in a.0.iter().zip(b.0.iter()) {
        assert!(close(*x * 0.5, *y, 1e-12));
    }
}

fn single_element_scene(bs: Vec3, user: Vec3) -> omnisim::channel::Scene {
    let panel = PanelSpec {
        center: Vec3::ZERO,
        normal: Vec3::Z,
        rows: 1,
        cols: 1,
        dx: 0.0287,
        dy: 0.0142,
        group_rows: 1,
        group_cols: 1,
    };
    common::base_scene(panel, vec![bs], vec![user])
}

#[test]
fn doubling_both_distances_costs_twelve_db() {
    let table = StateTable::prototype();
    let config = Configuration::per_element(vec![1]);
    let bs = Vec3::new(0.3, 0.2, 1.1);
    let user = Vec3::new(-0.4, 0.1, 0.6);
    let near = single_element_scene(bs, user);
    let far = single_element_scene(bs * 2.0, user * 2.0);
    let layout = build_layout(&near.panel).unwrap();
    let a = snr_at(&near, &layout, &table, &config, user).unwrap();
    let b = snr_at(&far, &layout, &table, &config, user * 2.0).unwrap();
    assert!((a - b - 40.0 * 2f64.log10()).abs() < 1e-9, "{a} vs {b}");
}

#[test]
fn single_element_snr_matches_hand_composition() {
    let table = StateTable::prototype();
    let bs = Vec3::new(0.0, 0.0, 1.16);
    let user = Vec3::new(0.0, 0.0, -0.7);
    let scene = single_element_scene(bs, user);
    let layout = build_layout(&scene.panel).unwrap();
    let lambda = scene.wavelength();
    let gamma = table.states()[0].side(Side::Refraction).amp;
    let h =
        friis_gain(1.16, lambda).unwrap().norm() * gamma * friis_gain(0.7, lambda).unwrap().norm();
    let want = linear_to_db(scene.effective_tx_power_w() * h * h / scene.noise_power_w());
    let got = snr_at(
        &scene,
        &layout,
        &table,
        &Configuration::per_element(vec![0]),
        user,
    )
    .unwrap();
    assert!((got - want).abs() < 1e-9);
}

#[test]
fn direct_path_reaches_reflection_side_only() {
    let table = StateTable::prototype();
    let bs = Vec3::new(0.1, 0.0, 1.0);
    let panel = PanelSpec::prototype();
    let users = vec![Vec3::new(0.5, 0.2, 0.8), Vec3::new(-0.3, 0.1, -0.9)];
    let mut scene = common::base_scene(panel, vec![bs], users.clone());
    let layout = build_layout(&scene.panel).unwrap();
    let config = Configuration::per_element(vec![0; layout.len()]);
    let off = cascaded_channel(&scene, &layout, &table, &config).unwrap();
    scene.options.direct_path = true;
    let on = cascaded_channel(&scene, &layout, &table, &config).unwrap();
    let direct = friis_gain(bs.distance(users[0]), scene.wavelength()).unwrap();
    assert!(close(on.0[(0, 0)] - off.0[(0, 0)], direct, 1e-9));
    assert_eq!(on.0[(1, 0)], off.0[(1, 0)]);
}
