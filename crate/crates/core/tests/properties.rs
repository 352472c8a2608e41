use nalgebra::DMatrix;
use num_complex::Complex64;
use omnisim::beamforming::zf_pseudo_inverse;
use omnisim::channel::{link_budget, ChannelMatrix, LinkBudgetChain};
use omnisim::element::{circular_distance, quantize_phase, StateTable};
use omnisim::geometry::{build_layout, side_of, specular_direction, PanelSpec, Side, Vec3};
use proptest::prelude::*;

fn unit_vector() -> impl Strategy<Value = Vec3> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
        .prop_filter("non-degenerate", |(x, y, z)| x * x + y * y + z * z > 0.01)
        .prop_map(|(x, y, z)| Vec3::new(x, y, z).normalized().unwrap())
}

fn panel() -> impl Strategy<Value = PanelSpec> {
    (
        unit_vector(),
        1usize..6,
        1usize..6,
        1usize..4,
        1usize..4,
        0.005f64..0.05,
        0.005f64..0.05,
    )
        .prop_map(|(normal, gr, gc, nr, nc, dx, dy)| PanelSpec {
            center: Vec3::new(0.3, -0.2, 1.0),
            normal,
            rows: gr * nr,
            cols: gc * nc,
            dx,
            dy,
            group_rows: gr,
            group_cols: gc,
        })
}

proptest! {
    #[test]
    fn layout_is_centered_and_in_plane(spec in panel()) {
        let layout = build_layout(&spec).unwrap();
        prop_assert_eq!(layout.len(), spec.num_elements());
        let n = layout.len() as f64;
        let centroid = layout.positions.iter().fold(Vec3::ZERO, |a, p| a + *p) * (1.0 / n);
        prop_assert!(centroid.distance(spec.center) < 1e-12);
        for p in &layout.positions {
            prop_assert!(spec.signed_distance(*p).abs() < 1e-12);
        }
        let members = layout.group_members();
        prop_assert_eq!(members.len(), spec.num_groups());
        prop_assert!(members.iter().all(|g| g.len() == spec.group_rows * spec.group_cols));
    }

    #[test]
    fn specular_reflection_is_an_involution(d in unit_vector(), n in unit_vector()) {
        let r = specular_direction(d, n);
        prop_assert!((r.norm() - 1.0).abs() < 1e-12);
        prop_assert!((r.dot(n) + d.dot(n)).abs() < 1e-12);
        prop_assert!(specular_direction(r, n).distance(d) < 1e-12);
    }

    #[test]
    fn side_is_constant_along_rays(spec in panel(), dir in unit_vector(), t in 0.01f64..50.0) {
        let bs = spec.center + spec.normal * 1.2;
        prop_assume!(dir.dot(spec.normal).abs() > 1e-3);
        let near = spec.center + dir * 0.01;
        let far = spec.center + dir * t;
        let side = side_of(&spec, bs, near).unwrap();
        prop_assert_eq!(side_of(&spec, bs, far).unwrap(), side);
        let expected = if dir.dot(spec.normal) > 0.0 { Side::Reflection } else { Side::Refraction };
        prop_assert_eq!(side, expected);
    }

    #[test]
    fn link_budget_ignores_item_order(
        tx in -10.0f64..30.0,
        items in prop::collection::vec(-80.0f64..30.0, 1..8),
        rotate in 0usize..8,
    ) {
        let chain = LinkBudgetChain {
            tx_power_dbm: tx,
            items: items.iter().enumerate().map(|(i, v)| (format!("g{i}"), *v)).collect(),
        };
        let mut shuffled = chain.clone();
        let len = shuffled.items.len();
        shuffled.items.rotate_left(rotate % len);
        shuffled.items.reverse();
        prop_assert_eq!(link_budget(&chain).received_dbm, link_budget(&shuffled).received_dbm);
    }

    #[test]
    fn quantization_recovers_exact_phases(state in 0usize..2, side_r in any::<bool>(), turns in -3i32..3) {
        let table = StateTable::prototype();
        let side = if side_r { Side::Reflection } else { Side::Refraction };
        let phase = table.states()[state].side(side).phase + turns as f64 * std::f64::consts::TAU;
        prop_assert_eq!(quantize_phase(&table, side, phase), state);
    }

    #[test]
    fn quantization_picks_the_nearest_phase(target in -10.0f64..10.0) {
        let table = StateTable::prototype();
        let chosen = quantize_phase(&table, Side::Reflection, target);
        let d = |s: usize| circular_distance(table.states()[s].reflection.phase, target);
        prop_assert!((0..table.len()).all(|s| d(chosen) <= d(s)));
    }

    #[test]
    fn zero_forcing_inverts_the_channel(
        (k, nt, re, im) in (1usize..5).prop_flat_map(|k| (Just(k), k..7)).prop_flat_map(|(k, nt)| (
            Just(k),
            Just(nt),
            prop::collection::vec(-1.0f64..1.0, k * nt),
            prop::collection::vec(-1.0f64..1.0, k * nt),
        )),
    ) {
        let h = ChannelMatrix(DMatrix::from_fn(k, nt, |i, j| Complex64::new(re[i * nt + j], im[i * nt + j])));
        if let Ok(w) = zf_pseudo_inverse(&h) {
            let hw = &h.0 * &w;
            for i in 0..k {
                for j in 0..k {
                    let want = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((hw[(i, j)] - Complex64::new(want, 0.0)).norm() < 1e-6);
                }
            }
        }
    }
}
