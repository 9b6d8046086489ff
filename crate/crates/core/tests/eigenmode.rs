use std::f64::consts::PI;

use fieldforge::constants::SPEED_OF_LIGHT;
use fieldforge::eigenmode::{cavity_modes, cpw_frequency, ResonatorSpec, Topology};
use fieldforge::fem::{DofMap, Order};
use fieldforge::mesh::{refine_uniform, structured_rectangle};
use fieldforge::solve::EigenOptions;
use proptest::prelude::*;

#[test]
fn rectangle_two_by_one_spectrum() {
    let mesh = structured_rectangle(2.0, 1.0, 16, 8);
    let set = cavity_modes(&mesh, &[], 3, Order::P2, &EigenOptions::default()).unwrap();
    let pi2 = PI * PI;
    for (got, want) in set.k_squared().iter().zip([1.25 * pi2, 2.0 * pi2, 3.25 * pi2]) {
        assert!((got - want) / want < 1e-3 && *got >= want, "{got} {want}");
    }
    for m in &set.modes {
        assert!((m.frequency_hz - SPEED_OF_LIGHT * m.k_squared_per_m2.sqrt() / (2.0 * PI)).abs() < 1e-6 * m.frequency_hz);
    }
}

#[test]
fn eigenvalues_decrease_under_refinement() {
    let mut mesh = structured_rectangle(1.0, 1.0, 4, 4);
    let mut prev = vec![f64::INFINITY; 3];
    for _ in 0..3 {
        let k2 = cavity_modes(&mesh, &[], 3, Order::P1, &EigenOptions::default()).unwrap().k_squared();
        for (a, b) in k2.iter().zip(&prev) {
            assert!(a < b);
        }
        prev = k2;
        mesh = refine_uniform(&mesh);
    }
}

#[test]
fn p2_has_about_four_times_the_p1_unknowns() {
    let mesh = structured_rectangle(1.0, 1.0, 20, 20);
    let p1 = DofMap::new(&mesh, Order::P1).len() as f64;
    let p2 = DofMap::new(&mesh, Order::P2).len() as f64;
    assert!((p2 / p1 - 4.0).abs() < 0.25, "{}", p2 / p1);
}

#[test]
fn p2_beats_p1_at_equal_unknowns() {
    let exact = 2.0 * PI * PI;
    let fine = structured_rectangle(1.0, 1.0, 16, 16);
    let coarse = structured_rectangle(1.0, 1.0, 8, 8);
    let p1 = cavity_modes(&fine, &[], 1, Order::P1, &EigenOptions::default()).unwrap();
    let p2 = cavity_modes(&coarse, &[], 1, Order::P2, &EigenOptions::default()).unwrap();
    assert_eq!(p1.dof, p2.dof);
    assert!((p2.modes[0].k_squared_per_m2 - exact) < (p1.modes[0].k_squared_per_m2 - exact) / 10.0);
}

#[test]
fn partial_dirichlet_lowers_the_spectrum() {
    let mesh = structured_rectangle(1.0, 1.0, 10, 10);
    let all = cavity_modes(&mesh, &[], 1, Order::P2, &EigenOptions::default()).unwrap();
    let some = cavity_modes(&mesh, &["boundary:left".into(), "boundary:right".into()], 1, Order::P2, &EigenOptions::default())
        .unwrap();
    // left/right clamped, top/bottom natural: k² = π²
    assert!((some.modes[0].k_squared_per_m2 / (PI * PI) - 1.0).abs() < 1e-4);
    assert!(some.modes[0].k_squared_per_m2 < all.modes[0].k_squared_per_m2);
}

#[test]
fn unknown_boundary_is_rejected() {
    let mesh = structured_rectangle(1.0, 1.0, 2, 2);
    assert!(cavity_modes(&mesh, &["boundary:nowhere".into()], 1, Order::P1, &EigenOptions::default()).is_err());
    assert!(cavity_modes(&mesh, &[], 0, Order::P1, &EigenOptions::default()).is_err());
}

#[test]
fn half_wave_cpw_lines() {
    let f = cpw_frequency(&ResonatorSpec::new(6.012e-3, 6.225, Topology::HalfWave, 1).unwrap());
    assert!((f - 10.0e9).abs() < 0.05e9, "{f}");
    let f = cpw_frequency(&ResonatorSpec::new(8.475e-3, 6.225, Topology::HalfWave, 1).unwrap());
    assert!((f - 7.089e9).abs() < 0.01e9, "{f}");
}

#[test]
fn quarter_wave_is_half_the_half_wave() {
    let h = cpw_frequency(&ResonatorSpec::new(5e-3, 6.225, Topology::HalfWave, 1).unwrap());
    let q = cpw_frequency(&ResonatorSpec::new(5e-3, 6.225, Topology::QuarterWave, 1).unwrap());
    assert!((h / q - 2.0).abs() < 1e-14);
}

#[test]
fn invalid_resonators() {
    assert!(ResonatorSpec::new(0.0, 6.0, Topology::HalfWave, 1).is_err());
    assert!(ResonatorSpec::new(1e-3, 0.5, Topology::HalfWave, 1).is_err());
    assert!(ResonatorSpec::new(1e-3, 6.0, Topology::HalfWave, 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn eigenvalues_scale_with_inverse_square_size(s in 0.01f64..100.0) {
        let base = cavity_modes(&structured_rectangle(1.0, 1.0, 5, 5), &[], 2, Order::P1, &EigenOptions::default()).unwrap();
        let scaled = cavity_modes(&structured_rectangle(s, s, 5, 5), &[], 2, Order::P1, &EigenOptions::default()).unwrap();
        for (a, b) in base.k_squared().iter().zip(scaled.k_squared()) {
            prop_assert!((b * s * s / a - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn length_for_inverts_frequency(
        f in 1e9f64..2e10,
        eps in 1.0f64..12.0,
        quarter in any::<bool>(),
        harmonic in 1u32..5,
    ) {
        let topology = if quarter { Topology::QuarterWave } else { Topology::HalfWave };
        let l = ResonatorSpec::length_for(f, eps, topology, harmonic);
        let back = cpw_frequency(&ResonatorSpec::new(l, eps, topology, harmonic).unwrap());
        prop_assert!((back / f - 1.0).abs() < 1e-12);
    }
}
