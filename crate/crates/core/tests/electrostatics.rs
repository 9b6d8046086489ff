use std::f64::consts::{E, PI};

use fieldforge::constants::EPSILON_0;
use fieldforge::electrostatics::{capacitance_matrix, effective_permittivity, CapacitanceProblem};
use fieldforge::fem::{assemble_stiffness, Order};
use fieldforge::mesh::{generate, refine_uniform, GeometryKind, GeometrySpec};
use fieldforge::parallel::with_workers;

fn coax(h: f64) -> GeometrySpec {
    GeometrySpec::new(GeometryKind::Annulus { inner_radius_m: 1.0, outer_radius_m: E }, h)
}

fn cpw(eps_sub: f64) -> GeometrySpec {
    GeometrySpec::new(
        GeometryKind::CpwCrossSection {
            center_width_m: 10e-6,
            gap_m: 6e-6,
            ground_width_m: 30e-6,
            metal_thickness_m: 1e-6,
            substrate_height_m: 100e-6,
            air_height_m: 100e-6,
        },
        1e-6,
    )
    .with_growth(1.4)
    .with_material("substrate", eps_sub)
}

fn strips() -> GeometrySpec {
    GeometrySpec::new(
        GeometryKind::ParallelStrips {
            strip_width_m: 1e-3,
            strip_thickness_m: 0.2e-3,
            separation_m: 0.5e-3,
            box_width_m: 5e-3,
            box_height_m: 3e-3,
        },
        0.1e-3,
    )
}

#[test]
fn coax_converges_monotonically_to_closed_form() {
    let spec = coax(0.2);
    let problem = CapacitanceProblem::for_geometry(&spec);
    let exact = 2.0 * PI * EPSILON_0;
    let mut mesh = generate(&spec).unwrap();
    let mut prev = f64::INFINITY;
    for _ in 0..3 {
        let c = capacitance_matrix(&mesh, &problem, Order::P2, 1e-12).unwrap();
        let c00 = c.get(0, 0);
        assert!(c00 < prev);
        prev = c00;
        mesh = refine_uniform(&mesh);
    }
    assert!((prev - exact).abs() / exact < 5e-3, "{}", prev / exact);
}

#[test]
fn two_conductor_coax_has_opposite_rows() {
    let spec = coax(0.3);
    let mesh = generate(&spec).unwrap();
    let c = capacitance_matrix(&mesh, &CapacitanceProblem::for_geometry(&spec), Order::P1, 1e-12).unwrap();
    c.check_invariants(1e-8).unwrap();
    assert!((c.get(0, 0) + c.get(0, 1)).abs() < 1e-8 * c.get(0, 0));
    assert!((c.get(0, 1) - c.get(1, 0)).abs() < 1e-10 * c.get(0, 0));
}

#[test]
fn strips_matrix_is_symmetric_and_mirror_invariant() {
    let spec = strips();
    let mesh = generate(&spec).unwrap();
    let c = capacitance_matrix(&mesh, &CapacitanceProblem::for_geometry(&spec), Order::P2, 1e-12).unwrap();
    c.check_invariants(1e-6).unwrap();
    assert!((c.get(0, 0) - c.get(1, 1)).abs() < 1e-8 * c.get(0, 0));
    assert!(c.get(0, 1) < 0.0 && c.get(0, 2) < 0.0);
    let view = c.mutual_view();
    let sum = view.mutual("strip1", "strip2").unwrap() + view.mutual("strip1", "ground").unwrap();
    assert!((sum - c.get(0, 0)).abs() < 1e-8 * c.get(0, 0));
}

#[test]
fn self_capacitance_is_twice_the_field_energy() {
    let spec = strips();
    let mesh = generate(&spec).unwrap();
    let problem = CapacitanceProblem::for_geometry(&spec);
    let c = capacitance_matrix(&mesh, &problem, Order::P1, 1e-12).unwrap();
    let k = assemble_stiffness(&mesh, &problem.permittivity, Order::P1).unwrap().stiffness;
    for i in 0..c.len() {
        let u = &c.solutions[i].values;
        let w = 0.5 * EPSILON_0 * k.bilinear(u, u);
        assert!((c.energy(i) - w).abs() < 1e-9 * w);
        assert!((2.0 * w - c.get(i, i)).abs() < 1e-9 * w);
    }
}

#[test]
fn effective_permittivity_of_symmetric_cross_section() {
    for (eps, want) in [(1.0, 1.0), (3.0, 2.0), (11.45, 6.225)] {
        let r = effective_permittivity(&cpw(eps), Order::P1, 1e-11).unwrap();
        assert!((r.eps_eff - want).abs() < 1e-6 * want, "{eps}: {}", r.eps_eff);
        assert!(r.c_dielectric_f_per_m >= r.c_vacuum_f_per_m);
    }
}

#[test]
fn effective_permittivity_needs_cpw() {
    assert!(effective_permittivity(&coax(0.5), Order::P1, 1e-10).is_err());
}

#[test]
fn capacitance_is_independent_of_worker_count() {
    let spec = strips();
    let mesh = generate(&spec).unwrap();
    let problem = CapacitanceProblem::for_geometry(&spec);
    let a = with_workers(1, || capacitance_matrix(&mesh, &problem, Order::P2, 1e-11).unwrap());
    let b = with_workers(4, || capacitance_matrix(&mesh, &problem, Order::P2, 1e-11).unwrap());
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    assert_eq!(a.to_csv(), b.to_csv());
}

#[test]
fn json_reports_maxwell_and_mutual() {
    let spec = coax(0.5);
    let mesh = generate(&spec).unwrap();
    let c = capacitance_matrix(&mesh, &CapacitanceProblem::for_geometry(&spec), Order::P1, 1e-10).unwrap();
    let v: serde_json::Value = serde_json::from_str(&c.to_json().unwrap()).unwrap();
    assert_eq!(v["maxwell_F_per_m"].as_array().unwrap().len(), 2);
    assert!(v["mutual"].is_array() || v["mutual"].is_object());
}
