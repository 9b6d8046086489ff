//! Scalar Helmholtz cavity modes and the transmission-line resonator model.

use serde::{Deserialize, Serialize};

use crate::constants::{EPSILON_0, SPEED_OF_LIGHT};
use crate::electrostatics::effective_permittivity;
use crate::fem::{assemble_stiffness, unit_coefficients, DofMap, Order};
use crate::mesh::{GeometrySpec, Mesh};
use crate::solve::{eig_lowest, EigenOptions};
use crate::{Error, Result};

/// Shift for the Helmholtz pencil; keeps the shifted operator definite.
pub const HELMHOLTZ_SHIFT: f64 = -1.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mode {
    pub label: String,
    pub k_squared_per_m2: f64,
    pub frequency_hz: f64,
    /// ½ ε0 ∫ u² dA for the field normalized to ∫ u² dA = 1.
    pub electric_energy_j: f64,
    pub residual: f64,
    #[serde(skip)]
    pub field: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeSet {
    pub modes: Vec<Mode>,
    pub dof: usize,
    pub order: Order,
}

impl ModeSet {
    pub fn k_squared(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.k_squared_per_m2).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `x,y,value` rows of one mode at every DoF location.
    pub fn field_csv(&self, mesh: &Mesh, mode: usize) -> String {
        let coords = DofMap::new(mesh, self.order).coordinates(mesh);
        let mut out = String::from("x,y,value\n");
        for (p, v) in coords.iter().zip(&self.modes[mode].field) {
            out.push_str(&format!("{},{},{}\n", p[0], p[1], v));
        }
        out
    }
}

/// Boundary names to clamp; an empty list clamps every tagged boundary.
fn dirichlet_names(mesh: &Mesh, requested: &[String]) -> Vec<String> {
    if !requested.is_empty() {
        return requested.to_vec();
    }
    mesh.physical_names().values().filter(|p| p.dim == 1).map(|p| p.name.clone()).collect()
}

/// The `count` lowest Dirichlet–Laplacian eigenpairs −Δu = k²u.
pub fn cavity_modes(mesh: &Mesh, dirichlet: &[String], count: usize, order: Order, opts: &EigenOptions) -> Result<ModeSet> {
    if count == 0 {
        return Err(Error::Argument("at least one mode must be requested".into()));
    }
    let system = assemble_stiffness(mesh, &unit_coefficients(mesh), order)?.with_mass(mesh);
    let bc = dirichlet_names(mesh, dirichlet).into_iter().map(|n| (n, 0.0)).collect();
    let system = crate::fem::apply_dirichlet(system, mesh, &bc)?;
    let reduction = system.reduction();
    let mass = reduction.restrict(system.mass.as_ref().expect("mass attached"));
    let pairs = eig_lowest(&reduction.matrix, &mass, count, HELMHOLTZ_SHIFT, opts)?;
    let zeros = vec![0.0; system.n()];
    let modes = pairs
        .into_iter()
        .enumerate()
        .map(|(i, p)| Mode {
            label: format!("mode{}", i + 1),
            k_squared_per_m2: p.value,
            frequency_hz: SPEED_OF_LIGHT * p.value.max(0.0).sqrt() / (2.0 * std::f64::consts::PI),
            electric_energy_j: 0.5 * EPSILON_0,
            residual: p.residual,
            field: reduction.expand(&p.vector, &zeros),
        })
        .collect();
    Ok(ModeSet { modes, dof: system.n(), order })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// λ/2: both ends open (or both shorted).
    HalfWave,
    /// λ/4: one end shorted.
    QuarterWave,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonatorSpec {
    pub length_m: f64,
    pub eps_eff: f64,
    pub topology: Topology,
    #[serde(default = "first_harmonic")]
    pub harmonic: u32,
}

fn first_harmonic() -> u32 {
    1
}

impl ResonatorSpec {
    pub fn new(length_m: f64, eps_eff: f64, topology: Topology, harmonic: u32) -> Result<Self> {
        let spec = Self { length_m, eps_eff, topology, harmonic };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length_m > 0.0 && self.length_m.is_finite()) {
            return Err(Error::Argument(format!("resonator length must be positive, got {}", self.length_m)));
        }
        if !(self.eps_eff >= 1.0 && self.eps_eff.is_finite()) {
            return Err(Error::Argument(format!("effective permittivity must be ≥ 1, got {}", self.eps_eff)));
        }
        if self.harmonic == 0 {
            return Err(Error::Argument("harmonic index starts at 1".into()));
        }
        Ok(())
    }

    fn wavelengths(topology: Topology, harmonic: u32) -> f64 {
        match topology {
            Topology::HalfWave => harmonic as f64 / 2.0,
            Topology::QuarterWave => (2 * harmonic - 1) as f64 / 4.0,
        }
    }

    /// Length whose resonance of this topology and harmonic lands on `f`.
    pub fn length_for(frequency_hz: f64, eps_eff: f64, topology: Topology, harmonic: u32) -> f64 {
        Self::wavelengths(topology, harmonic) * SPEED_OF_LIGHT / (frequency_hz * eps_eff.sqrt())
    }
}

/// Resonant frequency of a CPW line resonator.
pub fn cpw_frequency(spec: &ResonatorSpec) -> f64 {
    ResonatorSpec::wavelengths(spec.topology, spec.harmonic) * SPEED_OF_LIGHT / (spec.length_m * spec.eps_eff.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonatorResult {
    pub frequency_hz: f64,
    pub eps_eff: f64,
    pub dof: usize,
}

/// Computes ε_eff of the cross-section by FEM and feeds it to the line model.
pub fn resonator_pipeline(
    geom: &GeometrySpec,
    length_m: f64,
    topology: Topology,
    order: Order,
    tol: f64,
) -> Result<ResonatorResult> {
    let eff = effective_permittivity(geom, order, tol)?;
    let spec = ResonatorSpec::new(length_m, eff.eps_eff, topology, 1)?;
    Ok(ResonatorResult { frequency_hz: cpw_frequency(&spec), eps_eff: eff.eps_eff, dof: eff.dof })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::structured_rectangle;

    #[test]
    fn unit_frequency_inversion() {
        let l = SPEED_OF_LIGHT / 2e9;
        let spec = ResonatorSpec::new(l, 1.0, Topology::HalfWave, 1).unwrap();
        assert!((cpw_frequency(&spec) - 1e9).abs() < 1e-6);
    }

    #[test]
    fn quarter_wave_overtones_are_odd() {
        let base = ResonatorSpec::new(0.01, 4.0, Topology::QuarterWave, 1).unwrap();
        let third = ResonatorSpec { harmonic: 2, ..base };
        assert!((cpw_frequency(&third) / cpw_frequency(&base) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn invalid_specs() {
        assert!(ResonatorSpec::new(0.0, 2.0, Topology::HalfWave, 1).is_err());
        assert!(ResonatorSpec::new(1.0, 0.5, Topology::HalfWave, 1).is_err());
        assert!(ResonatorSpec::new(1.0, 2.0, Topology::HalfWave, 0).is_err());
    }

    #[test]
    fn coarse_square_modes() {
        let m = structured_rectangle(1.0, 1.0, 8, 8);
        let set = cavity_modes(&m, &[], 3, Order::P2, &EigenOptions::default()).unwrap();
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((set.modes[0].k_squared_per_m2 / (2.0 * pi2) - 1.0).abs() < 1e-3);
        assert!((set.modes[1].k_squared_per_m2 - set.modes[2].k_squared_per_m2).abs() < 1e-3 * set.modes[1].k_squared_per_m2);
        assert!(set.modes.windows(2).all(|w| w[0].k_squared_per_m2 <= w[1].k_squared_per_m2));
        assert_eq!(set.field_csv(&m, 0).lines().count(), set.dof + 1);
    }
}
