use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{zpf_phase, EprMode, JunctionSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagSettings {
    /// Fock states kept per mode (|0⟩ … |n_max − 1⟩).
    pub n_max: usize,
    /// Highest power of φ kept from the cosine expansion.
    pub order: u32,
}

impl Default for DiagSettings {
    fn default() -> Self {
        Self { n_max: 12, order: 4 }
    }
}

/// Level spacings read off the dressed spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub alpha_q_hz: f64,
    pub alpha_r_hz: f64,
    pub chi_qr_hz: f64,
    pub f_q_hz: f64,
    pub f_r_hz: Option<f64>,
    /// Smallest squared overlap used when labeling states.
    pub min_overlap: f64,
}

/// (a + a†) in a space of `dim` Fock states.
fn position(dim: usize) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(dim, dim);
    for n in 0..dim - 1 {
        let v = ((n + 1) as f64).sqrt();
        x[(n, n + 1)] = v;
        x[(n + 1, n)] = v;
    }
    x
}

/// Powers (a + a†)^j for j = 0..=order, each computed in a padded space
/// and truncated to `dim`, so truncation does not corrupt the kept block.
fn truncated_powers(dim: usize, order: usize) -> Vec<DMatrix<f64>> {
    let padded = dim + order;
    let x = position(padded);
    let mut out = Vec::with_capacity(order + 1);
    let mut p = DMatrix::identity(padded, padded);
    for _ in 0..=order {
        out.push(p.view((0, 0), (dim, dim)).into_owned());
        p = &p * &x;
    }
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// Diagonalizes Σ h f_m a†a + E_J Σ_{k≥2} (−1)^{k+1} φ^{2k}/(2k)! with
/// φ = Σ φ_ZPF,m (a_m + a_m†). The first mode is the qubit; an optional
/// second mode is the resonator. Energies are handled in Hz (E/h).
pub fn diagonalize(modes: &[EprMode], junction: &JunctionSpec, settings: &DiagSettings) -> Result<Spectrum> {
    if modes.is_empty() || modes.len() > 2 {
        return Err(Error::Argument(format!("diagonalization handles one or two modes, got {}", modes.len())));
    }
    if settings.n_max < 6 {
        return Err(Error::Argument(format!("Fock truncation must be at least 6, got {}", settings.n_max)));
    }
    if ![4, 6, 8].contains(&settings.order) {
        return Err(Error::Argument(format!("expansion order must be 4, 6 or 8, got {}", settings.order)));
    }
    for m in modes {
        m.validate()?;
    }
    let d = settings.n_max;
    let order = settings.order as usize;
    let ej = junction.e_j_hz();
    let phi: Vec<f64> = modes.iter().map(|m| zpf_phase(m, junction)).collect();
    let powers = truncated_powers(d, order);
    let two = modes.len() == 2;
    let dim = if two { d * d } else { d };

    let mut h = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        let (n1, n2) = if two { (i / d, i % d) } else { (i, 0) };
        h[(i, i)] = n1 as f64 * modes[0].f_lin_hz + if two { n2 as f64 * modes[1].f_lin_hz } else { 0.0 };
    }
    for k in 2..=order / 2 {
        let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
        let c = sign * ej / factorial(2 * k);
        if two {
            for j in 0..=2 * k {
                let w = c * binomial(2 * k, j) * phi[0].powi(j as i32) * phi[1].powi((2 * k - j) as i32);
                if w != 0.0 {
                    h += powers[j].kronecker(&powers[2 * k - j]) * w;
                }
            }
        } else {
            h += &powers[2 * k] * (c * phi[0].powi(2 * k as i32));
        }
    }
    let h = (&h + h.transpose()) * 0.5;
    // rescale so the eigensolver works on O(1) numbers
    let scale = modes[0].f_lin_hz;
    let eig = SymmetricEigen::new(h / scale);

    let mut min_overlap: f64 = 1.0;
    let mut energy = |n1: usize, n2: usize| -> Result<f64> {
        let bare = if two { n1 * d + n2 } else { n1 };
        let (best, w) = (0..dim)
            .map(|k| (k, eig.eigenvectors[(bare, k)].powi(2)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty spectrum");
        if w < 0.5 {
            return Err(Error::StrongMixing(format!(
                "bare state |{n1},{n2}⟩ has at most {w:.3} overlap with any eigenstate; increase the detuning or reduce φ_ZPF"
            )));
        }
        min_overlap = min_overlap.min(w);
        Ok(eig.eigenvalues[best] * scale)
    };
    let e00 = energy(0, 0)?;
    let e10 = energy(1, 0)?;
    let e20 = energy(2, 0)?;
    let (alpha_r, chi, f_r) = if two {
        let e01 = energy(0, 1)?;
        let e02 = energy(0, 2)?;
        let e11 = energy(1, 1)?;
        (2.0 * e01 - e02 - e00, e10 + e01 - e11 - e00, Some(e01 - e00))
    } else {
        (0.0, 0.0, None)
    };
    Ok(Spectrum {
        alpha_q_hz: 2.0 * e10 - e20 - e00,
        alpha_r_hz: alpha_r,
        chi_qr_hz: chi,
        f_q_hz: e10 - e00,
        f_r_hz: f_r,
        min_overlap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epr::Role;

    #[test]
    fn padded_powers_match_exact_matrix_elements() {
        // ⟨0|(a+a†)^4|0⟩ = 3 and ⟨n|(a+a†)^2|n⟩ = 2n+1
        let p = truncated_powers(6, 4);
        assert!((p[4][(0, 0)] - 3.0).abs() < 1e-12);
        for n in 0..6 {
            assert!((p[2][(n, n)] - (2 * n + 1) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn harmonic_ladder_without_nonlinearity() {
        let j = JunctionSpec::from_inductance(11e-9).unwrap();
        let modes = [EprMode::new(6e9, 0.0, Role::Qubit).unwrap(), EprMode::new(9e9, 0.0, Role::Resonator).unwrap()];
        let s = diagonalize(&modes, &j, &DiagSettings::default()).unwrap();
        assert!(s.alpha_q_hz.abs() < 1e-10 * 6e9);
        assert!(s.chi_qr_hz.abs() < 1e-10 * 6e9);
        assert!((s.f_q_hz - 6e9).abs() < 1e-6);
    }

    #[test]
    fn settings_validated() {
        let j = JunctionSpec::from_inductance(11e-9).unwrap();
        let m = [EprMode::new(6e9, 0.5, Role::Qubit).unwrap()];
        assert!(diagonalize(&m, &j, &DiagSettings { n_max: 5, order: 4 }).is_err());
        assert!(diagonalize(&m, &j, &DiagSettings { n_max: 8, order: 5 }).is_err());
    }
}
