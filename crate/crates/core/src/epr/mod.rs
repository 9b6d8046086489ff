//! Energy-participation-ratio quantization of a single-junction circuit:
//! junction conversions, zero-point phase, perturbative Hamiltonian
//! parameters, and a truncated-Fock-space diagonalization check.

mod diag;
mod job;

use serde::{Deserialize, Serialize};

pub use diag::{diagonalize, DiagSettings, Spectrum};
pub use job::{run_job, EprJob, EprReport, JunctionInput, ModeInput};

use crate::constants::{reduced_flux_quantum, PLANCK};
use crate::{Error, Result};

/// E_J/E_C below this ratio is flagged as outside the transmon regime.
pub const TRANSMON_RATIO: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Qubit,
    Resonator,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EprMode {
    /// Linearized eigenmode frequency.
    pub f_lin_hz: f64,
    /// Participation ratio of the junction in this mode.
    pub p: f64,
    pub role: Role,
}

impl EprMode {
    pub fn new(f_lin_hz: f64, p: f64, role: Role) -> Result<Self> {
        let m = Self { f_lin_hz, p, role };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_lin_hz > 0.0 && self.f_lin_hz.is_finite()) {
            return Err(Error::Argument(format!("mode frequency must be positive, got {}", self.f_lin_hz)));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::Argument(format!("participation ratio must lie in [0, 1], got {}", self.p)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JunctionSpec {
    /// Josephson energy in joules.
    pub e_j: f64,
    /// Junction sign, ±1.
    pub sign: f64,
}

impl JunctionSpec {
    pub fn from_inductance(l_j: f64) -> Result<Self> {
        Ok(Self { e_j: lj_to_ej(l_j)?, sign: 1.0 })
    }

    pub fn from_energy(e_j: f64) -> Result<Self> {
        if !(e_j > 0.0 && e_j.is_finite()) {
            return Err(Error::Argument(format!("Josephson energy must be positive, got {e_j}")));
        }
        Ok(Self { e_j, sign: 1.0 })
    }

    pub fn with_sign(mut self, sign: f64) -> Result<Self> {
        if sign != 1.0 && sign != -1.0 {
            return Err(Error::Argument(format!("junction sign must be +1 or -1, got {sign}")));
        }
        self.sign = sign;
        Ok(self)
    }

    pub fn l_j(&self) -> f64 {
        reduced_flux_quantum().powi(2) / self.e_j
    }

    /// E_J / h in Hz.
    pub fn e_j_hz(&self) -> f64 {
        self.e_j / PLANCK
    }
}

/// E_J = φ0² / L_J.
pub fn lj_to_ej(l_j: f64) -> Result<f64> {
    if !(l_j > 0.0 && l_j.is_finite()) {
        return Err(Error::Argument(format!("Josephson inductance must be positive, got {l_j}")));
    }
    Ok(reduced_flux_quantum().powi(2) / l_j)
}

/// L_J = φ0² / E_J.
pub fn ej_to_lj(e_j: f64) -> Result<f64> {
    if !(e_j > 0.0 && e_j.is_finite()) {
        return Err(Error::Argument(format!("Josephson energy must be positive, got {e_j}")));
    }
    Ok(reduced_flux_quantum().powi(2) / e_j)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectroscopyEstimate {
    pub e_j: f64,
    pub e_c: f64,
    pub transmon_regime: bool,
}

/// Inverts h·f_ge = √(8 E_J E_C) − E_C with E_C = h·α.
pub fn ej_from_spectroscopy(f_ge_hz: f64, alpha_hz: f64) -> Result<SpectroscopyEstimate> {
    if !(f_ge_hz > 0.0) {
        return Err(Error::Argument(format!("qubit frequency must be positive, got {f_ge_hz}")));
    }
    if !(alpha_hz > 0.0) {
        return Err(Error::Argument(format!("anharmonicity must be positive, got {alpha_hz}")));
    }
    let e_c = PLANCK * alpha_hz;
    let e_j = (PLANCK * f_ge_hz + e_c).powi(2) / (8.0 * e_c);
    let transmon_regime = e_j / e_c >= TRANSMON_RATIO;
    if !transmon_regime {
        log::warn!("E_J/E_C = {:.2} is outside the transmon regime; the estimate is unreliable", e_j / e_c);
    }
    Ok(SpectroscopyEstimate { e_j, e_c, transmon_regime })
}

/// f_ge = (√(8 E_J E_C) − E_C) / h.
pub fn qubit_frequency(e_j: f64, e_c: f64) -> f64 {
    ((8.0 * e_j * e_c).sqrt() - e_c) / PLANCK
}

/// φ_ZPF = S·√(p·h·f / (2 E_J)).
pub fn zpf_phase(mode: &EprMode, junction: &JunctionSpec) -> f64 {
    junction.sign * (mode.p * PLANCK * mode.f_lin_hz / (2.0 * junction.e_j)).sqrt()
}

/// p = 2 E_J φ_ZPF² / (h·f).
pub fn participation_from_zpf(phi_zpf: f64, f_lin_hz: f64, junction: &JunctionSpec) -> f64 {
    2.0 * junction.e_j * phi_zpf * phi_zpf / (PLANCK * f_lin_hz)
}

/// p = ½ L_J |I|² / E_elec.
pub fn participation_from_current(e_elec: f64, l_j: f64, i_peak: f64) -> Result<f64> {
    if !(e_elec > 0.0) {
        return Err(Error::Argument(format!("electric energy must be positive, got {e_elec}")));
    }
    Ok(0.5 * l_j * i_peak * i_peak / e_elec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianParams {
    pub alpha_q_hz: f64,
    pub alpha_r_hz: f64,
    pub chi_qr_hz: f64,
    pub f_q_dressed_hz: f64,
    pub f_r_hz: Option<f64>,
    pub g_hz: Option<f64>,
    pub e_j: f64,
    pub phi_zpf: Vec<f64>,
}

/// Perturbative anharmonicities and cross-Kerr from the participation
/// ratios. The qubit frequency is dressed as f − α_q − χ/2 and g is then
/// obtained from [`coupling_g`] when the pair is dispersive.
pub fn perturbative_params(qubit: &EprMode, resonator: &EprMode, junction: &JunctionSpec) -> Result<HamiltonianParams> {
    qubit.validate()?;
    resonator.validate()?;
    if qubit.role == resonator.role {
        return Err(Error::Argument("perturbative parameters need one qubit and one resonator mode".into()));
    }
    let ej = junction.e_j_hz();
    let (fq, fr) = (qubit.f_lin_hz, resonator.f_lin_hz);
    let alpha_q = qubit.p * qubit.p * fq * fq / (8.0 * ej);
    let alpha_r = resonator.p * resonator.p * fr * fr / (8.0 * ej);
    let chi = qubit.p * resonator.p * fq * fr / (4.0 * ej);
    let f_q_dressed = fq - alpha_q - chi / 2.0;
    let g = match coupling_g(chi, alpha_q, f_q_dressed, fr) {
        Ok(g) => Some(g),
        Err(Error::Straddling(msg)) => {
            log::warn!("{msg}");
            None
        }
        Err(e) => return Err(e),
    };
    Ok(HamiltonianParams {
        alpha_q_hz: alpha_q,
        alpha_r_hz: alpha_r,
        chi_qr_hz: chi,
        f_q_dressed_hz: f_q_dressed,
        f_r_hz: Some(fr),
        g_hz: g,
        e_j: junction.e_j,
        phi_zpf: vec![zpf_phase(qubit, junction), zpf_phase(resonator, junction)],
    })
}

/// The two terms of the dispersive-shift bracket
/// α/(Δ(Δ−α)) and α/(Σ(Σ+α)).
pub fn dispersive_bracket(alpha: f64, f_q: f64, f_r: f64) -> (f64, f64) {
    let delta = f_r - f_q;
    let sigma = f_r + f_q;
    (alpha / (delta * (delta - alpha)), alpha / (sigma * (sigma + alpha)))
}

/// Coupling strength from χ = 2g²[α/(Δ(Δ−α)) + α/(Σ(Σ+α))].
pub fn coupling_g(chi: f64, alpha: f64, f_q: f64, f_r: f64) -> Result<f64> {
    if chi < 0.0 || alpha < 0.0 || !(f_q > 0.0) || !(f_r > 0.0) {
        return Err(Error::Argument(format!(
            "coupling needs non-negative χ, α and positive frequencies (χ={chi}, α={alpha}, f_q={f_q}, f_r={f_r})"
        )));
    }
    let delta = f_r - f_q;
    if delta * (delta - alpha) <= 0.0 {
        return Err(Error::Straddling(format!(
            "qubit and resonator straddle (Δ = {delta:e} Hz, α = {alpha:e} Hz); the dispersive formula does not apply"
        )));
    }
    if chi == 0.0 {
        return Ok(0.0);
    }
    let (a, b) = dispersive_bracket(alpha, f_q, f_r);
    Ok((chi / (2.0 * (a + b))).sqrt())
}

/// How Hamiltonian parameters are obtained from a mode list.
pub trait HamiltonianMethod: Send + Sync {
    fn name(&self) -> &'static str;
    fn extract(&self, modes: &[EprMode], junction: &JunctionSpec, settings: &DiagSettings) -> Result<HamiltonianParams>;
}

fn split_modes(modes: &[EprMode]) -> Result<(EprMode, Option<EprMode>)> {
    for m in modes {
        m.validate()?;
    }
    let qubits: Vec<_> = modes.iter().filter(|m| m.role == Role::Qubit).collect();
    let resonators: Vec<_> = modes.iter().filter(|m| m.role == Role::Resonator).collect();
    if qubits.len() != 1 || resonators.len() > 1 || modes.len() > 2 {
        return Err(Error::Argument(format!(
            "expected one qubit and at most one resonator mode, got {} qubit(s) and {} resonator(s)",
            qubits.len(),
            resonators.len()
        )));
    }
    Ok((*qubits[0], resonators.first().map(|r| **r)))
}

pub struct Perturbative;

impl HamiltonianMethod for Perturbative {
    fn name(&self) -> &'static str {
        "perturbative"
    }

    fn extract(&self, modes: &[EprMode], junction: &JunctionSpec, _: &DiagSettings) -> Result<HamiltonianParams> {
        let (q, r) = split_modes(modes)?;
        match r {
            Some(r) => perturbative_params(&q, &r, junction),
            None => {
                let alpha = q.p * q.p * q.f_lin_hz * q.f_lin_hz / (8.0 * junction.e_j_hz());
                Ok(HamiltonianParams {
                    alpha_q_hz: alpha,
                    alpha_r_hz: 0.0,
                    chi_qr_hz: 0.0,
                    f_q_dressed_hz: q.f_lin_hz - alpha,
                    f_r_hz: None,
                    g_hz: None,
                    e_j: junction.e_j,
                    phi_zpf: vec![zpf_phase(&q, junction)],
                })
            }
        }
    }
}

pub struct Diagonalize;

impl HamiltonianMethod for Diagonalize {
    fn name(&self) -> &'static str {
        "diagonalize"
    }

    fn extract(&self, modes: &[EprMode], junction: &JunctionSpec, settings: &DiagSettings) -> Result<HamiltonianParams> {
        let (q, r) = split_modes(modes)?;
        let ordered: Vec<EprMode> = std::iter::once(q).chain(r).collect();
        let s = diagonalize(&ordered, junction, settings)?;
        let g = match s.f_r_hz {
            Some(fr) => match coupling_g(s.chi_qr_hz, s.alpha_q_hz, s.f_q_hz, fr) {
                Ok(g) => Some(g),
                Err(Error::Straddling(msg)) => {
                    log::warn!("{msg}");
                    None
                }
                Err(e) => return Err(e),
            },
            None => None,
        };
        Ok(HamiltonianParams {
            alpha_q_hz: s.alpha_q_hz,
            alpha_r_hz: s.alpha_r_hz,
            chi_qr_hz: s.chi_qr_hz,
            f_q_dressed_hz: s.f_q_hz,
            f_r_hz: s.f_r_hz,
            g_hz: g,
            e_j: junction.e_j,
            phi_zpf: ordered.iter().map(|m| zpf_phase(m, junction)).collect(),
        })
    }
}

type Constructor = fn() -> Box<dyn HamiltonianMethod>;

const REGISTRY: &[(&str, Constructor)] =
    &[("perturbative", || Box::new(Perturbative)), ("diagonalize", || Box::new(Diagonalize))];

pub fn available_methods() -> Vec<&'static str> {
    REGISTRY.iter().map(|(n, _)| *n).collect()
}

pub fn method(name: &str) -> Result<Box<dyn HamiltonianMethod>> {
    REGISTRY
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, c)| c())
        .ok_or_else(|| Error::Config(format!("unknown Hamiltonian method {name:?}; available: {:?}", available_methods())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn junction() -> JunctionSpec {
        JunctionSpec::from_inductance(11e-9).unwrap()
    }

    #[test]
    fn inductance_round_trip() {
        for nh in [1.0, 11.0, 13.0] {
            let l = nh * 1e-9;
            assert!((ej_to_lj(lj_to_ej(l).unwrap()).unwrap() / l - 1.0).abs() < 1e-12);
        }
        assert_eq!(lj_to_ej(22e-9).unwrap() * 2.0, lj_to_ej(11e-9).unwrap());
        assert!(lj_to_ej(0.0).is_err());
    }

    #[test]
    fn josephson_energy_of_eleven_nanohenry() {
        assert!((junction().e_j_hz() / 1e9 - 14.860).abs() < 5e-4);
    }

    #[test]
    fn zero_participation() {
        let q = EprMode::new(6e9, 0.9, Role::Qubit).unwrap();
        let r = EprMode::new(9e9, 0.0, Role::Resonator).unwrap();
        let p = perturbative_params(&q, &r, &junction()).unwrap();
        assert_eq!(p.chi_qr_hz, 0.0);
        assert_eq!(p.alpha_r_hz, 0.0);
        assert_eq!(p.g_hz, Some(0.0));
    }

    #[test]
    fn straddling_rejected() {
        assert!(matches!(coupling_g(1e6, 300e6, 6.0e9, 6.1e9), Err(Error::Straddling(_))));
    }

    #[test]
    fn participation_from_current_examples() {
        let p = participation_from_current(1e-24, 11e-9, 12e-9).unwrap();
        assert!((p - 0.792).abs() < 1e-12);
        let unit = participation_from_current(0.5 * 11e-9 * 4e-16, 11e-9, 2e-8).unwrap();
        assert!((unit - 1.0).abs() < 1e-12);
        assert!(participation_from_current(0.0, 1e-9, 1e-9).is_err());
    }

    #[test]
    fn sign_only_flips_phase() {
        let m = EprMode::new(6.217e9, 0.99195, Role::Qubit).unwrap();
        let plus = zpf_phase(&m, &junction());
        let minus = zpf_phase(&m, &junction().with_sign(-1.0).unwrap());
        assert_eq!(plus, -minus);
        assert!((plus - 0.4555).abs() < 1e-4);
    }

    #[test]
    fn registry() {
        assert_eq!(available_methods(), vec!["perturbative", "diagonalize"]);
        assert!(method("lom").is_err());
    }
}
