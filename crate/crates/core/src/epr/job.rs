#![allow(non_snake_case)]

use serde::{Deserialize, Serialize};

use super::{method, DiagSettings, EprMode, JunctionSpec, Role};
use crate::constants::PLANCK;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeInput {
    pub f_GHz: f64,
    pub p: f64,
    pub role: Role,
}

/// Exactly one of `L_J_nH` and `E_J_GHz` (E_J/h).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JunctionInput {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub L_J_nH: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub E_J_GHz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign: Option<f64>,
}

impl JunctionInput {
    pub fn to_spec(&self) -> Result<JunctionSpec> {
        let spec = match (self.L_J_nH, self.E_J_GHz) {
            (Some(l), None) => JunctionSpec::from_inductance(l * 1e-9)?,
            (None, Some(e)) => JunctionSpec::from_energy(e * 1e9 * PLANCK)?,
            _ => return Err(Error::Config("junction needs exactly one of \"L_J_nH\" or \"E_J_GHz\"".into())),
        };
        spec.with_sign(self.sign.unwrap_or(1.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EprJob {
    pub modes: Vec<ModeInput>,
    pub junction: JunctionInput,
    #[serde(default = "default_method")]
    pub method: String,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_order")]
    pub order: u32,
}

fn default_method() -> String {
    "perturbative".into()
}

fn default_n_max() -> usize {
    DiagSettings::default().n_max
}

fn default_order() -> u32 {
    DiagSettings::default().order
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EprReport {
    pub method: String,
    pub E_J_GHz: f64,
    pub L_J_nH: f64,
    pub alpha_q_MHz: f64,
    pub alpha_r_MHz: f64,
    pub chi_qr_MHz: f64,
    pub f_q_GHz: f64,
    pub f_r_GHz: Option<f64>,
    pub g_MHz: Option<f64>,
    pub phi_zpf: Vec<f64>,
}

pub fn run_job(job: &EprJob) -> Result<EprReport> {
    let junction = job.junction.to_spec()?;
    let modes: Vec<EprMode> = job
        .modes
        .iter()
        .map(|m| EprMode::new(m.f_GHz * 1e9, m.p, m.role))
        .collect::<Result<_>>()
        .map_err(|e| Error::Config(e.to_string()))?;
    let settings = DiagSettings { n_max: job.n_max, order: job.order };
    let params = method(&job.method)?.extract(&modes, &junction, &settings)?;
    Ok(EprReport {
        method: job.method.clone(),
        E_J_GHz: junction.e_j_hz() / 1e9,
        L_J_nH: junction.l_j() * 1e9,
        alpha_q_MHz: params.alpha_q_hz / 1e6,
        alpha_r_MHz: params.alpha_r_hz / 1e6,
        chi_qr_MHz: params.chi_qr_hz / 1e6,
        f_q_GHz: params.f_q_dressed_hz / 1e9,
        f_r_GHz: params.f_r_hz.map(|f| f / 1e9),
        g_MHz: params.g_hz.map(|g| g / 1e6),
        phi_zpf: params.phi_zpf,
    })
}
