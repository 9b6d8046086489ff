use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::amr::marking::DEFAULT_STRATEGY;
use crate::analysis::{ComparisonRow, RmseMode, ScalingSample};
use crate::eigenmode::Topology;
use crate::electrostatics::Conductor;
use crate::epr::EprJob;
use crate::fem::Order;
use crate::mesh::GeometrySpec;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub job: String,
    #[serde(default)]
    pub geometry: Option<GeometrySpec>,
    /// MSH 2.2 file used instead of a generated geometry; relative paths
    /// resolve against the config file's directory.
    #[serde(default)]
    pub mesh_file: Option<PathBuf>,
    #[serde(default)]
    pub fem: FemConfig,
    #[serde(default)]
    pub amr: AmrConfig,
    #[serde(default)]
    pub capacitance: Option<CapacitanceConfig>,
    #[serde(default)]
    pub eigen: Option<EigenConfig>,
    #[serde(default)]
    pub resonator: Option<ResonatorConfig>,
    #[serde(default)]
    pub epr: Option<EprJob>,
    #[serde(default)]
    pub comparison: Option<ComparisonConfig>,
    #[serde(default)]
    pub scaling: Option<ScalingConfig>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FemConfig {
    #[serde(default = "default_order")]
    pub order: Order,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_order() -> Order {
    Order::P1
}

fn default_tol() -> f64 {
    1e-10
}

impl Default for FemConfig {
    fn default() -> Self {
        Self { order: default_order(), tol: default_tol() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergeQuantity {
    Capacitance,
    Eigen,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmrConfig {
    #[serde(default = "default_strategy")]
    pub strategy: String,
    /// τ for threshold marking, θ for Dörfler.
    #[serde(default)]
    pub parameter: Option<f64>,
    #[serde(default = "default_max_dof")]
    pub max_dof: usize,
    /// Relative change below which two consecutive iterations stop the loop.
    #[serde(default = "default_target")]
    pub target: f64,
    #[serde(default = "default_quantity")]
    pub quantity: ConvergeQuantity,
    /// Mode index (0-based) tracked by eigen runs.
    #[serde(default)]
    pub mode: usize,
}

fn default_strategy() -> String {
    DEFAULT_STRATEGY.into()
}

fn default_max_dof() -> usize {
    100_000
}

fn default_target() -> f64 {
    1e-4
}

fn default_quantity() -> ConvergeQuantity {
    ConvergeQuantity::Capacitance
}

impl Default for AmrConfig {
    fn default() -> Self {
        Self {
            strategy: default_strategy(),
            parameter: None,
            max_dof: default_max_dof(),
            target: default_target(),
            quantity: default_quantity(),
            mode: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacitanceConfig {
    /// Overrides the geometry's default conductor layout.
    #[serde(default)]
    pub conductors: Option<Vec<Conductor>>,
    #[serde(default)]
    pub ground: Option<Vec<String>>,
    /// Region physical name → ε_r; needed for loaded meshes, overrides the
    /// geometry's materials otherwise.
    #[serde(default)]
    pub permittivity: Option<std::collections::BTreeMap<String, f64>>,
    /// Also report ε_eff (CPW cross-sections only).
    #[serde(default)]
    pub effective_permittivity: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenConfig {
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default)]
    pub dirichlet: Vec<String>,
}

fn default_count() -> usize {
    3
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self { count: default_count(), dirichlet: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonatorConfig {
    pub length_mm: f64,
    pub topology: Topology,
    /// Fixed ε_eff; when absent it is computed from the CPW geometry.
    #[serde(default)]
    pub eps_eff: Option<f64>,
    #[serde(default = "default_harmonic")]
    pub harmonic: u32,
}

fn default_harmonic() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonParameter {
    pub name: String,
    #[serde(default)]
    pub unit: String,
    pub rows: Vec<ComparisonEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonEntry {
    pub label: String,
    pub simulated: f64,
    pub measured: f64,
}

impl ComparisonParameter {
    pub fn rows(&self) -> Vec<ComparisonRow> {
        self.rows.iter().map(|r| ComparisonRow::new(&r.label, r.simulated, r.measured, &self.unit)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonConfig {
    pub parameters: Vec<ComparisonParameter>,
    #[serde(default = "default_modes")]
    pub modes: Vec<RmseMode>,
}

fn default_modes() -> Vec<RmseMode> {
    vec![RmseMode::Absolute, RmseMode::Percentage]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    /// Measured (workers, seconds) pairs to fit.
    #[serde(default)]
    pub samples: Vec<ScalingSample>,
    /// Worker counts at which to time matrix assembly on the config mesh
    /// instead of using `samples`.
    #[serde(default)]
    pub measure_workers: Vec<usize>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
}

fn default_repeats() -> usize {
    3
}

/// Parses a config, reporting schema problems with their line and column.
pub fn parse_config(text: &str, origin: &Path) -> Result<Config> {
    serde_json::from_str(text).map_err(|e| Error::Config(format!("{}:{}:{}: {e}", origin.display(), e.line(), e.column())))
}
