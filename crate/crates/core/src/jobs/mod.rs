//! Config-driven jobs behind the command-line tool.
//!
//! A job turns a parsed [`Config`] into named artifacts held in memory;
//! nothing is written unless the whole job succeeds.

mod config;
mod runners;

use std::fs;
use std::path::{Path, PathBuf};

pub use config::{
    parse_config, AmrConfig, CapacitanceConfig, ComparisonConfig, ComparisonEntry, ComparisonParameter, Config,
    ConvergeQuantity, EigenConfig, FemConfig, ResonatorConfig, ScalingConfig,
};

pub use runners::measure_assembly;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    pub fn new(name: &str, contents: String) -> Self {
        Self { name: name.to_string(), contents }
    }
}

/// Settings from the command line that apply to every job.
#[derive(Debug, Clone, PartialEq)]
pub struct RunContext {
    pub seed: u64,
    /// Directory that relative paths in the config resolve against.
    pub base_dir: PathBuf,
}

impl Default for RunContext {
    fn default() -> Self {
        Self { seed: 42, base_dir: PathBuf::from(".") }
    }
}

pub trait Job: Send + Sync {
    fn name(&self) -> &'static str;
    fn run(&self, config: &Config, ctx: &RunContext) -> Result<Vec<Artifact>>;
}

type Constructor = fn() -> Box<dyn Job>;

const REGISTRY: &[(&str, Constructor)] = &[
    ("mesh", || Box::new(runners::MeshJob)),
    ("cap", || Box::new(runners::CapJob)),
    ("modes", || Box::new(runners::ModesJob)),
    ("epr", || Box::new(runners::EprJobRunner)),
    ("converge", || Box::new(runners::ConvergeJob)),
    ("rmse", || Box::new(runners::RmseJob)),
    ("amdahl", || Box::new(runners::AmdahlJob)),
];

pub fn available_jobs() -> Vec<&'static str> {
    REGISTRY.iter().map(|(n, _)| *n).collect()
}

pub fn job(name: &str) -> Result<Box<dyn Job>> {
    REGISTRY
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, c)| c())
        .ok_or_else(|| Error::Config(format!("unknown job {name:?}; available: {:?}", available_jobs())))
}

/// Runs the job named in `config`, returning its artifacts.
pub fn run_study(config: &Config, ctx: &RunContext) -> Result<Vec<Artifact>> {
    job(&config.job)?.run(config, ctx)
}

/// Writes artifacts into `dir`, creating it if needed.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for a in artifacts {
        fs::write(dir.join(&a.name), &a.contents)?;
    }
    Ok(())
}
