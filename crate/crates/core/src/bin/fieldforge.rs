use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fieldforge::jobs::{parse_config, run_study, write_artifacts, RunContext};
use fieldforge::parallel::{with_workers, WORKERS_ENV};
use fieldforge::{Error, Result};

#[derive(Parser)]
#[command(name = "fieldforge", version, about = "Finite-element field solver for superconducting-circuit design")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON job configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads
    #[arg(long, global = true, env = WORKERS_ENV)]
    workers: Option<usize>,

    /// Output directory (overrides "output_dir" in the config)
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Seed for randomized start vectors
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Generate or load a mesh and write it as MSH 2.2
    Mesh,
    /// Capacitance matrix of the configured conductors
    Cap,
    /// Cavity eigenmodes or a CPW resonator frequency
    Modes,
    /// Hamiltonian parameters from participation ratios
    Epr,
    /// Adaptive refinement study with a convergence trace
    Converge,
    /// RMSE of simulated against measured parameters
    Rmse,
    /// Amdahl's-law fit of scaling samples
    Amdahl,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Mesh => "mesh",
            Command::Cap => "cap",
            Command::Modes => "modes",
            Command::Epr => "epr",
            Command::Converge => "converge",
            Command::Rmse => "rmse",
            Command::Amdahl => "amdahl",
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let path = cli.config.as_ref().ok_or_else(|| Error::Config("--config <file> is required".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    let config = parse_config(&text, path)?;
    if config.job != cli.command.name() {
        return Err(Error::Config(format!(
            "config declares job {:?} but the {:?} subcommand was used",
            config.job,
            cli.command.name()
        )));
    }
    let out_dir = cli
        .output
        .clone()
        .or_else(|| config.output_dir.clone())
        .ok_or_else(|| Error::Config("no output directory: set \"output_dir\" or pass --output".into()))?;
    let workers = cli.workers.unwrap_or(1).max(1);
    let ctx = RunContext { seed: cli.seed, base_dir: path.parent().map(Path::to_path_buf).unwrap_or_default() };
    let artifacts = with_workers(workers, || run_study(&config, &ctx))?;
    write_artifacts(&out_dir, &artifacts)?;
    for a in &artifacts {
        println!("{}", out_dir.join(&a.name).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { 3 } else { 2 })
        }
    }
}
