use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cutwave::config::ScenarioConfig;
use cutwave::scenarios::{self, RunOverrides};

/// Cut-cell discontinuous Galerkin solver for the 2D acoustic wave equation.
#[derive(Parser)]
#[command(name = "cutwave", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Scenario configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Disable state redistribution for this run.
    #[arg(long)]
    no_srd: bool,
    /// Override both jump penalties.
    #[arg(long)]
    tau: Option<f64>,
    /// Override the polynomial degree.
    #[arg(long)]
    degree: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Manufactured-solution convergence study.
    Mms(RunArgs),
    /// Operator spectra with and without penalties and redistribution.
    Eig(RunArgs),
    /// Scattering benchmark against a supplied analytic series.
    Pacman(RunArgs),
    /// Multi-object demo with a scheduled pressure pulse.
    Fish(RunArgs),
    /// Generic scenario: zero initial data, configured boundaries/outputs.
    Custom(RunArgs),
    /// Dump mesh, quadrature, and merge-neighborhood tables.
    Mesh(RunArgs),
    /// Sample the analytic scattering field on a uniform grid.
    PacmanField {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Grid points per direction.
        #[arg(long, default_value_t = 200)]
        grid: usize,
        /// Evaluation time.
        #[arg(long, default_value_t = 0.0)]
        time: f64,
    },
    /// Write a demonstration modal-coefficient CSV.
    GenPacmanDemo {
        #[arg(long)]
        out: PathBuf,
        /// Number of modal terms.
        #[arg(long, default_value_t = 100)]
        terms: usize,
        #[arg(long, default_value_t = 20240314)]
        seed: u64,
    },
}

fn load(config: &PathBuf) -> Result<(ScenarioConfig, Vec<u8>, PathBuf), scenarios::RunError> {
    let (cfg, bytes) = ScenarioConfig::from_file(config)?;
    let base = config
        .parent()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok((cfg, bytes, base))
}

fn dispatch(cmd: Command) -> Result<(), scenarios::RunError> {
    match cmd {
        Command::Mms(a) | Command::Eig(a) | Command::Pacman(a) | Command::Fish(a)
        | Command::Custom(a) => {
            let (cfg, bytes, base) = load(&a.config)?;
            let overrides = RunOverrides {
                no_srd: a.no_srd,
                tau: a.tau,
                degree: a.degree,
            };
            scenarios::run(cfg, &bytes, &base, &a.out, overrides)
        }
        Command::Mesh(a) => {
            let (mut cfg, bytes, base) = load(&a.config)?;
            if let Some(d) = a.degree {
                cfg.degree = d;
            }
            if a.no_srd {
                cfg.srd.enabled = false;
            }
            scenarios::run_mesh_dump(&cfg, &bytes, &base, &a.out)
        }
        Command::PacmanField {
            config,
            out,
            grid,
            time,
        } => {
            let (cfg, _bytes, base) = load(&config)?;
            scenarios::run_pacman_field(&cfg, &base, &out, grid, time)
        }
        Command::GenPacmanDemo { out, terms, seed } => {
            scenarios::run_gen_demo_coefficients(&out, terms, seed)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cutwave: {e}");
            ExitCode::FAILURE
        }
    }
}
