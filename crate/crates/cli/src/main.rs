//! `hilfer`: certificates, solutions and stability checks for coupled Hilfer
//! fractional Langevin systems described by JSON problem files.
//!
//! Exit codes: 0 success, 1 I/O or internal failure, 2 invalid input, 3
//! iteration limit reached, 4 divergence, 5 stability bound violated, 6
//! stability conditions not satisfied.

mod commands;
mod input;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug)]
pub enum CliError {
    Io(String),
    Input(String),
    Internal(String),
    MaxIter,
    Diverged,
    BoundViolated,
    NotCertified(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Io(_) | CliError::Internal(_) => 1,
            CliError::Input(_) => 2,
            CliError::MaxIter => 3,
            CliError::Diverged => 4,
            CliError::BoundViolated => 5,
            CliError::NotCertified(_) => 6,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Io(m) | CliError::Input(m) | CliError::Internal(m) => m.clone(),
            CliError::MaxIter => "iteration limit reached without convergence".into(),
            CliError::Diverged => "iteration diverged".into(),
            CliError::BoundViolated => "a perturbed solution violated the stability bound".into(),
            CliError::NotCertified(m) => format!("stability conditions fail: {m}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Picard,
    Linear,
}

#[derive(Debug, Parser)]
#[command(name = "hilfer", version, about = "Coupled Hilfer-Langevin boundary value problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute every certificate constant and verdict.
    Certify {
        file: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Estimate Lipschitz data by sampling when the file has none.
        #[arg(long)]
        probe_lipschitz: bool,
        /// Half-width of the (x, y) box used by the probe.
        #[arg(long, default_value_t = 10.0)]
        probe_radius: f64,
    },
    /// Solve and write `t,x,y` samples plus `<out>.report.json`.
    Solve {
        file: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Picard)]
        method: MethodArg,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        theta: Option<f64>,
    },
    /// Seeded perturbation trials against the Ulam-Hyers bound.
    Stability {
        file: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        eps1: f64,
        #[arg(long)]
        eps2: f64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        probe_lipschitz: bool,
        #[arg(long, default_value_t = 10.0)]
        probe_radius: f64,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Certify { file, out, probe_lipschitz, probe_radius } => {
            let probe = probe_lipschitz.then_some(probe_radius);
            commands::certify(&file, &out, probe)
        }
        Command::Solve { file, out, method, tol, max_iter, theta } => {
            commands::solve(&file, &out, method, commands::Overrides { tol, max_iter, theta })
        }
        Command::Stability {
            file,
            out,
            eps1,
            eps2,
            trials,
            seed,
            probe_lipschitz,
            probe_radius,
            tol,
            max_iter,
        } => {
            let probe = probe_lipschitz.then_some(probe_radius);
            let overrides = commands::Overrides { tol, max_iter, theta: None };
            commands::stability(&file, &out, (eps1, eps2), trials, seed, probe, overrides)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hilfer: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
