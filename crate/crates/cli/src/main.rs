#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cuspex::horoworld::Backend;

mod commands;
mod config;
mod plot;

use config::Overrides;

/// Failure classes, mapped to exit codes 1, 2 and 3.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("convergence failure: {0}")]
    Convergence(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Verification(_) => 2,
            CliError::Convergence(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<cuspex::Error> for CliError {
    fn from(e: cuspex::Error) -> Self {
        use cuspex::Error::*;
        match e {
            UnknownPreset(_) | InvalidGroup(_) | InvalidMeasure(_) | InvalidArgument(_) | NotDisjoint(_)
            | UnsupportedCollection => CliError::Config(e.to_string()),
            _ => CliError::Convergence(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "cuspex", version, about = "Cusp excursions of random and typical geodesics")]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Horoball enumeration backend.
    #[arg(long, global = true)]
    backend: Option<Backend>,
    /// Excursion cutoff ε.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Worker threads.
    #[arg(long, global = true, env = "CUSPEX_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Excursion sums along random-walk and Lebesgue rays.
    Simulate,
    /// Run the verification suites and write a JSON report.
    Verify {
        /// Trials per fitted-constant check.
        #[arg(long)]
        fit_trials: Option<usize>,
        #[arg(long, hide = true)]
        inject_sign_error: bool,
    },
    /// Flow averages of f_k against their volume integrals.
    Birkhoff,
    /// SVG of median ratio against log t from a simulate CSV.
    ExportPlot {
        /// CSV written by `simulate`.
        csv: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("CUSPEX_THREADS: {e}")))?;
    }
    let over = Overrides {
        seed: cli.seed,
        out: cli.out.clone(),
        backend: cli.backend,
        epsilon: cli.epsilon,
    };
    let need_config = || {
        cli.config
            .clone()
            .ok_or_else(|| CliError::Config("--config is required for this command".into()))
    };
    match cli.command {
        Command::Simulate => commands::simulate(&need_config()?, &over),
        Command::Birkhoff => commands::birkhoff(&need_config()?, &over),
        Command::Verify {
            fit_trials,
            inject_sign_error,
        } => {
            let out = cli.out.unwrap_or_else(|| PathBuf::from("out"));
            commands::verify(&out, cli.seed.unwrap_or(0), fit_trials, inject_sign_error)
        }
        Command::ExportPlot { csv } => {
            let out = cli.out.unwrap_or_else(|| PathBuf::from("out"));
            plot::export(&csv, &out).map(|p| println!("wrote {}", p.display()))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cuspex: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_failure_class() {
        assert_eq!(CliError::from(cuspex::Error::UnknownPreset("x".into())).exit_code(), 1);
        assert_eq!(CliError::from(cuspex::Error::NotConverged("drift".into())).exit_code(), 3);
        assert_eq!(CliError::from(cuspex::Error::QuadratureFailure { a: 0.0, b: 1.0 }).exit_code(), 3);
        assert_eq!(CliError::Verification(String::new()).exit_code(), 2);
    }
}
