//! Command-line front end: config parsing, one subcommand per analysis, and
//! plot-ready data emission.

mod commands;
mod config;
mod outputs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Io(std::io::Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

#[derive(Parser)]
#[command(
    name = "spinflip",
    version,
    about = "Analysis pipeline for a semiconductor laser under optical injection",
    long_about = "Simulates the rate equations, locates and classifies equilibria for weak \
                  and strong injection, extracts the injection-locking activation function, \
                  and fits complex-valued networks built on it. All commands emit plot-ready \
                  CSV/JSON plus a run manifest."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML configuration file (built-in defaults when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Integrator tolerance override: relative X, absolute X/1000.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Random seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the system under a piecewise-constant injection schedule.
    Simulate,
    /// Trace the equilibrium branches, detect folds, and census the points.
    Equilibria,
    /// Sweep the injection magnitude and classify every equilibrium.
    Stability,
    /// Strong-injection sweep: deviation law and intensity ratio.
    Strong,
    /// Tabulate the injection-locking activation function.
    Activation,
    /// Random-feature network fits against the identity target.
    Nnfit,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Equilibria => "equilibria",
            Command::Stability => "stability",
            Command::Strong => "strong",
            Command::Activation => "activation",
            Command::Nnfit => "nnfit",
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = config::load(cli.config.as_deref())?;
    commands::apply_tol_override(&mut cfg, cli.tol)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    commands::dispatch(cli.command.name(), &cfg, &cli.out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
        Err(CliError::Io(e)) => {
            eprintln!("io error: {e}");
            ExitCode::FAILURE
        }
    }
}
