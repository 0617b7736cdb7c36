//! `dmed` — simulate bandit experiments, evaluate the pull-count bound, and
//! verify the divergence index and deviation bounds by Monte Carlo.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Input/usage problems exit with 2, runtime or verification failures with 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failure(String),
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    fn failure(msg: impl Into<String>) -> Self {
        CliError::Failure(msg.into())
    }
}

pub type CliResult = Result<(), CliError>;

#[derive(Parser)]
#[command(
    name = "dmed",
    version,
    about = "DMED bandit simulations and minimum-divergence index tools"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment and write regret.csv + summary.json.
    Simulate {
        /// TOML experiment config.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (created if absent).
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the pull-count bound for one suboptimal arm.
    Bound {
        /// TOML experiment config carrying the truth models.
        #[arg(long)]
        config: PathBuf,
        /// Arm index, 1-based as in the config order.
        #[arg(long)]
        arm: usize,
        /// Round count the bound is evaluated at.
        #[arg(long)]
        n: u64,
        /// Fix epsilon instead of optimizing it.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Fix delta instead of optimizing it.
        #[arg(long)]
        delta: Option<f64>,
        /// Policy parameter r; defaults to the config's DMED r (or 0.1).
        #[arg(long)]
        r: Option<f64>,
    },
    /// Run the randomized divergence property suite.
    VerifyDinf {
        /// Random instances per property.
        #[arg(long)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Monte Carlo check of the deviation bounds; writes ldp.csv.
    VerifyLdp {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the index on a newline-separated sample file.
    ShowIndex {
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        mu: f64,
    },
}

fn init_workers() {
    if let Ok(raw) = std::env::var("DMED_WORKERS") {
        if let Ok(n) = raw.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn main() -> ExitCode {
    init_workers();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { config, out } => commands::simulate(&config, &out),
        Command::Bound {
            config,
            arm,
            n,
            epsilon,
            delta,
            r,
        } => commands::bound(&config, arm, n, epsilon, delta, r),
        Command::VerifyDinf { trials, seed } => commands::verify_dinf(trials, seed),
        Command::VerifyLdp { config, out } => commands::verify_ldp(&config, &out),
        Command::ShowIndex { samples, mu } => commands::show_index(&samples, mu),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
