//! `mvinfo`: exact information-identity verification suites and toy-scale
//! multi-view training experiments from one binary.
//!
//! Exit codes: 0 success, 1 assertion/experiment failure, 2 usage or
//! configuration error.

mod config;
mod run;
mod verify;

use clap::{Parser, Subcommand};
use mvinfo::error::Error;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "mvinfo", version, about = "Multi-view information laboratory")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an exact verification suite over seeded random systems
    Verify {
        /// One of: lemmas, thm1, thm2, thm3, dpi, minimality, all
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Optional JSON report path
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate the configured dataset (batch file or joint-table fixture)
    Gen {
        #[arg(long)]
        config: PathBuf,
        /// Optional cross-check: continuous or discrete, must match the config
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train with the config's first seed; writes checkpoints and history
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Pre-generated batch file; fresh data is sampled when omitted
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Fit a linear probe on a frozen encoder checkpoint
    Probe {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: Option<PathBuf>,
        /// One of: shared, nonshared, regression
        #[arg(long)]
        task: String,
        /// Ridge strength for the regression task
        #[arg(long, default_value_t = 1e-3)]
        l2: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a neural critic and print a mutual-information estimate
    EstimateMi {
        /// One of: infonce, nwj, mine
        #[arg(long)]
        estimator: String,
        /// Per-dimension Gaussian correlation in (-1, 1)
        #[arg(long)]
        rho_corr: f64,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        /// Samples to generate
        #[arg(long, default_value_t = 4096)]
        n: usize,
        /// Subsample the critic trains and evaluates on
        #[arg(long, default_value_t = 256)]
        batch: usize,
        #[arg(long, default_value_t = 250)]
        steps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train+probe every (value, seed) cell and emit a CSV
    Sweep {
        /// One of: lambda, epochs
        #[arg(long)]
        param: String,
        /// Comma-separated grid, at least 2 values
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate a sweep CSV into per-(value, task) mean/std JSON
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn dispatch(cli: Cli) -> mvinfo::Result<i32> {
    match cli.cmd {
        Cmd::Verify { suite, trials, seed, out } => {
            verify::cmd_verify(&suite, trials, seed, out.as_deref())
        }
        Cmd::Gen { config, mode, out } => run::cmd_gen(&config, mode.as_deref(), &out),
        Cmd::Train { config, data } => run::cmd_train(&config, data.as_deref()),
        Cmd::Probe { config, checkpoint, data, task, l2, out } => {
            run::cmd_probe(&config, &checkpoint, data.as_deref(), &task, l2, out.as_deref())
        }
        Cmd::EstimateMi { estimator, rho_corr, dim, n, batch, steps, seed, out } => {
            run::cmd_estimate_mi(&estimator, rho_corr, dim, n, batch, steps, seed, out.as_deref())
        }
        Cmd::Sweep { param, values, config, out } => {
            run::cmd_sweep(&param, &values, &config, &out)
        }
        Cmd::Report { input, out } => run::cmd_report(&input, &out),
    }
}

/// Usage and configuration problems exit 2; runtime failures exit 1.
fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_)
        | Error::Domain(_)
        | Error::Validation(_)
        | Error::Encoding(_)
        | Error::Capacity(_)
        | Error::Precondition(_) => 2,
        _ => 1,
    }
}

fn main() {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(exit_code(&err));
        }
    }
}
