//! `kroncov`: Kronecker covariance estimation from the command line.
//!
//! Subcommands: `simulate-risk` (Monte Carlo risk tables), `estimate`
//! (PT/MLE/RPT or masked PT on a tensor file), `diagnose` (variance-ratio
//! and eigenvalue-angle diagnostics), `test` (factor hypothesis tests and
//! the joint-rejection experiment).
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
//! failure.

mod commands;
mod config;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "kroncov", version, about = "Kronecker covariance estimation toolkit")]
struct Cli {
    /// Worker threads (default: all cores). The KRONCOV_THREADS environment
    /// variable overrides this flag.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output directory for tables and factor files.
    #[arg(long, global = true, default_value = "kroncov-out")]
    out: PathBuf,

    /// Which table files to write.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Both)]
    format: OutputFormat,

    /// Overrides the seed from the config document.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
    Both,
}

impl OutputFormat {
    fn csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }
    fn json(self) -> bool {
        matches!(self, OutputFormat::Json | OutputFormat::Both)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Runs Monte Carlo risk scenarios from a config file or preset
    /// (table-large-n, table-moderate-n, table-large-pk).
    SimulateRisk {
        /// Config path or preset name.
        #[arg(long)]
        config: String,
    },
    /// Estimates Kronecker factors from a tensor file (or a directory of
    /// per-replicate tensor files).
    Estimate {
        /// Tensor file (header `dims=p1xp2x...`, one value[,mask] per line)
        /// or directory of such files treated as replicates.
        #[arg(long)]
        data: PathBuf,
        /// Estimator to apply.
        #[arg(long, value_enum, default_value_t = commands::estimate::EstimatorArg::Pt)]
        estimator: commands::estimate::EstimatorArg,
        /// Cap on materialized dimension.
        #[arg(long, default_value_t = kroncov::DEFAULT_MATERIALIZE_CAP)]
        materialize_cap: usize,
    },
    /// Evaluates variance-ratio diagnostics for factor spectra.
    Diagnose {
        #[arg(long)]
        config: String,
    },
    /// Runs factor hypothesis tests (single draw) or the joint-rejection
    /// experiment (preset: table-independence).
    Test {
        #[arg(long)]
        config: String,
    },
}

/// Errors are sorted into exit codes by kind.
enum Failure {
    Config(anyhow::Error),
    Data(anyhow::Error),
    Numerical(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Data(_) => 3,
            Failure::Numerical(_) => 4,
        }
    }
    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Config(e) | Failure::Data(e) | Failure::Numerical(e) => e,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let threads = std::env::var("KRONCOV_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .or(cli.threads);
    if let Some(t) = threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }

    if let Err(e) = std::fs::create_dir_all(&cli.out) {
        eprintln!("error: cannot create output directory: {e}");
        return ExitCode::from(3);
    }

    let result = match &cli.command {
        Command::SimulateRisk { config } => {
            commands::simulate_risk::run(config, cli.seed, &cli.out, cli.format.csv(), cli.format.json())
        }
        Command::Estimate {
            data,
            estimator,
            materialize_cap,
        } => commands::estimate::run(data, *estimator, *materialize_cap, &cli.out),
        Command::Diagnose { config } => {
            commands::diagnose::run(config, &cli.out, cli.format.csv(), cli.format.json())
        }
        Command::Test { config } => {
            commands::test::run(config, cli.seed, &cli.out, cli.format.csv(), cli.format.json())
        }
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
