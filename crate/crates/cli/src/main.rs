//! `spur`: simulate, estimate, certify and sweep from the command line.
//!
//! Exit codes: 0 success, 1 certificate rejected, 2 usage or input error,
//! 3 numerical failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use spur_core::GridMode;

#[derive(Parser, Debug)]
#[command(
    name = "spur",
    version,
    about = "Estimate the number of communities with a penalized SDP"
)]
struct Cli {
    /// Seed for sampling and k-means; overrides config seeds in `simulate`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run replicated block-model experiments from a config file.
    Simulate {
        config: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Also run the USVT and Bethe-Hessian estimators.
        #[arg(long)]
        baselines: bool,
        /// Print the fully spelled-out config and exit.
        #[arg(long)]
        print_config: bool,
    },
    /// Estimate the number of communities of a graph.
    Estimate {
        graph: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        baselines: bool,
        /// Write the per-penalty sweep CSV here ("-" for stdout).
        #[arg(long, value_name = "PATH")]
        sweep: Option<PathBuf>,
        /// Ground-truth labels; adds the NMI of the recovered labels.
        #[arg(long, value_name = "PATH")]
        labels: Option<PathBuf>,
    },
    /// Check the dual certificate of a labelling at one penalty.
    Certify {
        graph: PathBuf,
        labels: PathBuf,
        #[arg(long)]
        lambda: f64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Solve the penalized program along a penalty grid.
    Sweep {
        graph: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        /// Explicit penalties; replaces the generated grid.
        #[arg(long, value_delimiter = ',')]
        lambda: Vec<f64>,
        /// Solve every penalty from scratch, in parallel.
        #[arg(long)]
        no_warm_start: bool,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long, short, value_name = "PATH")]
        output: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
struct GridArgs {
    #[arg(long)]
    grid_size: Option<usize>,
    #[arg(long, value_enum)]
    grid_mode: Option<Mode>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Mode {
    Paper,
    Degree,
}

impl From<Mode> for GridMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Paper => GridMode::Paper,
            Mode::Degree => GridMode::DegreeScaled,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {:#}", failure.error);
            ExitCode::from(failure.code)
        }
    }
}
