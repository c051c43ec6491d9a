//! Command-line front end for `rope-core`.
//!
//! Times are given in units of `1/J` (`--T`) or seconds (`--T-seconds`); the
//! rescaled time used by the library never appears on the command line.

pub mod commands;
pub mod curves;
pub mod output;
pub mod params;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rope_core::RopeError;

pub use params::{SystemArgs, TimeArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("IO error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] RopeError),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 invalid input, 2 verification or numerical failure, 3 IO failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 1,
            CliError::Verification(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Core(e) => match e {
                RopeError::InvalidParameter(_)
                | RopeError::InvalidSchedule(_)
                | RopeError::Parse { .. }
                | RopeError::RfCapExceeded { .. } => 1,
                _ => 2,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "rope",
    version,
    about = "Relaxation-optimized coherence transfer between two coupled spins"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form efficiencies; with a horizon also the finite-time geometry.
    Efficiency {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        time: TimeArgs,
    },
    /// Efficiency and gain curves as CSV files.
    Curves(CurvesArgs),
    /// Optimal control schedule for a horizon.
    Synthesize {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        time: TimeArgs,
        /// Samples per phase.
        #[arg(long, default_value_t = rope_core::synthesis::DEFAULT_SAMPLES_PER_PHASE)]
        grid: usize,
        /// Schedule file; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compile the optimal schedule into hard pulses, delays and shaped rf.
    Compile {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        time: TimeArgs,
        /// Compile this schedule file instead of synthesizing one.
        #[arg(long)]
        schedule: Option<PathBuf>,
        /// Target operator, e.g. 2IySz.
        #[arg(long, default_value = "2IySz")]
        target: String,
        /// Largest rf rate in units of J.
        #[arg(long = "rf-cap", default_value_t = rope_core::pulse::DEFAULT_RF_CAP_OVER_J)]
        rf_cap: f64,
        #[arg(long, default_value_t = rope_core::synthesis::DEFAULT_SAMPLES_PER_PHASE)]
        grid: usize,
        /// Output directory for the manifest and shaped-pulse tables.
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate the compiled sequence from Ix and write the trajectory as CSV.
    Simulate {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        time: TimeArgs,
        #[arg(long, default_value = "2IySz")]
        target: String,
        /// Trace points.
        #[arg(long, default_value_t = 401)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-check closed forms, reduced model, numerical optimum and quantum simulation.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    /// Relaxation ratios for the efficiency-versus-horizon tables.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.25, 0.5, 1.0, 2.0])]
    pub xi: Vec<f64>,
    /// Longest horizon in units of 1/J.
    #[arg(long = "T", default_value_t = 1.0)]
    pub t_max: f64,
    /// Points per curve.
    #[arg(long, default_value_t = 201)]
    pub grid: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub time: TimeArgs,
    /// Control cells of the numerical optimizer.
    #[arg(long, default_value_t = 400)]
    pub grid: usize,
    #[arg(long, default_value_t = rope_core::oracle::OptimizeOptions::<f64>::default().seed)]
    pub seed: u64,
    /// Largest allowed disagreement between efficiencies.
    #[arg(long, default_value_t = 5e-3)]
    pub tolerance: f64,
    /// Directory for the optimized controls.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs a parsed command, writing the report to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Efficiency { system, time } => commands::efficiency(&system, &time, out),
        Command::Curves(args) => curves::run(&args, out),
        Command::Synthesize {
            system,
            time,
            grid,
            out: path,
        } => commands::synthesize(&system, &time, grid, path.as_deref(), out),
        Command::Compile {
            system,
            time,
            schedule,
            target,
            rf_cap,
            grid,
            out: dir,
        } => {
            let opts = commands::CompileArgs {
                schedule: schedule.as_deref(),
                target: &target,
                rf_cap,
                grid,
                dir: &dir,
            };
            commands::compile(&system, &time, &opts, out)
        }
        Command::Simulate {
            system,
            time,
            target,
            grid,
            out: path,
        } => commands::simulate(&system, &time, &target, grid, &path, out),
        Command::Verify(args) => commands::verify(&args, out),
    }
}
