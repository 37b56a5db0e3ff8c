//! `subexp`: free energies, assumption checks and rare-event estimates for
//! sums of stretched-exponential variables.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod model;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::model::ModelKind;

#[derive(Debug, Parser)]
#[command(name = "subexp", version, about, args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub opts: Options,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Table of lambda, lambda', lambda'' and V over an eta grid.
    FreeEnergy,
    /// Assumption report as JSON; exit 3 when a verdict fails.
    Check,
    /// Legendre transform, its curvature and the rate function on an x grid.
    Legendre,
    /// Rare-event estimates of P(S_n >= x) or P(|S_n - x| < delta).
    Estimate,
    /// Esscher estimates and empirical rates along an n grid.
    RateSweep,
    /// Big-jump decomposition, Tchebychev bounds and the IBP identity.
    Diagnostics,
    /// Timing and accuracy of the three estimators at equal budget.
    Bench,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::FreeEnergy => "free-energy",
            Self::Check => "check",
            Self::Legendre => "legendre",
            Self::Estimate => "estimate",
            Self::RateSweep => "rate-sweep",
            Self::Diagnostics => "diagnostics",
            Self::Bench => "bench",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EventShapeArg {
    Tail,
    Ball,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Naive,
    Esscher,
    Shift,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Every option is global so it may follow the subcommand; unset options
/// fall back to the config file, then to the defaults below.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Options {
    /// key=value file; command-line flags take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Law of the summands [default: exp-power].
    #[arg(long, global = true, value_enum)]
    pub model: Option<ModelKind>,
    /// Power p of the base variable [default: 2].
    #[arg(long, global = true)]
    pub p: Option<f64>,
    /// Scaling exponent; fixed to 1/p (exp-power) or 2/p (gauss-power).
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Shape of the symmetrized gamma base law [default: 2].
    #[arg(long, global = true)]
    pub gamma_shape: Option<f64>,
    /// Number of summands [default: 100].
    #[arg(long, global = true)]
    pub n: Option<u64>,
    /// Level of the empirical mean [default: 1].
    #[arg(long, global = true)]
    pub x: Option<f64>,
    /// Ball radius for --shape ball.
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// Event shape [default: tail].
    #[arg(long, global = true, value_enum)]
    pub shape: Option<EventShapeArg>,
    /// Replications per estimate [default: 100000].
    #[arg(long, global = true)]
    pub reps: Option<u64>,
    /// Master seed [default: 1].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Comma-separated n values for rate-sweep [default: 10,50,100,500].
    #[arg(long, global = true, value_delimiter = ',')]
    pub n_grid: Option<Vec<u64>>,
    /// Comma-separated eta values for free-energy.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub eta_grid: Option<Vec<f64>>,
    /// Comma-separated x values for legendre.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub x_grid: Option<Vec<f64>>,
    /// Estimator [default: esscher].
    #[arg(long, global = true, value_enum)]
    pub method: Option<MethodArg>,
    /// Fixed tilt for the Esscher estimator instead of the optimal one.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub eta: Option<f64>,
    /// Worker threads [default: machine parallelism].
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file [default: stdout].
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Output format [default: csv].
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// SVG chart of the rate sweep.
    #[arg(long, global = true, value_name = "PATH")]
    pub plot: Option<PathBuf>,
}

/// Failure with its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<subexp_core::Error> for Failure {
    fn from(e: subexp_core::Error) -> Self {
        Self {
            code: if e.is_numeric() { 4 } else { 2 },
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::usage(format!("i/o error: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = match config::parse_with_config(std::env::args_os().collect()) {
        Ok(cli) => cli,
        Err(f) => {
            eprintln!("error: {}", f.message);
            return ExitCode::from(f.code);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
