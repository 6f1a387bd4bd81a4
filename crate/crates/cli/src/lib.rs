//! Command-line front end for the `dpd_rao` library.
//!
//! [`Cli`] holds the parsed arguments and [`execute`] runs a command and
//! writes its report. Failures map onto the exit-code contract through
//! [`CliError::exit_code`].

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod ingest;
mod parse;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub use commands::execute;
pub use ingest::{format_sample, ingest, parse_sample, write_sample, TELEPHONE};
pub use parse::{parse_grid, parse_mixture, parse_n_list};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] dpd_rao::Error),
}

impl CliError {
    /// 2 for usage, 3 for data and I/O, 4 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "dpd-rao", version, about = "Robust Rao-type tests based on minimum density power divergence estimators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    /// Normal mean with known scale.
    Simple,
    /// Normal mean with the scale estimated under the null.
    Composite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Level,
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output format; `test` defaults to json, every other command to csv.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct NullArgs {
    /// Hypothesised mean.
    #[arg(long, default_value_t = 0.0)]
    pub mu0: f64,
    /// Known scale; required by the simple test.
    #[arg(long)]
    pub sigma0: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one test and print its report.
    #[command(allow_negative_numbers = true)]
    Test {
        #[arg(value_enum)]
        kind: Kind,
        /// Data file or `telephone`.
        #[arg(long)]
        data: String,
        #[command(flatten)]
        null: NullArgs,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Statistic and decision over a grid of tuning parameters.
    #[command(allow_negative_numbers = true)]
    Sweep {
        #[arg(value_enum, default_value_t = Kind::Simple)]
        kind: Kind,
        #[arg(long)]
        data: String,
        #[command(flatten)]
        null: NullArgs,
        /// `start:stop:step` or a comma list.
        #[arg(long, default_value = "0:1:0.02", allow_hyphen_values = true)]
        beta_grid: String,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Monte Carlo rejection rates under a normal mixture.
    #[command(allow_negative_numbers = true)]
    Simulate {
        #[arg(value_enum)]
        target: Target,
        #[arg(long, value_enum, default_value_t = Kind::Simple)]
        scenario: Kind,
        #[arg(long, default_value = "0:1:0.2", allow_hyphen_values = true)]
        beta_grid: String,
        /// Comma list or `start:stop:step` of sample sizes.
        #[arg(long, default_value = "10,20,30,40,50")]
        n_list: String,
        #[arg(long, default_value_t = 20_000)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Weight of the default outlying component.
        #[arg(long, conflicts_with = "mixture")]
        epsilon: Option<f64>,
        /// Data law as `m1,s1,w1;m2,s2,w2;...`.
        #[arg(long, allow_hyphen_values = true)]
        mixture: Option<String>,
        #[arg(long, default_value_t = 0.0)]
        mu0: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma0: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Second-order influence and power influence over a grid of contamination points.
    #[command(allow_negative_numbers = true)]
    Influence {
        #[arg(value_enum, default_value_t = Kind::Simple)]
        kind: Kind,
        #[arg(long, default_value_t = 0.0)]
        mu0: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma0: f64,
        #[arg(long, default_value_t = 0.5)]
        beta: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value = "-10:10:0.1", allow_hyphen_values = true)]
        y_grid: String,
        /// Contiguous drift; one value, or `d_mu,d_sigma` for the composite model.
        #[arg(long, default_value = "1", allow_hyphen_values = true)]
        d: String,
        #[command(flatten)]
        output: OutputArgs,
    },
}
