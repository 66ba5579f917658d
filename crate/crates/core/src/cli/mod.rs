//! Command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration error,
//! 3 capacity or enumeration-budget error.

mod commands;
pub mod config;
pub mod grid;
pub mod manifest;
pub mod model_file;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_VERIFY_FAILED: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_CAPACITY: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "tourney-extremes", version, about = "Extreme scores in round-robin tournaments: exact laws, limits, bounds and simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact exceedance quantities for every (n, t) of the grid
    Exact(SweepArgs),
    /// Poisson-approximation bounds against the rate envelope
    Bounds(SweepArgs),
    /// Monte Carlo tournaments
    Simulate(SimulateArgs),
    /// Oracle-versus-engine verification suite
    Verify(VerifyArgs),
    /// Asymptotic formulas on a grid
    Limits(LimitsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output file (standard output when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// JSON configuration, or an earlier output file whose manifest to reuse
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Model file, or `classical` / `chess`
    #[arg(long)]
    pub model: Option<String>,
    /// Player counts, e.g. `100,1000` or `geom:2^8:2^16:5`
    #[arg(long, allow_hyphen_values = true)]
    pub n: Option<String>,
    /// Gumbel coordinates, e.g. `-1,0,1` or `lin:-2:2:9`
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub n: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<String>,
    /// Deepest order statistic retained (0 is the maximum)
    #[arg(long)]
    pub j: Option<u32>,
    #[arg(long)]
    pub replicates: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mutation {
    NegateCovariance,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Largest number of weighted tournaments to enumerate per check
    #[arg(long)]
    pub budget: Option<u128>,
    #[arg(long, value_enum, hide = true)]
    pub mutate: Option<Mutation>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct LimitsArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub n: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<String>,
    #[arg(long)]
    pub j: Option<u32>,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// A failed command: exit code and message.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Capacity { .. } | Error::BudgetExceeded { .. } => EXIT_CAPACITY,
            _ => EXIT_CONFIG,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl Failure {
    fn at(mut self, n: u64, t: f64) -> Self {
        self.message = format!("at n = {n}, t = {t}: {}", self.message);
        self
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let argv: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match commands::dispatch(cli.command, &argv) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
