//! Command-line front end: parse a network (builtin or file), analyze its
//! hypotheses, simulate it, or run the full convergence verification battery.

mod analyze;
mod instance;
mod output;
mod simulate;
mod verify;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "monocrn",
    version,
    about = "Mass-action reaction networks in extent coordinates: structural analysis, simulation, and convergence verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the structural and dynamical hypotheses of a network instance.
    Analyze(CommonArgs),
    /// Integrate the species and extent systems and write CSV trajectories.
    Simulate(SimulateArgs),
    /// Run the convergence verification battery and write a report bundle.
    Verify(VerifyArgs),
}

#[derive(Args, Clone, Debug)]
pub struct CommonArgs {
    /// Builtin example: futile-cycle | a-to-b | rotation.
    #[arg(long, conflicts_with = "input")]
    pub example: Option<String>,
    /// Network file in the reaction-per-line format (see README).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Base point sigma, comma separated, one value per species.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub sigma: Option<Vec<f64>>,
    /// Rate constant override `kf<i>=v` or `kr<i>=v` (1-based reaction index);
    /// `k<i>=v` is accepted for irreversible reactions. Repeatable.
    #[arg(long = "k", value_name = "NAME=VALUE")]
    pub rate_overrides: Vec<String>,
    /// Integration horizon for the trajectory-based checks.
    #[arg(long, default_value_t = 20.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub abs_tol: f64,
    /// Seed recorded in every output and driving all sampling.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output directory; the MONOCRN_OUT environment variable overrides it.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Output formats to write (json, csv).
    #[arg(long, value_delimiter = ',', default_value = "json,csv")]
    pub format: Vec<String>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Integrate backwards in time (domain exit is an expected outcome).
    #[arg(long)]
    pub reverse: bool,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Run a single named test of the battery.
    #[arg(long, value_name = "TEST")]
    pub only: Option<String>,
}

/// Process outcome with the documented exit codes:
/// 0 success, 1 internal error, 2 unusable input, 3 failed verdict or
/// hypothesis, 4 integration failure or exhausted budget.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Verdict(String),
    Integration(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Internal(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Verdict(_) => 3,
            Failure::Integration(_) => 4,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "error: {m}"),
            Failure::Verdict(m) => write!(f, "verdict failure: {m}"),
            Failure::Integration(m) => write!(f, "integration failure: {m}"),
            Failure::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Internal(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(args) => analyze::run(&args),
        Command::Simulate(args) => simulate::run(&args),
        Command::Verify(args) => verify::run(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(f.code())
        }
    }
}
