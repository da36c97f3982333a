//! `knudsen`: replays an order-event log on the transaction clock and emits
//! the layer, mean-free-path, Knudsen-number and depletion-rate analytics as
//! CSV or newline-delimited JSON.
//!
//! Tables go to `--out` (`-` is stdout); a one-line JSON summary goes to
//! stderr. Exit codes: 0 success, 2 input error, 3 insufficient data.

mod commands;
mod stream;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use knudsen_core::Scenario;

#[derive(Parser, Debug)]
#[command(name = "knudsen", version, about = "Order-book layer and Knudsen-number analytics")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Event log (`-` for stdin).
    #[arg(long, short, global = true, default_value = "-")]
    pub input: String,
    /// Output path (`-` for stdout).
    #[arg(long, short, global = true, default_value = "-")]
    pub out: String,
    #[arg(long, global = true, default_value = "SYNTH")]
    pub symbol: String,
    /// Price of one tick.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub delta_x: f64,
    /// Size of one volume unit.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub delta_n: f64,
    /// Block size in ticks (default depends on the subcommand).
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Window length in blocks.
    #[arg(long, global = true)]
    pub window_s: Option<usize>,
    #[arg(long, global = true, default_value_t = 100)]
    pub gamma_max: i64,
    #[arg(long, global = true)]
    pub gamma_c_minus: Option<u32>,
    #[arg(long, global = true)]
    pub gamma_c_plus: Option<u32>,
    #[arg(long, global = true, default_value_t = 0.1)]
    pub theta_kn: f64,
    /// Depletion-rate threshold (default: joint 5% quantile of the data).
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub theta_lambda: Option<f64>,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, global = true, default_value = "stationary")]
    pub scenario: Scenario,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Per-transaction best prices, mid and side volumes.
    Replay,
    /// Power spectra of depth volumes and their low-frequency exponents.
    Spectrum {
        /// Depths whose cumulative volume is analysed.
        #[arg(long, value_delimiter = ',', default_value = "0,100")]
        gamma: Vec<i64>,
    },
    /// Per-depth and cumulative correlation curves with the inner-layer depth.
    Corr,
    /// Block flow/velocity scatter and the fitted mean free paths.
    Mfp,
    /// Windowed indicator records as newline-delimited JSON.
    Knudsen,
    /// Fit of the Knudsen number against mean inner-layer occupancy.
    Kappa,
    /// Joint histogram of depletion rates and the joint quantile threshold.
    Rates {
        #[arg(long, default_value_t = 40)]
        bins: usize,
        #[arg(long, default_value_t = 0.05)]
        p: f64,
    },
    /// Flagged depletion regimes per side.
    Detect,
    /// Depth-volume snapshots at the given ticks.
    Profile {
        #[arg(long, value_delimiter = ',', required = true)]
        ticks: Vec<u64>,
    },
    /// Writes a synthetic event log.
    Synth {
        #[arg(long)]
        n_events: Option<usize>,
    },
}

/// Failure classes, mapped onto the process exit code.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Insufficient(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Insufficient(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Insufficient(m) => write!(f, "insufficient data: {m}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let c = &cli.common;
    match cli.command {
        Command::Replay => commands::replay(c),
        Command::Spectrum { gamma } => commands::spectrum(c, &gamma),
        Command::Corr => commands::corr(c),
        Command::Mfp => commands::mfp(c),
        Command::Knudsen => commands::knudsen(c),
        Command::Kappa => commands::kappa(c),
        Command::Rates { bins, p } => commands::rates(c, bins, p),
        Command::Detect => commands::detect(c),
        Command::Profile { ticks } => commands::profile(c, &ticks),
        Command::Synth { n_events } => commands::synth(c, n_events),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("knudsen: {e}");
            ExitCode::from(e.code())
        }
    }
}

pub fn out_path(s: &str) -> Option<PathBuf> {
    (s != "-").then(|| PathBuf::from(s))
}
