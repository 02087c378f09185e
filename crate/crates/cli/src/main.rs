mod check;
mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 2021;

#[derive(Debug, Parser)]
#[command(name = "afclink", version, about = "Predict, simulate and analyze a heralded two-memory entanglement link")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct ConfigArgs {
    /// TOML configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Override a configuration value, e.g. `idler_channel_a.transmission_db=6.5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    /// Extra loss in both idler channels, dB.
    IdlerLossDb,
    /// AFC storage time of both memories, seconds.
    StorageTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Policy {
    First,
    All,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact model prediction of every figure of merit.
    Predict {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Generate a time-tagged event stream.
    Simulate {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Wall-clock duration, seconds.
        #[arg(long)]
        duration: f64,
        /// Also write a CSV copy of the stream.
        #[arg(long)]
        csv: bool,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Reconstruct the heralded state from an event stream.
    Analyze {
        #[arg(long)]
        stream: PathBuf,
        /// Configuration providing the back-trace efficiencies and the coincidence window.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Coincidence window, seconds; the stream header value when absent.
        #[arg(long)]
        window: Option<f64>,
        /// Subtract accidentals estimated in a shifted control window.
        #[arg(long)]
        accidentals: bool,
        /// Bootstrap resamples for the errors; first-order propagation when absent.
        #[arg(long)]
        bootstrap: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Predict, simulate and analyze along one configuration axis.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Simulated seconds per point; prediction only when absent.
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Heralding rate and concurrence versus the number of temporal modes.
    Multimode {
        #[arg(long)]
        stream: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_enum, default_value_t = Policy::First)]
        policy: Policy,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Recompute the outputs recorded in a manifest and compare them.
    Check {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

/// A failure with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_CHECK: u8 = 4;

impl Failure {
    pub fn data(message: impl Into<String>) -> Self {
        Self { code: EXIT_DATA, message: message.into() }
    }
}

impl From<afc_link::Error> for Failure {
    fn from(e: afc_link::Error) -> Self {
        let code = if e.is_config() { EXIT_CONFIG } else { EXIT_DATA };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::data(e.to_string())
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    match commands::run(cli, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
