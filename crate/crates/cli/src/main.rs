//! `toepwhite` command-line front end.
//!
//! Exit status: 0 on success, 1 on validation errors (bad flags, values or
//! combinations), 2 on runtime errors (I/O, malformed data, numerical failure).

mod commands;
mod config;
mod grid;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use toepwhite::detector::EstimatorMode;
use toepwhite::estimators::EstimatorKind;
use toepwhite::model::Hypothesis;

#[derive(Debug, Parser)]
#[command(name = "toepwhite", version, about = "Toeplitz noise whitening and GLRT detection experiments")]
#[command(args_override_self = true, propagate_version = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the noise autocovariance of a stored or simulated block.
    Estimate(EstimateArgs),
    /// Run the GLRT on a single block and print alpha, gamma and the decision.
    Detect(DetectArgs),
    /// Calibrate a threshold to a target false-alarm rate.
    Calibrate(CalibrateArgs),
    /// Tail probability of the spectral-norm error against N.
    Concentration(ConcentrationArgs),
    /// Detection error against N at a calibrated false-alarm rate.
    DetectionCurve(DetectionCurveArgs),
    /// Detection power against SNR at a calibrated false-alarm rate.
    PowerCurve(PowerCurveArgs),
    /// Check the exact estimator identities on seeded instances.
    Selftest(SelftestArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HypothesisArg {
    H0,
    H1,
}

impl From<HypothesisArg> for Hypothesis {
    fn from(h: HypothesisArg) -> Self {
        match h {
            HypothesisArg::H0 => Hypothesis::H0,
            HypothesisArg::H1 => Hypothesis::H1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NGrid(pub Vec<usize>);

#[derive(Debug, Clone, PartialEq)]
pub struct SnrGrid(pub Vec<f64>);

#[derive(Debug, Clone, PartialEq)]
pub struct Modes(pub Vec<EstimatorMode>);

fn parse_n_grid(s: &str) -> Result<NGrid, String> {
    grid::parse_n_grid(s).map(NGrid)
}

fn parse_snr_grid(s: &str) -> Result<SnrGrid, String> {
    grid::parse_snr_grid(s).map(SnrGrid)
}

fn parse_modes(s: &str) -> Result<Modes, String> {
    s.split(',')
        .map(|m| m.trim().parse::<EstimatorMode>().map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()
        .map(Modes)
}

/// Flags shared by every subcommand.
#[derive(Debug, Args)]
pub struct Common {
    /// Master seed; falls back to TOEPWHITE_SEED, then 1.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for Monte Carlo loops (results do not depend on it).
    #[arg(long)]
    pub workers: Option<usize>,
    /// File of `key = value` lines naming flags of this subcommand.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

/// Dimensions and noise/source model of a simulated scenario.
#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Number of sensors.
    #[arg(long = "N", default_value_t = 20)]
    pub n: usize,
    /// Number of time samples; defaults to N / c.
    #[arg(long = "T")]
    pub t: Option<usize>,
    /// Aspect ratio N / T, used when --T is absent.
    #[arg(long, default_value_t = 0.5)]
    pub c: f64,
    /// AR(1) noise coefficient.
    #[arg(long, default_value_t = 0.6)]
    pub a: f64,
    /// Source power (SNR, noise power is 1).
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Observation file; simulates a block when absent.
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// Hypothesis of the simulated block.
    #[arg(long, value_enum, default_value_t = HypothesisArg::H0)]
    pub hypothesis: HypothesisArg,
    /// biased or unbiased.
    #[arg(long, default_value = "biased")]
    pub estimator: EstimatorKind,
    /// Also write the observation block to this file.
    #[arg(long, value_name = "PATH")]
    pub emit_sample: Option<PathBuf>,
    /// Lag CSV destination; stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct DetectArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Observation file; simulates a block when absent.
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// Pure-noise block for the -pn estimators.
    #[arg(long, value_name = "PATH", requires = "input")]
    pub noise_input: Option<PathBuf>,
    /// Hypothesis of the simulated block.
    #[arg(long, value_enum, default_value_t = HypothesisArg::H1)]
    pub hypothesis: HypothesisArg,
    #[arg(long, default_value = "biased")]
    pub estimator: EstimatorMode,
    /// Fixed threshold.
    #[arg(long, conflicts_with = "far")]
    pub gamma: Option<f64>,
    /// Target false-alarm rate for a calibrated threshold (default 0.05).
    #[arg(long)]
    pub far: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub calib_trials: usize,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value = "biased")]
    pub estimator: EstimatorMode,
    #[arg(long, default_value_t = 0.05)]
    pub far: f64,
    #[arg(long, default_value_t = 10_000)]
    pub calib_trials: usize,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct ConcentrationArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 0.6)]
    pub a: f64,
    #[arg(long, default_value_t = 0.5)]
    pub c: f64,
    /// Deviation level of the tail event.
    #[arg(long, default_value_t = 2.0)]
    pub x: f64,
    #[arg(long, value_name = "LO:HI:STEP", default_value = "10:40:2", value_parser = parse_n_grid)]
    pub n_grid: NGrid,
    #[arg(long, default_value_t = 100_000)]
    pub trials: usize,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct DetectionCurveArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 0.6)]
    pub a: f64,
    #[arg(long, default_value_t = 0.5)]
    pub c: f64,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    #[arg(long, default_value_t = 0.05)]
    pub far: f64,
    #[arg(long, value_name = "LO:HI:STEP", default_value = "10:40:2", value_parser = parse_n_grid)]
    pub n_grid: NGrid,
    /// Comma-separated estimator modes.
    #[arg(long, default_value = "biased,unbiased,white,oracle", value_parser = parse_modes)]
    pub estimator: Modes,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 10_000)]
    pub calib_trials: usize,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct PowerCurveArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 0.6)]
    pub a: f64,
    #[arg(long, default_value_t = 0.5)]
    pub c: f64,
    #[arg(long = "N", default_value_t = 20)]
    pub n: usize,
    #[arg(long, default_value_t = 0.05)]
    pub far: f64,
    /// SNR sweep in dB.
    #[arg(
        long,
        value_name = "LO:HI:STEP",
        default_value = "-10:0:1",
        allow_hyphen_values = true,
        value_parser = parse_snr_grid
    )]
    pub snr_grid: SnrGrid,
    /// Comma-separated estimator modes.
    #[arg(
        long,
        default_value = "biased,unbiased,biased-pn,unbiased-pn,oracle",
        value_parser = parse_modes
    )]
    pub estimator: Modes,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 10_000)]
    pub calib_trials: usize,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct SelftestArgs {
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    /// Usage error already printed by the parser.
    Usage,
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) | CliError::Usage => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid arguments: {m}"),
            CliError::Usage => Ok(()),
            CliError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

impl From<toepwhite::Error> for CliError {
    fn from(e: toepwhite::Error) -> Self {
        use toepwhite::Error as E;
        match e {
            E::InvalidParameter(_)
            | E::DimensionMismatch(_)
            | E::MissingNoiseBlock(_)
            | E::InsufficientTrials { .. } => CliError::Validation(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("I/O error: {e}"))
    }
}

fn run(argv: Vec<OsString>) -> Result<(), CliError> {
    let argv = config::merge_config(argv).map_err(CliError::Validation)?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let usage = err.use_stderr();
            let _ = err.print();
            return if usage {
                Err(CliError::Usage)
            } else {
                Ok(())
            };
        }
    };
    commands::dispatch(cli.command)
}

fn main() -> ExitCode {
    match run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            if !matches!(err, CliError::Usage) {
                eprintln!("error: {err}");
            }
            ExitCode::from(err.exit_code())
        }
    }
}
