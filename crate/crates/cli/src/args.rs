//! Command-line flags.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "rspim", version, about = "Split possibilistic inference after variable selection")]
pub struct Cli {
    /// Worker threads; outputs do not depend on this.
    #[arg(long, global = true, env = "RSPIM_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo study: writes report.json, replications.csv and manifest.json.
    Simulate(SimulateArgs),
    /// Selection and intervals on CSV data: writes intervals.json.
    Analyze(AnalyzeArgs),
    /// Plausibility contour of one coordinate on a grid: writes contour.csv.
    Contour(ContourArgs),
    /// Shrink factor matching a target conditional coverage: writes calibration.json.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseArg {
    Gaussian,
    HeteroskedasticX1,
    StudentT,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SelectorArg {
    LassoStability,
    Lasso,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MultiplierArg {
    Rademacher,
    Mammen,
}

#[derive(Debug, Clone, Args)]
pub struct SelectorArgs {
    #[arg(long, value_enum)]
    pub selector: Option<SelectorArg>,
    /// Lasso penalty for the selector (default: noise-level rule).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Support size of the random selector.
    #[arg(long)]
    pub k: Option<usize>,
    /// Largest support refit on the inference half.
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Fraction of rows used for inference.
    #[arg(long)]
    pub frac_inf: Option<f64>,
    /// Selection rows reused for inference (results become approximate).
    #[arg(long)]
    pub carve: Option<usize>,
    /// Wild-bootstrap draws.
    #[arg(long)]
    pub n_boot: Option<usize>,
    #[arg(long, value_enum)]
    pub multiplier: Option<MultiplierArg>,
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    /// Study preset.
    #[arg(long, value_parser = ["A", "B", "C", "D", "E", "a", "b", "c", "d", "e"])]
    pub module: Option<String>,
    /// Experiment configuration in JSON (applied before flag overrides).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub reps: Option<usize>,
    /// rspim_single, rspim_union, rspim_wildboot, orth_crossfit or debiased_lasso.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long)]
    pub rho: Option<f64>,
    /// Euclidean norm of the coefficient vector.
    #[arg(long)]
    pub beta_norm: Option<f64>,
    #[arg(long, value_enum)]
    pub noise: Option<NoiseArg>,
    /// Degrees of freedom for Student-t noise.
    #[arg(long, default_value_t = 4.0)]
    pub df: f64,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Shrink factor applied to every pivot.
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub splits: Option<usize>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[command(flatten)]
    pub selection: SelectorArgs,
    /// Master seed; every random stream derives from it.
    #[arg(long)]
    pub seed: u64,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// `lo:hi:step`.
    #[arg(long, default_value = "0.5:2.5:0.05")]
    pub c_grid: String,
    /// Target conditional coverage (default `1 - alpha`).
    #[arg(long)]
    pub target: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AnalyzeMethod {
    Single,
    Union,
    Wildboot,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Predictor CSV, one column per feature, optional header row.
    #[arg(long)]
    pub x: PathBuf,
    /// Response CSV with a single column.
    #[arg(long)]
    pub y: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    /// Number of splits (default 1, or 10 for `union`).
    #[arg(long)]
    pub splits: Option<usize>,
    #[arg(long, value_enum, default_value_t = AnalyzeMethod::Union)]
    pub method: AnalyzeMethod,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[command(flatten)]
    pub selection: SelectorArgs,
    /// Master seed; every random stream derives from it.
    #[arg(long)]
    pub seed: u64,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ContourArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Zero-based column index.
    #[arg(long)]
    pub coord: usize,
    /// `lo:hi:npts`.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: String,
}
