//! Argument definitions for the `wow` binary.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "wow",
    version,
    about = "WAIC-gated borrowing of external control data: decision regions, \
             gating verdicts, posterior summaries, and trial simulations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print the prospective borrowing region for a design
    Region(RegionArgs),
    /// Evaluate the borrow/no-borrow gate on observed data
    Gate(GateArgs),
    /// Summarize the (ungated) posterior under a weight policy
    Posterior(GateArgs),
    /// Run calibrate-then-power simulations from a scenario config file
    Simulate(SimulateArgs),
    /// Run only the threshold-calibration stage from a scenario config file
    Calibrate(CalibrateArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum EndpointArg {
    /// Binomial count endpoint with a Beta prior
    Binary,
    /// Normal endpoint with known sigma
    Continuous,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormatArg {
    /// Comma-separated values, header row, 17-significant-digit floats
    Csv,
    /// JSON array of records
    Json,
    /// Aligned human-readable table
    PrettyTable,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolicyArg {
    /// Fixed mixture weight w (requires --w)
    Fixed,
    /// Alias for fixed (--policy mix --w 0.5 is the Mix50 benchmark)
    Mix,
    /// Self-adapting mixture weight from the likelihood-ratio test with
    /// clinically significant difference delta (--delta)
    Sam,
    /// Empirical-Bayes weight from the prior predictive p-value (--gamma,
    /// --tail, --grid-step)
    EbRmap,
    /// Alias for eb-rmap
    Eb,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailArg {
    /// P(X <= x) under the prior predictive
    Lower,
    /// P(X >= x) under the prior predictive
    Upper,
    /// min(1, 2 min(lower, upper))
    TwoSided,
}

#[derive(Args, Debug)]
pub struct RegionArgs {
    /// Endpoint family
    #[arg(long, value_enum)]
    pub endpoint: EndpointArg,
    /// Current-trial control arm size (patients)
    #[arg(long)]
    pub n: u64,
    /// Historical arm size (patients)
    #[arg(long)]
    pub nh: u64,
    /// Historical responder count (binary endpoint only)
    #[arg(long)]
    pub xh: Option<u64>,
    /// Historical mean response (continuous endpoint only)
    #[arg(long)]
    pub ybarh: Option<f64>,
    /// Historical per-observation variance estimate s^2 (continuous only)
    #[arg(long)]
    pub s2h: Option<f64>,
    /// Known sampling standard deviation sigma (continuous only)
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Vague-component prior mean (continuous; default 0)
    #[arg(long, default_value_t = 0.0)]
    pub vague_mean: f64,
    /// Vague-component prior standard deviation (continuous; default 10)
    #[arg(long, default_value_t = 10.0)]
    pub vague_sd: f64,
    /// Beta prior shape a (binary; default 1, the uniform prior)
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    /// Beta prior shape b (binary; default 1, the uniform prior)
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    /// Also emit the per-point table (x or ybar, waic0, waic1, k, borrow)
    #[arg(long)]
    pub full: bool,
    /// Sweep the historical arm size and emit one region row per value,
    /// holding the historical rate (or mean) fixed: LO,HI,STEP
    #[arg(long, value_name = "LO,HI,STEP")]
    pub sweep_nh: Option<String>,
    /// Output format
    #[arg(long, value_enum, default_value_t = FormatArg::PrettyTable)]
    pub format: FormatArg,
    /// Write output to this file instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GateArgs {
    /// Endpoint family
    #[arg(long, value_enum)]
    pub endpoint: EndpointArg,
    /// Observed responder count in the current control arm (binary only)
    #[arg(long)]
    pub x: Option<u64>,
    /// Current-trial control arm size (patients)
    #[arg(long)]
    pub n: u64,
    /// Observed mean response in the current control arm (continuous only)
    #[arg(long)]
    pub ybar: Option<f64>,
    /// Known sampling standard deviation sigma (continuous only)
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Historical responder count (binary only)
    #[arg(long)]
    pub xh: Option<u64>,
    /// Historical mean response (continuous only)
    #[arg(long)]
    pub ybarh: Option<f64>,
    /// Historical per-observation variance estimate s^2 (continuous only)
    #[arg(long)]
    pub s2h: Option<f64>,
    /// Historical arm size (patients)
    #[arg(long)]
    pub nh: u64,
    /// Vague-component prior mean (continuous; default 0)
    #[arg(long, default_value_t = 0.0)]
    pub vague_mean: f64,
    /// Vague-component prior standard deviation (continuous; default 10)
    #[arg(long, default_value_t = 10.0)]
    pub vague_sd: f64,
    /// Beta prior shape a (binary; default 1, the uniform prior)
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    /// Beta prior shape b (binary; default 1, the uniform prior)
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    /// Weight policy
    #[arg(long, value_enum)]
    pub policy: PolicyArg,
    /// Mixture weight w in [0,1] for the fixed/mix policy (default 0.5)
    #[arg(long, default_value_t = 0.5)]
    pub w: f64,
    /// Clinically significant difference delta > 0 for the sam policy
    /// (default 0.15)
    #[arg(long, default_value_t = 0.15)]
    pub delta: f64,
    /// Borrowing aggressiveness gamma in [0,1) for the eb-rmap policy
    /// (default 0.8; 0 uses the raw prior predictive p-value)
    #[arg(long, default_value_t = 0.8)]
    pub gamma: f64,
    /// Prior-predictive tail for the eb-rmap policy (default two-sided)
    #[arg(long, value_enum, default_value_t = TailArg::TwoSided)]
    pub tail: TailArg,
    /// Weight grid resolution for the eb-rmap policy (default 0.01)
    #[arg(long, default_value_t = 0.01)]
    pub grid_step: f64,
    /// Output format
    #[arg(long, value_enum, default_value_t = FormatArg::PrettyTable)]
    pub format: FormatArg,
    /// Write output to this file instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// JSON scenario configuration file (top-level keys: defaults,
    /// scenarios[])
    #[arg(long)]
    pub config: PathBuf,
    /// Output file for the result rows; the run manifest is written to
    /// <out>.manifest.json alongside it
    #[arg(long)]
    pub out: PathBuf,
    /// Base seed for derived per-cell streams (overrides the WOW_SEED
    /// environment variable; default 0)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the replicate count of every scenario
    #[arg(long)]
    pub reps: Option<u64>,
    /// Worker threads for the replicate pool (default: all cores)
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output format for the rows (csv or json)
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
}

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    /// JSON scenario configuration file (top-level keys: defaults,
    /// scenarios[])
    #[arg(long)]
    pub config: PathBuf,
    /// Base seed for derived per-cell streams (overrides the WOW_SEED
    /// environment variable; default 0)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the calibration replicate count of every scenario
    #[arg(long)]
    pub reps: Option<u64>,
    /// Worker threads for the replicate pool (default: all cores)
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output format for the rows
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
    /// Write output to this file instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}
