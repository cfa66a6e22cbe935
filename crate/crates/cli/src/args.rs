use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qcap::{DistributionSpec, NoiseKind, WaitingConvention};

/// Capacities, simulations and coding experiments for queue-channels.
///
/// Rates and times are given in units where the mean service time is one;
/// `--mu` rescales every reported rate by `mu` and every time by `1/mu`.
#[derive(Debug, Parser)]
#[command(name = "qcap", version, args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytic capacity of one queue-channel, as JSON.
    Capacity(CapacityArgs),
    /// Capacity curves over an arrival-rate grid, as CSV.
    Sweep(SweepArgs),
    /// Capacity-maximizing arrival rate, as JSON.
    Optimize(OptimizeArgs),
    /// Random linear codes over a simulated erasure queue-channel.
    CodeTest(CodeTestArgs),
    /// Simulated queue trace, as CSV.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Noise {
    Erasure,
    Depolarizing,
}

impl From<Noise> for NoiseKind {
    fn from(n: Noise) -> Self {
        match n {
            Noise::Erasure => NoiseKind::Erasure,
            Noise::Depolarizing => NoiseKind::Depolarizing,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Convention {
    Delay,
    Sojourn,
}

impl From<Convention> for WaitingConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::Delay => WaitingConvention::Delay,
            Convention::Sojourn => WaitingConvention::Sojourn,
        }
    }
}

/// Stationary waiting-time law for the M/M/1 quadrature routes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WaitLaw {
    Delay,
    Sojourn,
    /// Exponential with the mean delay.
    MeanMatched,
}

/// Exactly one way of giving `p(w)`.
#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct PArgs {
    /// `p(w) = 1 - exp(-kappa w)`; 0 means no decoherence.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Constant `p`.
    #[arg(long = "p-const")]
    pub p_const: Option<f64>,
    /// Piecewise-linear `p` as `w:p` knots, e.g. `0:0,10:1`.
    #[arg(long = "p-table")]
    pub p_table: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON file whose keys mirror the flag names; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Service rate used to rescale outputs.
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    /// Write here instead of standard output.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CapacityArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value = "erasure")]
    pub noise: Noise,
    /// Service-time law, e.g. `exp`, `det:1`, `erlang:2:2`, or JSON.
    #[arg(long, default_value = "exp")]
    pub service: DistributionSpec,
    #[arg(long)]
    pub lambda: f64,
    #[command(flatten)]
    pub p: PArgs,
    /// Qudit dimension.
    #[arg(long, default_value_t = 2)]
    pub d: u32,
    /// Whether the receiver knows arrival and departure times.
    #[arg(long = "timing-known", default_value_t = true, action = clap::ArgAction::Set)]
    pub timing_known: bool,
    /// Waiting time used by the M/M/1 quadrature routes.
    #[arg(long, value_enum, default_value = "delay")]
    pub convention: WaitLaw,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// `start:stop:count` or a comma list.
    #[arg(long, default_value = "0.01:0.99:99")]
    pub lambdas: String,
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.1,0.5,1,2")]
    pub kappas: Vec<f64>,
    #[arg(long, default_value = "exp")]
    pub service: DistributionSpec,
    /// Add Monte Carlo columns.
    #[arg(long)]
    pub mc: bool,
    /// Post-warmup symbols per Monte Carlo point.
    #[arg(long, default_value = "1e6")]
    pub symbols: String,
    #[arg(long)]
    pub warmup: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// JSON summary of each curve's peak.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value = "exp")]
    pub service: DistributionSpec,
    #[command(flatten)]
    pub p: PArgs,
    /// Golden-section stopping width.
    #[arg(long, default_value_t = 1e-7)]
    pub tolerance: f64,
}

#[derive(Debug, Args)]
pub struct CodeTestArgs {
    #[command(flatten)]
    pub common: Common,
    /// Block length.
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.9,1.1")]
    pub multipliers: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    #[arg(long, default_value = "exp")]
    pub service: DistributionSpec,
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    #[arg(long)]
    pub warmup: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Full JSON report.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Number of symbols, warmup included.
    #[arg(long)]
    pub n: String,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Inter-arrival law; defaults to exponential with rate `--lambda`.
    #[arg(long, conflicts_with = "lambda")]
    pub arrival: Option<DistributionSpec>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value = "exp")]
    pub service: DistributionSpec,
    #[arg(long)]
    pub warmup: Option<usize>,
    #[arg(long, value_enum, default_value = "delay")]
    pub convention: Convention,
    /// JSON summary of the stationary part of the trace.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}
