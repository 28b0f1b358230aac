use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "lwf", version, about = "Simulate and verify Lambda-Wright-Fisher processes and their duals")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every command. Each one overrides the matching `[run]` field of the config.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML model and run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Replicas (paths, pairs or renewal cycles, depending on the command).
    #[arg(long, global = true)]
    pub reps: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "lwf-out")]
    pub out: PathBuf,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub horizon: Option<f64>,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Boundary constants, regime and integrability table.
    Classify(ClassifyArgs),
    /// Forward paths X.
    SimulateX(SimulateArgs),
    /// Dual paths Y, optionally with neutral jumps capped.
    SimulateY(SimulateYArgs),
    /// Coupled dual pair on one background, up to merging.
    CoupledPair(CoupledPairArgs),
    /// Renewal times and states of Y.
    RenewalScan(RenewalScanArgs),
    /// Both sides of the Siegmund duality on a grid.
    CheckDuality(DualityArgs),
    /// Fixation probability h(x) by renewal and/or direct simulation.
    Fixation(FixationArgs),
    /// Stationary distribution function of Y.
    Stationary(StationaryArgs),
    /// Decay of undecided or not-merged probabilities with log-linear fits.
    Decay(DecayArgs),
    /// Pathwise check of the Levy sandwich near a boundary.
    SandwichTest(SandwichArgs),
    /// Laplace exponent of a bounding Levy process on a grid.
    LevyExponent(LevyExponentArgs),
    /// First-passage tail of a bounding Levy process.
    PassageTail(PassageTailArgs),
    /// Re-run a manifest and compare output digests.
    #[serde(skip)]
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ClassifyArgs {
    /// Tail exponent; defaults to `numerics.gamma`.
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 0.5)]
    pub x0: f64,
    /// Observation times; default is a grid of step `dt` up to the horizon.
    #[arg(long, value_delimiter = ',')]
    pub times: Vec<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub dt: f64,
    /// Also write the background events of each replica.
    #[arg(long)]
    pub record_events: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateYArgs {
    #[command(flatten)]
    pub sim: SimulateArgs,
    /// Drop neutral events with `r > cap`.
    #[arg(long)]
    pub cap: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CoupledPairArgs {
    #[arg(long, default_value_t = 0.25)]
    pub y_hat: f64,
    #[arg(long, default_value_t = 0.75)]
    pub y_check: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct RenewalScanArgs {
    #[arg(long, default_value_t = 0.5)]
    pub y0: f64,
    /// Window centre.
    #[arg(long, default_value_t = 0.5)]
    pub center: f64,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DualityArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.5, 0.75])]
    pub xs: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.5, 0.75])]
    pub ys: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 2.0, 5.0])]
    pub ts: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FixationMethod {
    Renewal,
    Direct,
    Both,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FixationArgs {
    #[arg(long, value_enum, default_value_t = FixationMethod::Both)]
    pub method: FixationMethod,
    #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.5, 0.75])]
    pub xs: Vec<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, default_value_t = 60.0)]
    pub t_final: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub eps_fix: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StationaryKind {
    Renewal,
    Ergodic,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct StationaryArgs {
    #[arg(long, value_enum, default_value_t = StationaryKind::Renewal)]
    pub method: StationaryKind,
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.25, 0.5, 0.75, 0.9])]
    pub xs: Vec<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub y0: f64,
    #[arg(long, default_value_t = 20.0)]
    pub burn_in: f64,
    #[arg(long, default_value_t = 100.0)]
    pub window: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayKind {
    /// X in the band `[e^{-rho t}, 1 - e^{-rho t}]`.
    Theta2,
    /// X farther than the threshold from its limiting boundary.
    Theta01,
    /// Y in the band `[e^{-rho t}, 1 - e^{-rho t}]`.
    Theta3,
    /// Coupled dual pair not yet merged.
    Merge,
    /// X above `--level`.
    Fraction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Exponential,
    Polynomial,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DecayArgs {
    #[arg(long, value_enum, default_value_t = DecayKind::Theta2)]
    pub mode: DecayKind,
    #[arg(long, value_enum, default_value_t = Shape::Exponential)]
    pub shape: Shape,
    #[arg(long, default_value_t = 0.5)]
    pub x0: f64,
    #[arg(long, default_value_t = 0.2)]
    pub rho: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0])]
    pub ts: Vec<f64>,
    #[arg(long, default_value_t = 0.25)]
    pub y_hat: f64,
    #[arg(long, default_value_t = 0.75)]
    pub y_check: f64,
    #[arg(long, default_value_t = 0.1)]
    pub level: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SandwichArgs {
    #[arg(long, default_value_t = 0.2)]
    pub y0: f64,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Bound `log(1/(1 - Y))` near 1 instead.
    #[arg(long)]
    pub mirrored: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct LevyExponentArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.5, 1.0])]
    pub lambda_grid: Vec<f64>,
    #[arg(long, value_enum, default_value_t = BoundKind::Lower)]
    pub bound: BoundKind,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub mirrored: bool,
    /// Also estimate `E[exp(lambda L_1)]` from `--reps` paths.
    #[arg(long)]
    pub mc: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PassageTailArgs {
    #[arg(long, value_enum, default_value_t = BoundKind::Lower)]
    pub bound: BoundKind,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub mirrored: bool,
    /// Slope subtracted from the process; must be below its mean.
    #[arg(long, allow_hyphen_values = true)]
    pub m: f64,
    /// Passage level `-x`.
    #[arg(long, default_value_t = 1.0)]
    pub x: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0, 5.0, 10.0, 20.0])]
    pub ts: Vec<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run.
    pub manifest: PathBuf,
}
