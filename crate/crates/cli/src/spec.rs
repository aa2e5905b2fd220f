//! Command-line flags and their JSON twin, the run spec. Every subcommand's
//! argument struct doubles as its spec payload, so `--emit-spec` output fed
//! back through `--spec` reproduces the run.

use std::path::PathBuf;

use bcov_core::parents::ParentSpec;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Exact,
    Mc,
    Both,
}

impl Method {
    pub fn exact(self) -> bool {
        self != Method::Mc
    }

    pub fn mc(self) -> bool {
        self != Method::Exact
    }
}

fn parse_parent(text: &str) -> Result<ParentSpec, String> {
    serde_json::from_str(text).map_err(|e| format!("bad parent JSON: {e}"))
}

#[derive(Debug, Parser)]
#[command(name = "bcov", version, about = "Connectivity statistics for robots on a one-dimensional boundary")]
pub struct Cli {
    /// Read the run from a JSON spec file; flags given here override it.
    #[arg(long, global = true)]
    pub spec: Option<PathBuf>,
    /// Print the run spec as JSON instead of running it.
    #[arg(long, global = true)]
    pub emit_spec: bool,
    /// Seed for randomized commands (required by them).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub stream: Option<u64>,
    /// Monte Carlo trials.
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for estimators; results do not depend on it.
    #[arg(long, global = true, env = "BCOV_WORKERS", default_value_t = 1)]
    pub workers: usize,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub command: Command,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub stream: u64,
    #[serde(default)]
    pub trials: Option<u64>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Probability that the robots form a connected network.
    Pcon(PconArgs),
    /// Halfspace-box volume or a polynomial integral over a simplex.
    Volume(VolumeArgs),
    /// Expected component count, covered length and edge count.
    Expect(ExpectArgs),
    /// Draw robot configurations.
    Sample(SampleArgs),
    /// Hit-and-run samples of connected slack vectors.
    Mcmc(McmcArgs),
    /// Rényi parking runs and n-car parking samples.
    Park(ParkArgs),
    /// Attach/detach populations, stopping times and size estimates.
    Dynamics(DynamicsArgs),
    /// Evaluate a parent distribution and its order statistics.
    Parents(ParentsArgs),
    /// Graph statistics of one given configuration.
    Stats(StatsArgs),
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PconArgs {
    /// Uniform parent on [0, s] (the default when no parent is given).
    #[arg(long, conflicts_with = "parent")]
    pub uniform: bool,
    /// Parent as JSON, e.g. '{"type":"beta","a":2,"b":1,"s":"1"}'.
    #[arg(long, value_parser = parse_parent)]
    pub parent: Option<ParentSpec>,
    #[arg(long)]
    pub s: Option<String>,
    /// Homogeneous connectivity threshold.
    #[arg(long)]
    pub d: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    /// One threshold per slack (n+1 values, comma separated).
    #[arg(long, conflicts_with_all = ["d", "ranges"])]
    pub thresholds: Option<String>,
    /// One communication range per robot (comma separated).
    #[arg(long, conflicts_with_all = ["d", "n"])]
    pub ranges: Option<String>,
    /// Robot diameter for collision-free placement.
    #[arg(long)]
    pub r: Option<String>,
    #[arg(long, value_enum, default_value_t)]
    pub method: Method,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VolumeArgs {
    /// Halfspace normal, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<String>,
    /// Halfspace offset.
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<String>,
    /// Box upper corner (default: unit cube).
    #[arg(long)]
    pub cuboid: Option<String>,
    /// Simplex vertices, e.g. "0,0;1,0;0,1".
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["a", "b", "cuboid"])]
    pub simplex: Option<String>,
    /// Polynomial terms "exponents:coefficient" separated by ';', e.g.
    /// "1,1:1/2;0,0:3" (default: 1).
    #[arg(long, allow_hyphen_values = true, requires = "simplex")]
    pub poly: Option<String>,
    #[arg(long, value_enum, default_value_t)]
    pub method: Method,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpectArgs {
    #[arg(long, conflicts_with = "parent")]
    pub uniform: bool,
    #[arg(long, value_parser = parse_parent)]
    pub parent: Option<ParentSpec>,
    #[arg(long)]
    pub s: Option<String>,
    #[arg(long)]
    pub d: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_enum, default_value_t)]
    pub method: Method,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleArgs {
    #[arg(long, conflicts_with = "parent")]
    pub uniform: bool,
    #[arg(long, value_parser = parse_parent)]
    pub parent: Option<ParentSpec>,
    #[arg(long)]
    pub s: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Robot diameter; samples are then collision-free.
    #[arg(long)]
    pub r: Option<String>,
    /// Number of configurations.
    #[arg(long)]
    pub count: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McmcArgs {
    #[arg(long)]
    pub s: Option<String>,
    #[arg(long)]
    pub d: Option<String>,
    #[arg(long, conflicts_with = "d")]
    pub thresholds: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<u64>,
    #[arg(long)]
    pub thin: Option<u64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParkArgs {
    #[arg(long)]
    pub s: Option<String>,
    /// Car length (default 1).
    #[arg(long)]
    pub r: Option<String>,
    /// Draw one uniform collision-free placement of n cars instead.
    #[arg(long)]
    pub n: Option<usize>,
    /// Include car positions of a single run.
    #[arg(long)]
    pub positions: bool,
    /// Run a single parking in exact rational arithmetic.
    #[arg(long)]
    pub exact: bool,
    /// With --trials, also return a left-endpoint histogram.
    #[arg(long)]
    pub bins: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsArgs {
    /// Switching rates "r_ad,r_da".
    #[arg(long)]
    pub rates: Option<String>,
    /// Total population.
    #[arg(long)]
    pub total: Option<String>,
    /// Initial attached count (default 0).
    #[arg(long)]
    pub attached: Option<String>,
    /// Time at which to report the populations.
    #[arg(long)]
    pub t: Option<f64>,
    /// Ratio d / s for the robot-count estimate.
    #[arg(long)]
    pub d_over_s: Option<f64>,
    /// Boundary length for the stopping-time report.
    #[arg(long)]
    pub s: Option<String>,
    #[arg(long)]
    pub d: Option<String>,
    /// Largest robot count in the stopping-time report.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Also simulate sequential attachment (needs --seed).
    #[arg(long)]
    pub simulate: bool,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParentsArgs {
    #[arg(long, value_parser = parse_parent)]
    pub parent: Option<ParentSpec>,
    /// Points at which to evaluate pdf and cdf, comma separated.
    #[arg(long)]
    pub at: Option<String>,
    /// Levels in [0, 1) for the inverse cdf, comma separated.
    #[arg(long)]
    pub quantiles: Option<String>,
    /// Sample size for order-statistic cdfs at the --at points.
    #[arg(long)]
    pub n: Option<usize>,
    /// Order statistic index (1-based).
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsArgs {
    #[arg(long)]
    pub s: Option<String>,
    #[arg(long)]
    pub d: Option<String>,
    /// Robot positions, comma separated.
    #[arg(long)]
    pub positions: Option<String>,
}
