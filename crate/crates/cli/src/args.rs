//! Command-line grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "mllt",
    version,
    about = "Multinomial local limit expansions and their error harnesses"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact and approximate pmf values at lattice points.
    Pmf(PmfArgs),
    /// Expansion coefficients at a single lattice point.
    Expand(ExpandArgs),
    /// Exact and approximate probabilities of a region.
    Region(RegionArgs),
    /// Total variation distance between the smoothed multinomial and its Gaussian limit.
    Tv(CommonArgs),
    /// Closed-form central moments next to enumeration.
    Moments(CommonArgs),
    /// Bernstein-estimator limit constants and power-divergence statistics.
    Bernstein(BernsteinArgs),
    /// Worst-case bulk ratio errors per order with fitted log-log slopes.
    #[command(name = "error-table")]
    ErrorTable(CommonArgs),
}

/// Flags shared by every subcommand. Unset values fall back to the config file, then defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Comma-separated cell probabilities p_1,...,p_d.
    #[arg(long, value_name = "LIST", allow_hyphen_values = true)]
    pub p: Option<String>,

    /// Number of trials.
    #[arg(long = "N", value_name = "INT")]
    pub n: Option<u64>,

    /// Sweep over N: `start:end:xF` (geometric) or `start:end:+K` (arithmetic).
    #[arg(long = "N-sweep", value_name = "SPEC", conflicts_with = "n")]
    pub n_sweep: Option<String>,

    /// Bulk radius in (0, 1) [default: 0.5].
    #[arg(long)]
    pub eta: Option<f64>,

    /// Expansion order: 0, half or one [default: one].
    #[arg(long)]
    pub order: Option<String>,

    /// Gauss–Legendre nodes per axis [default: 12].
    #[arg(long)]
    pub nodes: Option<usize>,

    /// Output format: csv or json.
    #[arg(long)]
    pub format: Option<String>,

    /// Output path, `-` for stdout [default: -].
    #[arg(long)]
    pub out: Option<String>,

    /// Worker threads [default: MLLT_THREADS, else all cores].
    #[arg(long)]
    pub threads: Option<usize>,

    /// TOML file with defaults for the flags above.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PmfArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// A single lattice point k_1,...,k_d.
    #[arg(long, value_name = "LIST")]
    pub k: Option<String>,

    /// Every point of the simplex.
    #[arg(long, conflicts_with_all = ["k", "region"])]
    pub all: bool,

    /// Restrict to a region (see `region --help`).
    #[arg(long, conflicts_with = "k")]
    pub region: Option<String>,
}

#[derive(Debug, Args)]
pub struct ExpandArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// The lattice point k_1,...,k_d.
    #[arg(long, value_name = "LIST")]
    pub k: String,
}

#[derive(Debug, Args)]
pub struct RegionArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// `all`, `points:K;K;...`, `box:LO:HI` or `halfspace:A:B`, where K, LO,
    /// HI and A are comma lists. Bounds accept `inf`, `-inf` and multiples of
    /// N such as `0.5N`.
    #[arg(long, allow_hyphen_values = true)]
    pub region: String,
}

#[derive(Debug, Args)]
pub struct BernsteinArgs {
    #[command(subcommand)]
    pub action: BernsteinAction,
}

#[derive(Debug, Subcommand)]
pub enum BernsteinAction {
    /// Finite-N sums next to their limit constants.
    Constants(CommonArgs),
    /// Power-divergence statistics of observed counts.
    Divergence(DivergenceArgs),
}

#[derive(Debug, Args)]
pub struct DivergenceArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Counts of all d+1 categories.
    #[arg(long, value_name = "LIST")]
    pub counts: String,

    /// Comma-separated lambda values.
    #[arg(
        long,
        value_name = "LIST",
        default_value = "1,0,-0.5,-1",
        allow_hyphen_values = true
    )]
    pub lambda: String,
}
