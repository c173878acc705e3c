use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(name = "sandpile", version, about = "Sandpile groups and corank statistics of random directed graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample Laplacians (or iid matrices) and tabulate their coranks mod p.
    Simulate(SimulateArgs),
    /// Tabulate a limiting corank distribution.
    Pmf(PmfArgs),
    /// Smith normal form / sandpile invariants of a matrix file or graph JSON.
    Snf(SnfArgs),
    /// Span-hit frequencies of the final exposed rows, bucketed by codimension.
    RankEvolution(RankEvolutionArgs),
    /// Mean corank over a grid of (alpha, n).
    PhaseSweep(PhaseSweepArgs),
    /// Concentration and support statistics of vectors.
    Structure(StructureArgs),
}

/// Flags shared by every subcommand.
#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
pub struct Common {
    /// JSON file supplying any flag by its long name (underscores for dashes);
    /// command-line values win.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker count or "auto". Never changes results.
    #[arg(long)]
    pub threads: Option<String>,
    /// Include wall-clock time in reports.
    #[arg(long, action = ArgAction::SetTrue)]
    #[serde(default)]
    pub timing: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelArg {
    Bipartite,
    Er,
    Iid,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum StatisticArg {
    Corank,
    FullRankAt,
    SnfSample,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindArg {
    Theorem,
    Iid,
}

/// Model parameters shared by the sampling subcommands.
#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
pub struct ModelFlags {
    #[arg(long)]
    pub p: Option<u32>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub model_flags: ModelFlags,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    /// Extra columns of the iid model (`n x (n + u)`).
    #[arg(long)]
    pub u: Option<usize>,
    #[arg(long, value_enum)]
    pub statistic: Option<StatisticArg>,
    /// Rows examined by `--statistic full_rank_at`.
    #[arg(long)]
    pub row_count: Option<usize>,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
pub struct PmfArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long)]
    pub p: Option<u32>,
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    #[arg(long)]
    pub u: Option<u32>,
    /// Largest k tabulated.
    #[arg(long, allow_hyphen_values = true)]
    pub kmax: Option<i64>,
    /// Truncation tolerance of the infinite products.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
pub struct SnfArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Matrix text file ("p rows cols" header) or graph JSON.
    pub input: Option<PathBuf>,
    /// Primes whose p-rank is reported.
    #[arg(long, value_delimiter = ',')]
    pub primes: Option<Vec<u32>>,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
pub struct RankEvolutionArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub model_flags: ModelFlags,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    #[arg(long)]
    pub u: Option<usize>,
    /// Fraction of n whose final rows are recorded.
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
pub struct PhaseSweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,
    #[arg(long)]
    pub p: Option<u32>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
pub struct StructureArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// rho_L of the single-row vector in this matrix file.
    #[arg(long)]
    pub rho_l: Option<PathBuf>,
    /// Minimum nonconstant support of the vector in this file.
    #[arg(long)]
    pub support: Option<PathBuf>,
    /// Exact P(x_1 + ... + x_n = 0 mod p).
    #[arg(long, action = ArgAction::SetTrue)]
    #[serde(default)]
    pub zero_sum: bool,
    /// Number of iid coordinates of the row law.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub p: Option<u32>,
    /// Position of the -sum coordinate; defaults to n.
    #[arg(long)]
    pub neg_sum_index: Option<usize>,
}
