use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rvrp_core::operators::MoveStyle;
use rvrp_core::solvers::Algorithm;

#[derive(Debug, Parser)]
#[command(name = "rvrp", version, about = "Clustered time-dependent VRP with pickup and delivery: generate, solve, compare")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the 15-instance benchmark suite and its manifest.
    Generate(GenerateArgs),
    /// Check an instance, and optionally a solution against it.
    Validate(ValidateArgs),
    /// Run one solver on one instance.
    Solve(SolveArgs),
    /// Run every algorithm repeatedly over a generated suite and compare.
    Experiment(ExperimentArgs),
    /// Friedman and Holm tests from a mean-cost table or from average ranks.
    Stats(StatsArgs),
    /// Export an instance and a solution as a GeoJSON FeatureCollection.
    ExportGeojson(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmArg {
    Dfa,
    Ea,
    Esa,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Dfa => Algorithm::Dfa,
            AlgorithmArg::Ea => Algorithm::Ea,
            AlgorithmArg::Esa => Algorithm::Esa,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MoveStyleArg {
    Pool,
    Chain,
}

impl From<MoveStyleArg> for MoveStyle {
    fn from(s: MoveStyleArg) -> Self {
        match s {
            MoveStyleArg::Pool => MoveStyle::Pool,
            MoveStyleArg::Chain => MoveStyle::Chain,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Base seed; drawn at random and printed when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "bench")]
    pub out: PathBuf,
    /// Only write the named instances (repeatable).
    #[arg(long)]
    pub only: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub instance: PathBuf,
    /// Solution file written by `solve`.
    #[arg(long)]
    pub solution: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Solver parameters shared by `solve` and `experiment`.
#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long)]
    pub population: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub mutation_probability: Option<f64>,
    #[arg(long)]
    pub elitist_fraction: Option<f64>,
    #[arg(long)]
    pub cooling_constant: Option<f64>,
    #[arg(long)]
    pub acceptance_p: Option<f64>,
    #[arg(long)]
    pub enable_cluster_relocation: bool,
    #[arg(long, value_enum)]
    pub move_style: Option<MoveStyleArg>,
    /// Evaluations without improvement before stopping; defaults to n + n(n+1)/2.
    #[arg(long)]
    pub stale_budget: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value = "dfa")]
    pub algorithm: AlgorithmArg,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Solution file; defaults to `<instance>.<algorithm>.<seed>.json` in the working directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Include the best-cost history in the solution file.
    #[arg(long)]
    pub history: bool,
    /// Keep at most this many history points.
    #[arg(long)]
    pub history_points: Option<usize>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Directory holding `suite-manifest.json`.
    pub suite: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub runs: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
    /// Algorithms to compare (comma-separated).
    #[arg(long = "algorithms", alias = "algorithm", value_enum, value_delimiter = ',', default_values = ["dfa", "ea", "esa"])]
    pub algorithms: Vec<AlgorithmArg>,
    /// Worker threads; defaults to the number of logical cores.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Only use the named instances (repeatable).
    #[arg(long)]
    pub only: Vec<String>,
    /// Run the DFA population-size study instead of the algorithm comparison.
    #[arg(long)]
    pub sweep: bool,
    #[arg(long, value_delimiter = ',', default_values = ["25", "50", "100", "150"])]
    pub sizes: Vec<usize>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// CSV with a header `instance,<algorithm>,...` and one row of mean costs per instance.
    #[arg(long, conflicts_with = "ranks")]
    pub means: Option<PathBuf>,
    /// Average ranks, comma-separated.
    #[arg(long, value_delimiter = ',', requires = "instances")]
    pub ranks: Vec<f64>,
    /// Number of instances behind `--ranks`.
    #[arg(long)]
    pub instances: Option<usize>,
    /// Algorithm names for `--ranks`, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub names: Vec<String>,
    /// Control algorithm for Holm; defaults to DFA when present, else the best rank.
    #[arg(long)]
    pub control: Option<String>,
    /// Reference average ranks to compare recomputed ranks against.
    #[arg(long, value_delimiter = ',')]
    pub reference_ranks: Vec<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Also write the result as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    pub instance: PathBuf,
    pub solution: PathBuf,
    #[arg(long, default_value = "solution.geojson")]
    pub out: PathBuf,
}
