use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use scalelaw_core::{parse_count, GridSource, LawId};

#[derive(Debug, Parser)]
#[command(name = "scalelaw", version, about = "Dense and sparse LLM scaling laws")]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, env = "SCALELAW_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for candidate evaluation. Results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Write output here instead of standard output.
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a law at one point or over a CSV of scales.
    Eval(EvalArgs),
    /// Fit coefficients to experiment records.
    Fit(FitArgs),
    /// Compute-optimal parameter/token split for a budget.
    Plan(PlanArgs),
    /// Loss along constant-compute curves.
    Isoflop(IsoflopArgs),
    /// Per-point difference between two laws on a reference grid.
    Compare(CompareArgs),
    /// Published coefficient tables as JSON.
    Tables,
    /// Write a reference grid of model scales.
    Grid(GridArgs),
    /// Synthesize experiment records from a law.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Svg,
    Text,
}

#[derive(Debug, Clone, Args)]
pub struct LawArgs {
    #[arg(long, value_parser = parse_law)]
    pub law: LawId,
    /// Use the published coefficients (the default).
    #[arg(long, conflicts_with = "coeffs")]
    pub published: bool,
    /// Coefficient JSON document.
    #[arg(long)]
    pub coeffs: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub law: LawArgs,
    #[arg(short = 'n', value_parser = parse_num, required_unless_present = "scales")]
    pub n: Option<f64>,
    #[arg(short = 'd', value_parser = parse_num, required_unless_present = "scales")]
    pub d: Option<f64>,
    #[arg(short = 's', allow_negative_numbers = true, value_parser = parse_num, default_value = "0")]
    pub s: f64,
    /// CSV with n_active,d_tokens,sparsity columns.
    #[arg(long, conflicts_with_all = ["n", "d"])]
    pub scales: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Grid,
    Random,
    Smbo,
    Refine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Mse,
    Huber,
    LogMse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ResidualArg {
    Loss,
    LogLoss,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, value_parser = parse_law)]
    pub law: LawId,
    /// Experiment records CSV.
    #[arg(long)]
    pub records: PathBuf,
    /// Search-space JSON. Defaults to [v/10, 10v] around the published values.
    #[arg(long)]
    pub space: Option<PathBuf>,
    /// Starting coefficients for `refine`. Defaults to the published values.
    #[arg(long)]
    pub start: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Method::Smbo)]
    pub method: Method,
    /// Evaluation budget for random and smbo, iteration cap for refine.
    #[arg(long, default_value_t = 500)]
    pub budget: usize,
    #[arg(long, default_value_t = 6)]
    pub points_per_dim: usize,
    #[arg(long, default_value_t = 20)]
    pub init_samples: usize,
    /// Polish the search result with local refinement.
    #[arg(long)]
    pub refine: bool,
    #[arg(long, default_value_t = 1e-10)]
    pub tolerance: f64,
    #[arg(long, value_enum, default_value_t = MetricArg::Mse)]
    pub metric: MetricArg,
    #[arg(long, default_value_t = 1e-3)]
    pub huber_delta: f64,
    #[arg(long, value_enum, default_value_t = ResidualArg::LogLoss)]
    pub residuals: ResidualArg,
    /// Also write the evaluation trace as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub law: LawArgs,
    #[arg(short = 'C', long = "compute", value_parser = parse_num)]
    pub compute: f64,
    #[arg(short = 's', allow_negative_numbers = true, value_parser = parse_num, default_value = "0", conflicts_with = "sparsity_grid")]
    pub s: f64,
    /// Comma-separated sparsities; reports the best.
    #[arg(long, value_delimiter = ',', value_parser = parse_num)]
    pub sparsity_grid: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct IsoflopArgs {
    #[command(flatten)]
    pub law: LawArgs,
    #[arg(short = 'C', long = "compute", value_parser = parse_num)]
    pub compute: f64,
    /// Sparsity; repeat for several curves.
    #[arg(short = 's', allow_negative_numbers = true, value_parser = parse_num, default_values = ["0"])]
    pub s: Vec<f64>,
    #[arg(long, value_parser = parse_num)]
    pub n_min: Option<f64>,
    #[arg(long, value_parser = parse_num)]
    pub n_max: Option<f64>,
    #[arg(long, default_value_t = scalelaw_core::isoflop::DEFAULT_SAMPLES)]
    pub samples: usize,
    #[arg(long, default_value_t = scalelaw_core::isoflop::DEFAULT_SPIKE_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long, value_parser = parse_law)]
    pub law_a: LawId,
    #[arg(long, value_parser = parse_law)]
    pub law_b: LawId,
    #[arg(long)]
    pub coeffs_a: Option<PathBuf>,
    #[arg(long)]
    pub coeffs_b: Option<PathBuf>,
    #[arg(long, value_parser = parse_grid, default_value = "hoffmann9")]
    pub grid: GridSource,
    /// Evaluate every grid point at this sparsity instead of the grid's own.
    #[arg(short = 's', allow_negative_numbers = true, value_parser = parse_num)]
    pub s: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long, value_parser = parse_grid)]
    pub source: GridSource,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub law: LawArgs,
    #[arg(long, value_parser = parse_grid, conflicts_with = "scales")]
    pub grid: Option<GridSource>,
    /// CSV of scales to synthesize at.
    #[arg(long)]
    pub scales: Option<PathBuf>,
    /// Relative standard deviation of multiplicative noise.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
}

fn parse_law(s: &str) -> Result<LawId, String> {
    s.parse().map_err(|e: scalelaw_core::Error| e.to_string())
}

fn parse_grid(s: &str) -> Result<GridSource, String> {
    s.parse().map_err(|e: scalelaw_core::Error| e.to_string())
}

fn parse_num(s: &str) -> Result<f64, String> {
    parse_count(s)
}
