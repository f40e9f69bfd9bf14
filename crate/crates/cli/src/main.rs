#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "crossdyn", version, about = "Langevin dynamics from cross-sectional data")]
struct Cli {
    /// Seed for every random draw; required by surrogate, simulate and validate.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON run configuration; flags take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a model to a cross-section and write model.json and curves.csv.
    Fit(FitArgs),
    /// Draw a Landau sample and write surrogate.csv.
    Surrogate(SurrogateArgs),
    /// Simulate a fitted model; writes trajectory.csv and transitions.json.
    Simulate(SimulateArgs),
    /// Score a model against follow-up data; writes report.json and histogram.csv.
    Validate(ValidateArgs),
    /// Tilt a landscape; writes intervention.json.
    Intervene(InterveneArgs),
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// CSV with a `value` column and an optional `id` column.
    pub input: PathBuf,
    /// Keep one grid (built for sigma = 1) for every sigma candidate.
    #[arg(long)]
    pub fixed_grid: bool,
    #[arg(long)]
    pub fineness: Option<u32>,
}

#[derive(Args, Debug)]
pub struct SurrogateArgs {
    #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    #[arg(long, default_value_t = 5000)]
    pub n: usize,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    pub model: PathBuf,
    /// Start state in model coordinates; the leftmost attractor by default.
    #[arg(long, allow_negative_numbers = true)]
    pub x0: Option<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    pub steps: usize,
    /// Integration step; the model's grid dt by default.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Initial steps left out of the transition count.
    #[arg(long, default_value_t = 0)]
    pub burn_in: usize,
    /// Evaluate the KDE force at every step instead of the spline table.
    #[arg(long)]
    pub exact_force: bool,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    /// Longitudinal CSV: `id,baseline,<followup>...`.
    pub cohort: PathBuf,
    /// Fitted model to score; required unless `--refit`.
    #[arg(long, conflicts_with = "refit")]
    pub model: Option<PathBuf>,
    /// Fit the pooled model on the cohort's baselines.
    #[arg(long)]
    pub refit: bool,
    /// Split into clusters, each refitted; only `bmi` is built in.
    #[arg(long, value_name = "SCHEME")]
    pub clusters: Option<String>,
    /// Restrict to baselines in `[lo, hi)`, refitted.
    #[arg(long, value_name = "LO:HI", allow_hyphen_values = true)]
    pub range: Option<String>,
    #[arg(long)]
    pub no_bootstrap: bool,
    #[arg(long, default_value_t = 1.0)]
    pub bin_width: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub bin_origin: f64,
}

#[derive(Args, Debug)]
pub struct InterveneArgs {
    /// Fitted model; the tilt acts in its standardised coordinates.
    #[arg(long, conflicts_with = "landau")]
    pub model: Option<PathBuf>,
    /// Landau coefficients `a,b`.
    #[arg(long, value_name = "A,B", allow_negative_numbers = true)]
    pub landau: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub c: f64,
    #[arg(long)]
    pub t: f64,
    /// Noise strength; the model's sigma by default.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Occupancy split point; the model's tipping point (or 0) by default.
    #[arg(long, allow_negative_numbers = true)]
    pub threshold: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("{}: {}", e.code(), msg);
            ExitCode::from(e.exit_code())
        }
    }
}
