use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(
    name = "wfsep",
    version,
    about = "Separating times, estimation and Monte Carlo checks for Wright-Fisher diffusions",
    long_about = "Separating times, estimation and Monte Carlo checks for Wright-Fisher diffusions.\n\n\
Parameters are written alpha,beta,s. Selection shapes: genic, diploid:H, poly:C0,C1,...\n\
Every option can also come from a flat `key = value` file given with --config; flags on the\n\
command line override the file. Errors are printed as one line on stderr:\n\
  error code=<tag> exit=<n> message=\"...\""
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Symbolic separating time of two parameter vectors
    Classify(ClassifyArgs),
    /// Simulate paths and write them as CSV
    Simulate(SimulateArgs),
    /// Estimate parameters from a path CSV
    Estimate(EstimateArgs),
    /// Estimator error on nested horizons of the same paths
    VerifyConsistency(ConsistencyArgs),
    /// Whitened estimator errors against the normal limit
    VerifyClt(CltArgs),
    /// Integrability of X^-kappa for starts at 0, or separation of two laws started at 0
    VerifyZeroOne(ZeroOneArgs),
    /// Projected K-allele system against the scalar diffusion
    VerifyProjection(ProjectionArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct RunArgs {
    /// Flat key = value file; command-line flags override it
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long, env = "WFSEP_OUT_DIR", default_value = "wfsep-out")]
    #[serde(skip)]
    pub out: PathBuf,
    /// Master seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (results do not depend on it)
    #[arg(long)]
    #[serde(skip)]
    pub threads: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
pub struct SimArgs {
    /// Internal time step
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    /// Width of the boundary layers with exact Bessel steps
    #[arg(long, default_value_t = 5e-3)]
    pub hit_epsilon: f64,
    /// Bessel substeps per time step
    #[arg(long, default_value_t = 16)]
    pub substep_factor: u32,
    /// Turn off the log-distance descent before a first hit
    #[arg(long)]
    pub no_deep_descent: bool,
}

#[derive(Args, Debug, Serialize)]
#[command(args_override_self = true)]
pub struct ClassifyArgs {
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Reference parameters alpha,beta,s
    #[arg(long, allow_hyphen_values = true)]
    pub p0: String,
    /// Alternative parameters alpha,beta,s
    #[arg(long, allow_hyphen_values = true)]
    pub p1: String,
    /// Selection shape, used by --half-good
    #[arg(long, default_value = "genic")]
    pub eta: String,
    /// Also print the construction of the separating time
    #[arg(long)]
    pub diagnostics: bool,
    /// Also run the numerical half-good check at both endpoints
    #[arg(long)]
    pub half_good: bool,
}

#[derive(Args, Debug, Serialize)]
#[command(
    args_override_self = true,
    after_help = "Output files:\n  path_NNNN.csv   t,x  one row per recorded time, 17 significant digits\n  path_NNNN.json  hit times, first returns, parameters, seed and stream\n  manifest.json   resolved settings"
)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Parameters alpha,beta,s
    #[arg(long, allow_hyphen_values = true)]
    pub p: String,
    #[arg(long, default_value = "genic")]
    pub eta: String,
    /// Initial frequency
    #[arg(long, default_value_t = 0.5)]
    pub x0: f64,
    /// Horizon
    #[arg(long, default_value_t = 10.0)]
    pub t_end: f64,
    /// Number of paths; path i uses stream i
    #[arg(long, default_value_t = 1)]
    pub paths: usize,
    /// Record on a uniform grid of this spacing instead of every step
    #[arg(long)]
    pub grid_dt: Option<f64>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorChoice {
    Full,
    Joint,
    MarginalAlpha,
    MarginalBeta,
    MarginalS,
    Corrected,
}

#[derive(Args, Debug, Serialize)]
#[command(
    args_override_self = true,
    after_help = "Input: a CSV with header t,x (and optionally the JSON side file written by simulate).\n\
Output files:\n  estimate.csv   coordinate,estimate,crystallized,used_horizon,clamped\n  manifest.json  resolved settings"
)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Path CSV
    #[arg(long)]
    pub path: PathBuf,
    #[arg(long, default_value = "genic")]
    pub eta: String,
    #[arg(long, value_enum, default_value_t = EstimatorChoice::Full)]
    pub estimator: EstimatorChoice,
    /// Values of the coordinates held fixed by the marginal estimators
    #[arg(long, allow_hyphen_values = true, default_value = "0,0,0")]
    pub known: String,
    /// Selection coefficient for the joint and corrected estimators
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub s_known: f64,
    /// Dominating parameter of the full estimator
    #[arg(long, allow_hyphen_values = true, default_value = "0,0,0")]
    pub theta0: String,
    /// Distance to an endpoint treated as a visit
    #[arg(long, default_value_t = 1e-12)]
    pub clip: f64,
    /// Project alpha and beta onto [0, inf)
    #[arg(long)]
    pub clamp: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConsistencyEstimator {
    Joint,
    Full,
}

#[derive(Args, Debug, Serialize)]
#[command(
    args_override_self = true,
    after_help = "Output files:\n  consistency_per_seed.csv  seed,horizon,err_alpha,err_beta,err_s\n  consistency_summary.csv   horizon,median_abs_alpha,median_abs_beta,median_abs_s\n  manifest.json"
)]
pub struct ConsistencyArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long, allow_hyphen_values = true, default_value = "2,2,0")]
    pub p: String,
    #[arg(long, default_value = "genic")]
    pub eta: String,
    #[arg(long, default_value_t = 0.5)]
    pub x0: f64,
    /// Increasing horizons
    #[arg(long, default_value = "50,200,800")]
    pub horizons: String,
    #[arg(long, default_value_t = 200)]
    pub seeds: usize,
    #[arg(long, value_enum, default_value_t = ConsistencyEstimator::Joint)]
    pub estimator: ConsistencyEstimator,
}

#[derive(Args, Debug, Serialize)]
#[command(
    args_override_self = true,
    after_help = "Output files:\n  clt_per_seed.csv  row,z_alpha,z_beta,z_s   (whitened errors)\n  clt_summary.csv   key,value\n  manifest.json"
)]
pub struct CltArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long, allow_hyphen_values = true, default_value = "2,2,0")]
    pub p: String,
    #[arg(long, default_value = "genic")]
    pub eta: String,
    #[arg(long, default_value_t = 0.5)]
    pub x0: f64,
    #[arg(long, default_value_t = 500.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 2000)]
    pub seeds: usize,
}

#[derive(Args, Debug, Serialize)]
#[command(
    args_override_self = true,
    after_help = "Output files without --pair:\n  zero_one_per_seed.csv  seed,kappa,slope,verdict\n  zero_one_summary.csv   kappa,finite,diverging,inconclusive,monotone_violations\n\
With --pair:\n  boundary_start_per_seed.csv  alpha,seed,statistic\n  boundary_start_summary.csv   key,value\n\
Both write manifest.json."
)]
pub struct ZeroOneArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Parameters alpha,beta,s; with --pair only beta and s are used
    #[arg(long, allow_hyphen_values = true, default_value = "0.5,1,0")]
    pub p: String,
    #[arg(long, default_value = "genic")]
    pub eta: String,
    #[arg(long, default_value = "0.25,0.5,0.75")]
    pub kappas: String,
    /// Horizon of each path (default 1, or 0.2 with --pair)
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long, default_value_t = 100)]
    pub seeds: usize,
    /// Compare the laws with these two rates at 0
    #[arg(long)]
    pub pair: Option<String>,
}

#[derive(Args, Debug, Serialize)]
#[command(
    args_override_self = true,
    after_help = "Output files:\n  projection_per_rep.csv  rep,statistic,p_value\n  projection_summary.csv  key,value\n  manifest.json"
)]
pub struct ProjectionArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Mutation weights of the alleles
    #[arg(long, default_value = "1,1,1")]
    pub nu: String,
    /// 1-based allele indices summed by the projection
    #[arg(long, default_value = "1")]
    pub subset: String,
    /// Initial frequencies (default uniform)
    #[arg(long)]
    pub x0: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub t_end: f64,
    /// Sample size of each of the two samples
    #[arg(long, default_value_t = 5000)]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
    /// KS p-value below which a replication fails
    #[arg(long, default_value_t = 0.01)]
    pub level: f64,
}
