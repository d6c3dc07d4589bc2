use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use pathsel::graph_data::{EdgeRule, OutcomeKind};
use pathsel::likelihood::Hyperparameters;

/// Bayesian joint selection of pathways and genes.
#[derive(Debug, Parser)]
#[command(name = "pathsel", version, args_override_self = true)]
pub struct Cli {
    /// Flat key=value file of option defaults; flags given on the command
    /// line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic data set with known truth.
    Simulate(SimulateArgs),
    /// Scan the MRF prior over η to locate its phase transition.
    ScanEta(ScanArgs),
    /// Run the MCMC sampler and summarize the posterior.
    Fit(FitArgs),
    /// Predict held-out responses from a fitted selection.
    Predict(PredictArgs),
    /// Recompute posterior summaries from saved traces.
    Report(ReportArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::ScanEta(_) => "scan-eta",
            Command::Fit(_) => "fit",
            Command::Predict(_) => "predict",
            Command::Report(_) => "report",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    /// Output directory.
    #[arg(long, env = "PATHSEL_OUT", default_value = "pathsel-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct HyperArgs {
    /// Upper end of the η prior support.
    #[arg(long, default_value_t = Hyperparameters::default().eta_pt)]
    pub eta_pt: f64,
    /// Prior inclusion probability of a pathway.
    #[arg(long, default_value_t = Hyperparameters::default().phi_star)]
    pub phi_star: f64,
    /// MRF sparsity parameter.
    #[arg(long, allow_hyphen_values = true, default_value_t = Hyperparameters::default().mu_mrf)]
    pub mu: f64,
    /// Slab variance factor of the regression coefficients.
    #[arg(long, default_value_t = Hyperparameters::default().h)]
    pub h: f64,
    /// Prior variance factor of the intercept.
    #[arg(long, default_value_t = Hyperparameters::default().h0)]
    pub h0: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = Hyperparameters::default().alpha0)]
    pub alpha0: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = Hyperparameters::default().beta0)]
    pub beta0: f64,
    /// Inverse-gamma shape parameter (degrees of freedom) of σ².
    #[arg(long, default_value_t = Hyperparameters::default().nu0)]
    pub nu0: f64,
    #[arg(long, default_value_t = Hyperparameters::default().sigma0_sq)]
    pub sigma0_sq: f64,
    /// Beta prior shape parameters of η/η_PT.
    #[arg(long, default_value_t = Hyperparameters::default().c0)]
    pub c0: f64,
    #[arg(long, default_value_t = Hyperparameters::default().d0)]
    pub d0: f64,
}

impl HyperArgs {
    pub fn resolve(&self) -> Hyperparameters {
        Hyperparameters {
            alpha0: self.alpha0,
            beta0: self.beta0,
            h0: self.h0,
            h: self.h,
            nu0: self.nu0,
            sigma0_sq: self.sigma0_sq,
            phi_star: self.phi_star,
            mu_mrf: self.mu,
            c0: self.c0,
            d0: self.d0,
            eta_pt: self.eta_pt,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Pathway membership file (pathway_id<TAB>gene_id).
    #[arg(long)]
    pub membership: PathBuf,
    /// Gene network edge list (gene_id<TAB>gene_id).
    #[arg(long)]
    pub network: PathBuf,
    /// Expression matrix, samples in rows.
    #[arg(long)]
    pub expression: PathBuf,
    /// Response file: sample,y or sample,time,event.
    #[arg(long)]
    pub response: PathBuf,
    #[arg(long, default_value = "continuous")]
    pub outcome: OutcomeKind,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Existing membership file; a random structure is generated if omitted.
    #[arg(long, requires = "network")]
    pub membership: Option<PathBuf>,
    #[arg(long, requires = "membership")]
    pub network: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub n_pathways: usize,
    #[arg(long, default_value_t = 300)]
    pub n_genes: usize,
    /// Smallest pathway in a generated structure.
    #[arg(long, default_value_t = 10)]
    pub min_pathway_size: usize,
    #[arg(long, default_value_t = 100)]
    pub n_samples: usize,
    /// Number of pathways carrying signal.
    #[arg(long, default_value_t = 4)]
    pub true_pathways: usize,
    /// Magnitude of the true coefficients.
    #[arg(long, default_value_t = 1.5)]
    pub beta: f64,
    /// Parent weight in the expression generator.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.7)]
    pub rho_sim: f64,
    #[arg(long, default_value_t = 1.0)]
    pub noise_sd: f64,
    /// Use the mean rather than the sum of parent expression.
    #[arg(long)]
    pub average_parents: bool,
    /// Emit survival data with exponential censoring at this rate.
    #[arg(long)]
    pub censoring_rate: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub membership: PathBuf,
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long, allow_hyphen_values = true, default_value_t = Hyperparameters::default().mu_mrf)]
    pub mu: f64,
    #[arg(long, default_value_t = 0.0)]
    pub eta_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub eta_max: f64,
    #[arg(long, default_value_t = 41)]
    pub grid_points: usize,
    /// Gibbs sweeps per grid point.
    #[arg(long, default_value_t = 2000)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[arg(long, default_value_t = 300_000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 50_000)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 1)]
    pub thin: usize,
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    /// Seed of the first chain; chain c uses seed + c.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Update η every this many iterations; 0 keeps η fixed.
    #[arg(long, default_value_t = 1)]
    pub eta_every: usize,
    /// Starting (or, with --eta-every 0, fixed) η; η_PT/2 if omitted.
    #[arg(long)]
    pub eta: Option<f64>,
    /// How the network is restricted to the selected pathways.
    #[arg(long, default_value = "union")]
    pub edge_rule: EdgeRule,
    /// Write a checkpoint every this many iterations; 0 disables.
    #[arg(long, default_value_t = 0)]
    pub checkpoint_every: usize,
    /// Continue chains from the checkpoints in the output directory.
    #[arg(long)]
    pub resume: bool,
    #[arg(long, default_value_t = 0.8)]
    pub pathway_threshold: f64,
    #[arg(long, default_value_t = 0.5)]
    pub gene_threshold: f64,
    /// Rows written to models.csv.
    #[arg(long, default_value_t = 1000)]
    pub max_models: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    /// Training data; the fitted selection refers to its genes.
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[arg(long)]
    pub test_expression: PathBuf,
    /// Held-out responses; enables the MSE report.
    #[arg(long)]
    pub test_response: Option<PathBuf>,
    /// Directory holding the outputs of `fit`.
    #[arg(long)]
    pub fit_dir: PathBuf,
    /// Use the most frequent visited model instead of thresholded marginals.
    #[arg(long)]
    pub top_model: bool,
    #[arg(long, default_value_t = 0.8)]
    pub pathway_threshold: f64,
    #[arg(long, default_value_t = 0.5)]
    pub gene_threshold: f64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub membership: PathBuf,
    /// Directory holding the traces written by `fit`.
    #[arg(long)]
    pub fit_dir: PathBuf,
    /// Defaults to the burn-in recorded by `fit`.
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long, default_value_t = 0.8)]
    pub pathway_threshold: f64,
    #[arg(long, default_value_t = 0.5)]
    pub gene_threshold: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_models: usize,
    #[command(flatten)]
    pub out: OutArgs,
}
