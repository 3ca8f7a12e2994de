mod commands;
mod error;
mod io;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

/// Bayesian wavelet-domain functional ANOVA.
#[derive(Parser, Debug)]
#[command(name = "nigmg", version, about)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "NIGMG_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Posterior-mean denoising of one function observed one or more times.
    Denoise(DenoiseArgs),
    /// Test factor effects and report probabilities, calls and bands.
    Fanova(FanovaArgs),
    /// Fit hyperparameters only and write them as JSON.
    Fit(FitArgs),
    /// Run a simulation study and summarize it by ROC.
    Simulate(SimulateArgs),
    /// Solve for the sparsity parameter giving a target prior PJAP.
    Calibrate(CalibrateArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitChoice {
    Eb,
    Hybrid,
    Fixed,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// CSV of observations, one per row.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "la10")]
    pub wavelet: String,
    /// Hyperparameter JSON used as the starting point (or as is with --fit fixed).
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Optimizer runs from jittered starting points.
    #[arg(long, default_value_t = 3)]
    pub restarts: usize,
    #[arg(long, default_value_t = 2000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone)]
pub struct SparsityArgs {
    /// Calibrate eta_kappa so the prior joint alternative probability is p.
    #[arg(long, conflicts_with = "eta_kappa")]
    pub prior_pjap: Option<f64>,
    #[arg(long)]
    pub eta_kappa: Option<f64>,
    #[arg(long, default_value_t = 0.4)]
    pub gamma_kappa: f64,
}

#[derive(Args, Debug)]
pub struct DenoiseArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value = "eb")]
    pub fit: FitChoice,
    /// Posterior draws for credible bands (0 for none).
    #[arg(long, default_value_t = 0)]
    pub samples: usize,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct FanovaArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// CSV with a header of factor names and one row of labels per observation.
    #[arg(long)]
    pub design: PathBuf,
    #[command(flatten)]
    pub sparsity: SparsityArgs,
    #[arg(long, value_enum, default_value = "hybrid")]
    pub fit: FitChoice,
    /// Target Bayesian FDR for node calls; otherwise --delta is used.
    #[arg(long)]
    pub fdr: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
    /// Posterior draws for bands (default 1000 when a contrast is requested).
    #[arg(long)]
    pub samples: Option<usize>,
    /// Contrast band `[factor:]A-B`, the effect of level A minus level B.
    #[arg(long)]
    pub contrast: Vec<String>,
    /// Also emit contrast bands that include the father coefficient.
    #[arg(long)]
    pub include_father: bool,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Design CSV; without one an intercept-only model is fitted.
    #[arg(long)]
    pub design: Option<PathBuf>,
    #[command(flatten)]
    pub sparsity: SparsityArgs,
    #[arg(long, value_enum, default_value = "eb")]
    pub fit: FitChoice,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Scenario JSON; defaults to the local-effect doppler setting.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub replicates: usize,
    #[arg(long, value_delimiter = ',', default_value = "nigmg,wfanova,tanova")]
    pub methods: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.5)]
    pub prior_pjap: f64,
    /// Per-replicate statistics CSV; AUC and ROC tables go next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub target: f64,
    #[arg(long, default_value_t = 0.4)]
    pub gamma_kappa: f64,
    /// Signal length T; the tree depth follows from it.
    #[arg(long, conflicts_with = "levels", required_unless_present = "levels")]
    pub length: Option<usize>,
    /// Finest level J directly.
    #[arg(long)]
    pub levels: Option<u32>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: could not size thread pool: {e}");
        }
    }
    let result: Result<(), CliError> = match cli.command {
        Command::Denoise(a) => commands::denoise(&a),
        Command::Fanova(a) => commands::fanova(&a),
        Command::Fit(a) => commands::fit(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Calibrate(a) => commands::calibrate(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nigmg: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
