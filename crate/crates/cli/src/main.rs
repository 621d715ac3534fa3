#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! `troplr`: tropical logistic regression on phylogenetic trees.
//!
//! Configuration comes from flags only; there are no config files or
//! environment variables. Exit status is 0 on success, 1 for usage errors
//! (bad flags or parameter values) and 2 for data errors (unreadable or
//! malformed inputs, degenerate data).

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "troplr", version, about = "Tropical logistic regression on phylogenetic tree space")]
#[command(long_about = "Tropical logistic regression on phylogenetic tree space.\n\n\
Every setting is a command-line flag; nothing is read from config files or the environment. \
Every stochastic command takes --seed (default 1) and is byte-for-byte reproducible.\n\n\
Exit status: 0 success, 1 usage error, 2 data error.")]
struct Cli {
    /// Worker threads for replicate-level parallelism.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    /// Log progress to stderr.
    #[arg(long, short, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate gene-tree datasets under the multispecies coalescent for a sweep of R = SD/N.
    Simulate(SimulateArgs),
    /// Draw points from tropical Laplace distributions.
    Sample(SampleArgs),
    /// Fermat-Weber point of a sample, with its optimality certificate.
    Fw(FwArgs),
    /// Fit a classifier and write it as model JSON.
    Fit(FitArgs),
    /// Log-odds, probabilities and classes for every row of a dataset.
    Predict(PredictArgs),
    /// AUC, error rates, generalization bounds and radius-law fits.
    Evaluate(EvaluateArgs),
    /// ASDSF and AUC convergence diagnostics for two tree chains.
    DiagnoseChains(DiagnoseArgs),
}

/// Labeled input: a CSV dataset or one tree file per class.
#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// Dataset CSV (`label,x_1,...,x_e`).
    #[arg(long, conflicts_with_all = ["class0", "class1"])]
    pub data: Option<PathBuf>,
    /// Newick or Nexus trees for class 0.
    #[arg(long, requires = "class1")]
    pub class0: Option<PathBuf>,
    /// Newick or Nexus trees for class 1.
    #[arg(long, requires = "class0")]
    pub class1: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Output directory (created if missing).
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Leaves per species tree.
    #[arg(long, default_value_t = 10)]
    pub leaves: usize,
    /// Gene trees per class.
    #[arg(long, default_value_t = 1000)]
    pub per_class: usize,
    /// Ratios R = SD/N, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.25,0.5,1,2,5,10")]
    pub ratios: Vec<f64>,
    /// Effective population size N.
    #[arg(long, default_value_t = 1.0)]
    pub pop_size: f64,
    /// Yule birth rate.
    #[arg(long, default_value_t = 1.0)]
    pub birth_rate: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Also write the gene trees as Newick, one file per class.
    #[arg(long)]
    pub newick: bool,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    /// Class-0 center, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub center: Vec<f64>,
    #[arg(long)]
    pub sigma: f64,
    /// Class-0 sample size.
    #[arg(long)]
    pub n: usize,
    /// Optional class-1 center.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, requires_all = ["sigma1", "n1"])]
    pub center1: Option<Vec<f64>>,
    #[arg(long, requires = "center1")]
    pub sigma1: Option<f64>,
    #[arg(long, requires = "center1")]
    pub n1: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output CSV (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FwArgs {
    #[command(flatten)]
    pub input: DataArgs,
    /// Use only rows with this label.
    #[arg(long)]
    pub class: Option<u8>,
    /// Initial step (default: a tenth of the median pairwise distance).
    #[arg(long)]
    pub step0: Option<f64>,
    #[arg(long, default_value_t = 20_000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    /// Output JSON (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    One,
    Two,
    Classical,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: DataArgs,
    #[arg(long, value_enum)]
    pub model: ModelKind,
    /// Class-1 prior in (0, 1), or `empirical` for the training share of class 1.
    #[arg(long, default_value = "0.5")]
    pub prior: String,
    /// Output model JSON (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub input: DataArgs,
    /// Output CSV (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub input: DataArgs,
    /// Report JSON (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write ROC points as CSV.
    #[arg(long)]
    pub roc: Option<PathBuf>,
    /// Write pp-plot points of the radius-law fits as CSV.
    #[arg(long)]
    pub pp: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdArg {
    Sample,
    Population,
}

#[derive(Args, Debug)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub chain_a: PathBuf,
    #[arg(long)]
    pub chain_b: PathBuf,
    /// Checkpoint every this many iterations.
    #[arg(long)]
    pub diagnfreq: u64,
    /// Share of each prefix kept for both metrics.
    #[arg(long, default_value_t = 0.3)]
    pub frac: f64,
    /// Training share of the stratified split.
    #[arg(long, default_value_t = 0.5)]
    pub split: f64,
    #[arg(long, default_value_t = 0.1)]
    pub min_freq: f64,
    /// Standard deviation convention for split frequencies.
    #[arg(long, value_enum, default_value_t = SdArg::Sample)]
    pub sd: SdArg,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output CSV (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if cli.threads == 0 {
        eprintln!("error: --threads must be >= 1");
        return ExitCode::from(1);
    }
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    let log = commands::Log(cli.verbose);
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&a, log),
        Command::Sample(a) => commands::sample(&a, log),
        Command::Fw(a) => commands::fw(&a, log),
        Command::Fit(a) => commands::fit(&a, log),
        Command::Predict(a) => commands::predict(&a, log),
        Command::Evaluate(a) => commands::evaluate(&a, log),
        Command::DiagnoseChains(a) => commands::diagnose(&a, log),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
