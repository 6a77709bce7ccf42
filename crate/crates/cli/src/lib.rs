//! `irw`: fit, tune and benchmark iteratively reweighted robust sparse
//! regression from the command line.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use irw_core::{CvScore, LossKind};

pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "irw",
    version,
    about = "Robust sparse regression with folded-concave penalties"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit at a fixed lambda and write coefficients and solver traces.
    Fit(ModelArgs),
    /// Choose (lambda, tau) by k-fold cross-validation and refit.
    Cv(ModelArgs),
    /// Fit along a log-spaced lambda path.
    Path(ModelArgs),
    /// Draw one dataset from a scenario.
    Simulate(SimArgs),
    /// Replicated TP/FP/RE benchmark over scenarios and methods.
    Bench(SimArgs),
    /// ROC curves and AUC over the lambda path.
    Roc(SimArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// CSV with a header; response in the first column.
    #[arg(long)]
    pub data: PathBuf,
    /// JSON settings; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = parse_loss)]
    pub loss: Option<LossKind>,
    /// l1, scad, mcp or capped-l1.
    #[arg(long)]
    pub penalty: Option<String>,
    /// Shape parameter `a` of SCAD or MCP.
    #[arg(long)]
    pub penalty_a: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub stages: Option<usize>,
    /// Sparsity guess for the default stage count.
    #[arg(long)]
    pub s_hint: Option<usize>,
    /// Add an unpenalized intercept column.
    #[arg(long)]
    pub intercept: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub cv_folds: Option<usize>,
    #[arg(long)]
    pub n_lambda: Option<usize>,
    #[arg(long)]
    pub lambda_ratio: Option<f64>,
    /// robust-loss or absolute-error.
    #[arg(long, value_parser = parse_cv_score)]
    pub cv_score: Option<CvScore>,
    #[arg(long, default_value = "irw-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    /// JSON scenario (simulate), `{scenarios, settings}` (bench) or `{scenario, settings}` (roc).
    #[arg(long)]
    pub config: PathBuf,
    /// Replaces the seed of every scenario.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replications: Option<usize>,
    #[arg(long, default_value = "irw-out")]
    pub out: PathBuf,
}

fn parse_loss(s: &str) -> Result<LossKind, String> {
    s.parse().map_err(|e: irw_core::IrwError| e.to_string())
}

fn parse_cv_score(s: &str) -> Result<CvScore, String> {
    match s {
        "robust-loss" => Ok(CvScore::RobustLoss),
        "absolute-error" => Ok(CvScore::AbsoluteError),
        _ => Err(format!(
            "unknown CV score '{s}' (expected robust-loss or absolute-error)"
        )),
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Fit(a) => commands::fit(&a),
        Command::Cv(a) => commands::cv(&a),
        Command::Path(a) => commands::path(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Bench(a) => commands::bench(&a),
        Command::Roc(a) => commands::roc(&a),
    }
}
