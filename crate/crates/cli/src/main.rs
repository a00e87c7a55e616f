//! `monoculture` command-line tool.

mod commands;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use monoculture::correlation::MetricKind;
use monoculture::judge::Grouping;
use monoculture::market::PreferenceMethod;
use monoculture::regression::CovariateSet;
use serde::Serialize;

use run::{Failure, OutFormat};

#[derive(Parser, Debug)]
#[command(name = "monoculture", version, about = "Correlated errors across models and their effect on hiring markets")]
pub struct Cli {
    /// Master seed for every random draw.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (outputs do not depend on this).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Extra output encoding. CSV is always written.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    pub format: OutFormat,
    /// Output directory.
    #[arg(long, global = true, env = "MONOCULTURE_OUT", default_value = "out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic response or rating dataset from a TOML spec.
    Synth(SynthArgs),
    /// All-pairs similarity matrices, heatmaps and the random baseline.
    Correlate(CorrelateArgs),
    /// Pair-level OLS fits of similarity on model covariates.
    Regress(RegressArgs),
    /// Accuracy inflation when a model grades the others.
    Judge(JudgeArgs),
    /// Monte-Carlo hiring markets.
    Market(MarketArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::Correlate(_) => "correlate",
            Command::Regress(_) => "regress",
            Command::Judge(_) => "judge",
            Command::Market(_) => "market",
        }
    }
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// TOML file with a `[responses]` and/or `[ratings]` table.
    #[arg(long)]
    pub config: PathBuf,
}

/// Either a response dataset (answers + key) or a rating dataset.
#[derive(Args, Debug, Clone, Serialize)]
pub struct DataArgs {
    #[arg(long)]
    pub answers: Option<PathBuf>,
    #[arg(long)]
    pub key: Option<PathBuf>,
    #[arg(long, conflicts_with_all = ["answers", "key"])]
    pub ratings: Option<PathBuf>,
    /// Human labels for the rating dataset.
    #[arg(long, requires = "ratings")]
    pub human: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub scale_min: f64,
    #[arg(long, default_value_t = 10.0)]
    pub scale_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pearson,
    Spearman,
}

#[derive(Args, Debug)]
pub struct CorrelateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Metric(s) to compute; default: every metric the dataset supports.
    #[arg(long, value_parser = parse_metric)]
    pub metric: Vec<MetricKind>,
    /// Correlation used for rating-correlation matrices.
    #[arg(long, value_enum, default_value = "pearson")]
    pub method: Method,
}

#[derive(Args, Debug)]
pub struct RegressArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub meta: PathBuf,
    /// hf, helm or resumes; default hf for responses, resumes for ratings.
    #[arg(long, value_parser = parse_covariates)]
    pub covariates: Option<CovariateSet>,
    #[arg(long, value_parser = parse_metric)]
    pub metric: Vec<MetricKind>,
    #[arg(long, value_enum, default_value = "pearson")]
    pub method: Method,
}

#[derive(Args, Debug)]
pub struct JudgeArgs {
    #[arg(long)]
    pub answers: PathBuf,
    #[arg(long)]
    pub key: PathBuf,
    #[arg(long)]
    pub meta: PathBuf,
    /// Judge model(s); default: the most accurate model of every group.
    #[arg(long)]
    pub judge: Vec<String>,
    #[arg(long, value_parser = parse_grouping, default_value = "company")]
    pub grouping: Grouping,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Budget {
    All,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Pool {
    All,
    Labeled,
}

#[derive(Args, Debug)]
pub struct MarketArgs {
    /// TOML scenario; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = parse_method)]
    pub method: Option<PreferenceMethod>,
    #[arg(long)]
    pub firms: Option<usize>,
    /// Fraction of applicants each firm interviews.
    #[arg(long = "p")]
    pub p: Option<f64>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub applicants: Option<usize>,
    #[arg(long)]
    pub capacity: Option<usize>,
    #[arg(long, value_enum)]
    pub budget: Option<Budget>,
    #[arg(long, value_enum)]
    pub pool: Option<Pool>,
    #[arg(long)]
    pub job: Option<String>,
    /// Comma-separated model ids firms may draw from.
    #[arg(long, value_delimiter = ',')]
    pub models: Option<Vec<String>>,
    #[arg(long)]
    pub ratings: Option<PathBuf>,
    #[arg(long, requires = "ratings")]
    pub human: Option<PathBuf>,
    #[arg(long)]
    pub meta: Option<PathBuf>,
    /// `applicant_id,firm,score` file; applicants rank firms by score.
    #[arg(long)]
    pub applicant_scores: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub scale_min: f64,
    #[arg(long, default_value_t = 10.0)]
    pub scale_max: f64,
    /// Also sweep exclusion against the number of distinct models, 1..=N.
    #[arg(long)]
    pub sweep: Option<usize>,
    #[arg(long, default_value_t = 50)]
    pub sweep_combinations: usize,
    #[arg(long, default_value_t = 30)]
    pub sweep_replicates: usize,
}

fn parse_metric(s: &str) -> Result<MetricKind, String> {
    s.parse().map_err(|e: monoculture::Error| e.to_string())
}

fn parse_covariates(s: &str) -> Result<CovariateSet, String> {
    s.parse().map_err(|e: monoculture::Error| e.to_string())
}

fn parse_grouping(s: &str) -> Result<Grouping, String> {
    s.parse().map_err(|e: monoculture::Error| e.to_string())
}

fn parse_method(s: &str) -> Result<PreferenceMethod, String> {
    s.parse().map_err(|e: monoculture::Error| e.to_string())
}

#[cfg(feature = "parallel")]
fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| Failure::config(e.to_string())),
        None => Ok(f()),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_threads<T: Send>(_threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    Ok(f())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if cli.threads == Some(0) {
        eprintln!("error: --threads must be at least 1");
        return ExitCode::from(1);
    }
    let result = with_threads(cli.threads, || commands::dispatch(&cli)).and_then(|r| r);
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            if let Some(sub) = f.usage_for {
                let mut cmd = Cli::command();
                cmd.build();
                if let Some(sc) = cmd.find_subcommand_mut(sub) {
                    eprintln!("\n{}", sc.render_usage());
                }
            }
            ExitCode::from(f.code)
        }
    }
}
