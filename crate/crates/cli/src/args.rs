use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tarsim_core::metrics::RecallTarget;
use tarsim_core::sim::ExperimentKind;
use tarsim_core::StrategyKind;

#[derive(Debug, Parser)]
#[command(
    name = "tarsim",
    version,
    about = "Active-learning document review simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment over a labeled corpus.
    Run(RunArgs),
    /// Generate a synthetic labeled corpus.
    Synth(SynthArgs),
    /// Turn run directories into plot-ready CSV and a Markdown summary.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExperimentArg {
    Type1,
    Type2,
}

impl From<ExperimentArg> for ExperimentKind {
    fn from(e: ExperimentArg) -> Self {
        match e {
            ExperimentArg::Type1 => ExperimentKind::TypeOne,
            ExperimentArg::Type2 => ExperimentKind::TypeTwo,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    TopRanked,
    Uncertain,
    Random,
    All,
}

impl StrategyArg {
    pub fn strategies(self) -> Vec<StrategyKind> {
        match self {
            Self::TopRanked => vec![StrategyKind::TopRanked],
            Self::Uncertain => vec![StrategyKind::Uncertain],
            Self::Random => vec![StrategyKind::Random],
            Self::All => StrategyKind::ALL.to_vec(),
        }
    }
}

/// Comma-separated recall targets, parsed as one flag value.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetList(pub Vec<RecallTarget>);

fn parse_targets(s: &str) -> Result<TargetList, String> {
    let mut targets = Vec::new();
    for part in s.split(',') {
        let v: f64 = part
            .trim()
            .parse()
            .map_err(|_| format!("`{part}` is not a number"))?;
        let t = RecallTarget::new(v).map_err(|e| e.to_string())?;
        if targets.contains(&t) {
            return Err(format!("recall target {v} listed twice"));
        }
        targets.push(t);
    }
    Ok(TargetList(targets))
}

fn parse_fraction(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err("must lie strictly between 0 and 1".into())
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_enum, default_value = "type2")]
    pub experiment: ExperimentArg,
    #[arg(long, value_enum, default_value = "all")]
    pub strategy: StrategyArg,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub batch_size: u64,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub seed_size: u64,
    #[arg(long, default_value = "0.10", value_parser = parse_fraction)]
    pub validation_fraction: f64,
    /// Comma-separated recall targets in (0, 1].
    #[arg(long = "recall", default_value = "0.75,0.90", value_parser = parse_targets)]
    pub recall: TargetList,
    /// Master seed; every random draw derives from it.
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_rounds: Option<u64>,
    #[arg(long, default_value_t = tarsim_core::features::DEFAULT_VOCABULARY_CAPACITY)]
    pub vocabulary_size: usize,
    /// Train every round from zero weights instead of the previous model.
    #[arg(long)]
    pub cold_start: bool,
    /// Output directory (default: runs/<timestamp>).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RunArgs {
    pub fn targets(&self) -> &[RecallTarget] {
        &self.recall.0
    }
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub total: usize,
    #[arg(long)]
    pub richness: f64,
    #[arg(long, default_value_t = 2000)]
    pub vocab_size: usize,
    /// Class signal strength in [0, 1]; 0 makes text independent of label.
    #[arg(long, default_value_t = 0.3)]
    pub separation: f64,
    #[arg(long, default_value_t = 60)]
    pub doc_length: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Directories written by `run`.
    #[arg(required = true)]
    pub run_dirs: Vec<PathBuf>,
    #[arg(long, default_value = "report")]
    pub out: PathBuf,
}
