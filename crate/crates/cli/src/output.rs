//! On-disk artifacts of a `run`: per-strategy `rounds.csv`, a deterministic
//! `summary.json`, and a `manifest.json` describing the invocation.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tarsim_core::metrics::{display_pct, OptimumPerformance, RecallTarget};
use tarsim_core::model::TrainConfig;
use tarsim_core::sim::{ExperimentKind, RoundRecord, RunResult, RunSummary};
use tarsim_core::StrategyKind;

pub const SUMMARY_FILE: &str = "summary.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const ROUNDS_FILE: &str = "rounds.csv";

/// Hex SHA-256 of a file's bytes.
pub fn file_sha256(path: &Path) -> Result<String> {
    let mut file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut hasher = Sha256::new();
    io::copy(&mut file, &mut hasher)?;
    Ok(hex::encode(hasher.finalize()))
}

/// Full-precision cutoff; the empty string stands for "no cutoff".
fn cutoff_field(score: Option<f64>) -> String {
    score.map(|s| s.to_string()).unwrap_or_default()
}

pub fn rounds_header(experiment: ExperimentKind, targets: &[RecallTarget]) -> Vec<String> {
    let mut header: Vec<String> = [
        "round",
        "strategy",
        "training_size",
        "training_positives",
        "training_recall_pct",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for t in targets {
        let l = t.label();
        header.push(format!("cutoff_{l}"));
        match experiment {
            ExperimentKind::TypeOne => header.push(format!("validation_review_pct_{l}")),
            ExperimentKind::TypeTwo => {
                header.push(format!("docs_above_cutoff_{l}"));
                header.push(format!("pct_review_{l}"));
            }
        }
    }
    header
}

fn round_row(
    strategy: StrategyKind,
    record: &RoundRecord,
    targets: &[RecallTarget],
) -> Vec<String> {
    let mut row = vec![
        record.round.to_string(),
        strategy.name().to_string(),
        record.training_size.to_string(),
        record.training_positives.to_string(),
        display_pct(record.training_recall_pct),
    ];
    for &t in targets {
        if let Some(s) = record.review_stats().iter().find(|s| s.recall_target == t) {
            row.push(cutoff_field(s.cutoff_score));
            row.push(s.docs_at_or_above_cutoff.to_string());
            row.push(display_pct(s.pct_requiring_review));
        } else if let Some(s) = record
            .validation_stats()
            .iter()
            .find(|s| s.recall_target == t)
        {
            row.push(cutoff_field(s.cutoff_score));
            row.push(display_pct(s.validation_review_pct));
        }
    }
    row
}

pub fn write_rounds_csv(w: impl Write, run: &RunResult, targets: &[RecallTarget]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(rounds_header(run.experiment, targets))?;
    for record in &run.records {
        csv.write_record(round_row(run.strategy, record, targets))?;
    }
    csv.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusInfo {
    pub sha256: String,
    pub total: usize,
    pub positives: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub strategy: StrategyKind,
    pub rounds: usize,
    /// Documents the measurements refer to: the whole corpus for Type Two,
    /// the pool left after the validation split for Type One.
    pub universe_size: usize,
    pub universe_positives: usize,
    pub validation_size: Option<usize>,
    /// Path of this strategy's rounds file, relative to the run directory.
    pub rounds_csv: String,
}

/// Everything a report needs, with no timings or paths outside the run
/// directory, so reruns produce identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: ExperimentKind,
    pub master_seed: u64,
    pub corpus: CorpusInfo,
    pub recall_targets: Vec<RecallTarget>,
    pub optimum_performance: Vec<OptimumPerformance>,
    pub runs: Vec<RunEntry>,
}

impl Summary {
    pub fn new(summary: &RunSummary, corpus: CorpusInfo, master_seed: u64) -> Self {
        Self {
            experiment: summary.experiment,
            master_seed,
            corpus,
            recall_targets: summary.recall_targets.clone(),
            optimum_performance: summary.rows.clone(),
            runs: summary
                .runs
                .iter()
                .map(|r| RunEntry {
                    strategy: r.strategy,
                    rounds: r.records.len(),
                    universe_size: r.universe_size,
                    universe_positives: r.universe_positives,
                    validation_size: r.validation_size,
                    rounds_csv: format!("{}/{ROUNDS_FILE}", r.strategy.name()),
                })
                .collect(),
        }
    }
}

/// Resolved settings of a `run` invocation; enough to repeat it exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub corpus: String,
    pub experiment: ExperimentKind,
    pub strategies: Vec<StrategyKind>,
    pub batch_size: usize,
    pub seed_size: usize,
    pub validation_fraction: f64,
    pub recall_targets: Vec<RecallTarget>,
    pub master_seed: u64,
    pub max_rounds: Option<usize>,
    pub vocabulary_capacity: usize,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub settings: RunSettings,
    pub corpus_sha256: String,
    pub started_at: String,
    pub finished_at: String,
    pub elapsed_seconds: f64,
    /// Files written by the run, relative to the run directory.
    pub outputs: Vec<String>,
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    serde_json::from_reader(io::BufReader::new(file))
        .with_context(|| format!("parsing {}", path.display()))
}
