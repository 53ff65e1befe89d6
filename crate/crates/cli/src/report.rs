//! Plot-ready tidy CSV and a Markdown Optimum Performance table built from
//! one or more run directories.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use tarsim_core::metrics::display_pct;
use tarsim_core::sim::ExperimentKind;

use crate::output::{read_json, Summary, SUMMARY_FILE};

pub const MARKDOWN_FILE: &str = "optimum.md";

#[derive(Debug)]
pub struct LoadedRun {
    pub label: String,
    pub dir: PathBuf,
    pub summary: Summary,
}

fn load(dirs: &[PathBuf]) -> Result<Vec<LoadedRun>> {
    let mut runs = Vec::with_capacity(dirs.len());
    let mut labels = HashSet::new();
    for (i, dir) in dirs.iter().enumerate() {
        let summary: Summary = read_json(&dir.join(SUMMARY_FILE))?;
        let base = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| format!("run{}", i + 1));
        let label = if labels.contains(&base) {
            format!("{base}-{}", i + 1)
        } else {
            base
        };
        labels.insert(label.clone());
        runs.push(LoadedRun {
            label,
            dir: dir.clone(),
            summary,
        });
    }
    if let Some(first) = runs.first() {
        for other in &runs[1..] {
            if other.summary.corpus.sha256 != first.summary.corpus.sha256 {
                bail!(
                    "{} and {} were produced from different corpora",
                    first.dir.display(),
                    other.dir.display()
                );
            }
        }
    }
    Ok(runs)
}

/// Splits a rounds.csv column name into (metric, target label).
fn metric_of(column: &str) -> Option<(&'static str, &str)> {
    if column == "training_recall_pct" {
        return Some(("training_recall_pct", ""));
    }
    for metric in ["validation_review_pct", "pct_review"] {
        if let Some(t) = column
            .strip_prefix(metric)
            .and_then(|r| r.strip_prefix('_'))
        {
            return Some((metric, t));
        }
    }
    None
}

/// Long-format rows `strategy, round, target, metric, value` for one run.
fn write_tidy(run: &LoadedRun, path: &Path) -> Result<()> {
    let mut out = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    out.write_record(["strategy", "round", "target", "metric", "value"])?;
    for entry in &run.summary.runs {
        let rounds = run.dir.join(&entry.rounds_csv);
        let mut reader = csv::Reader::from_path(&rounds)
            .with_context(|| format!("opening {}", rounds.display()))?;
        let header = reader.headers()?.clone();
        let columns: Vec<(usize, &'static str, &str)> = header
            .iter()
            .enumerate()
            .filter_map(|(i, c)| metric_of(c).map(|(m, t)| (i, m, t)))
            .collect();
        let round_col = header
            .iter()
            .position(|c| c == "round")
            .context("rounds.csv lacks a round column")?;
        for record in reader.records() {
            let record = record?;
            for &(i, metric, target) in &columns {
                out.write_record([
                    entry.strategy.name(),
                    &record[round_col],
                    target,
                    metric,
                    &record[i],
                ])?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn markdown(runs: &[LoadedRun]) -> String {
    let with_run = runs.len() > 1;
    let mut md = String::from("# Optimum Performance\n");
    let mut targets = Vec::new();
    for run in runs {
        for t in &run.summary.recall_targets {
            if !targets.contains(t) {
                targets.push(*t);
            }
        }
    }
    for target in targets {
        let _ = write!(md, "\n## {}% recall\n\n", target.label());
        if with_run {
            md.push_str("| Run ");
        }
        md.push_str("| Selection Strategy | Optimum Performance Round | Training Set Recall | % of Documents Requiring Review |\n");
        if with_run {
            md.push_str("|---");
        }
        md.push_str("|---|---:|---:|---:|\n");
        for run in runs {
            for row in run
                .summary
                .optimum_performance
                .iter()
                .filter(|r| r.recall_target == target)
            {
                if with_run {
                    let _ = write!(md, "| {} ", run.label);
                }
                let _ = writeln!(
                    md,
                    "| {} | {} | {} | {} |",
                    row.strategy.display_name(),
                    row.round,
                    display_pct(row.training_set_recall),
                    display_pct(row.pct_requiring_review)
                );
            }
        }
    }
    if runs
        .iter()
        .any(|r| r.summary.experiment == ExperimentKind::TypeOne)
    {
        md.push_str(
            "\nType One rows report the percentage of the validation set requiring review.\n",
        );
    }
    md
}

/// Writes `tidy.csv` (or `tidy-<run>.csv` per run when several are given)
/// and the Markdown table into `out`.
pub fn report(dirs: &[PathBuf], out: &Path) -> Result<()> {
    let runs = load(dirs)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for run in &runs {
        let name = if runs.len() == 1 {
            "tidy.csv".to_string()
        } else {
            format!("tidy-{}.csv", run.label)
        };
        write_tidy(run, &out.join(name))?;
    }
    fs::write(out.join(MARKDOWN_FILE), markdown(&runs))?;
    Ok(())
}
