use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use tarsim_core::metrics::display_pct;
use tarsim_core::model::TrainConfig;
use tarsim_core::sim::{run_matrix, SimulationConfig};
use tarsim_core::synth::{generate, SynthConfig};
use tarsim_core::LabeledCorpus;

use crate::args::{Cli, Command, RunArgs, SynthArgs};
use crate::output::{
    file_sha256, write_json, write_rounds_csv, CorpusInfo, Manifest, RunSettings, Summary,
    MANIFEST_FILE, ROUNDS_FILE, SUMMARY_FILE,
};
use crate::report;

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let dir = run(&args)?;
            println!("{}", dir.display());
        }
        Command::Synth(args) => synth(&args)?,
        Command::Report(args) => {
            report::report(&args.run_dirs, &args.out)?;
            println!("{}", args.out.display());
        }
    }
    Ok(())
}

fn to_usize(v: u64, flag: &str) -> Result<usize> {
    usize::try_from(v).with_context(|| format!("--{flag} is too large"))
}

impl RunArgs {
    pub fn settings(&self) -> Result<RunSettings> {
        Ok(RunSettings {
            corpus: self.corpus.display().to_string(),
            experiment: self.experiment.into(),
            strategies: self.strategy.strategies(),
            batch_size: to_usize(self.batch_size, "batch-size")?,
            seed_size: to_usize(self.seed_size, "seed-size")?,
            validation_fraction: self.validation_fraction,
            recall_targets: self.targets().to_vec(),
            master_seed: self.seed,
            max_rounds: self
                .max_rounds
                .map(|m| to_usize(m, "max-rounds"))
                .transpose()?,
            vocabulary_capacity: self.vocabulary_size,
            train: TrainConfig {
                warm_start: !self.cold_start,
                ..TrainConfig::default()
            },
        })
    }
}

fn default_out_dir() -> PathBuf {
    Path::new("runs").join(chrono::Utc::now().format("%Y%m%dT%H%M%SZ").to_string())
}

/// Executes `run` and returns the output directory.
pub fn run(args: &RunArgs) -> Result<PathBuf> {
    let settings = args.settings()?;
    let out = args.out.clone().unwrap_or_else(default_out_dir);
    run_with_settings(&settings, &out)?;
    Ok(out)
}

pub fn run_with_settings(settings: &RunSettings, out: &Path) -> Result<()> {
    let started_at = chrono::Utc::now();
    let clock = Instant::now();
    let corpus_path = Path::new(&settings.corpus);
    let corpus = LabeledCorpus::load(corpus_path)
        .with_context(|| format!("loading corpus {}", corpus_path.display()))?;
    let sha256 = file_sha256(corpus_path)?;

    let base = SimulationConfig {
        experiment: settings.experiment,
        strategy: settings.strategies[0],
        batch_size: settings.batch_size,
        seed_size: settings.seed_size,
        validation_fraction: settings.validation_fraction,
        recall_targets: settings.recall_targets.clone(),
        master_seed: settings.master_seed,
        max_rounds: settings.max_rounds,
        vocabulary_capacity: settings.vocabulary_capacity,
        train: settings.train.clone(),
        keep_scores: false,
    };
    let summary = run_matrix(
        &corpus,
        &base,
        &settings.strategies,
        &settings.recall_targets,
    )?;

    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut outputs = Vec::new();
    for run in &summary.runs {
        let dir = out.join(run.strategy.name());
        fs::create_dir_all(&dir)?;
        let file = File::create(dir.join(ROUNDS_FILE))?;
        write_rounds_csv(BufWriter::new(file), run, &settings.recall_targets)?;
        outputs.push(format!("{}/{ROUNDS_FILE}", run.strategy.name()));
        for target in &settings.recall_targets {
            if let Some(op) = run.optimum(*target) {
                eprintln!(
                    "{:<11} {}% recall: optimum at round {} ({}% reviewed)",
                    run.strategy.name(),
                    target.label(),
                    op.round,
                    display_pct(op.pct_requiring_review)
                );
            }
        }
    }

    let info = CorpusInfo {
        sha256: sha256.clone(),
        total: corpus.total(),
        positives: corpus.positives(),
    };
    write_json(
        &out.join(SUMMARY_FILE),
        &Summary::new(&summary, info, settings.master_seed),
    )?;
    outputs.push(SUMMARY_FILE.to_string());
    outputs.push(MANIFEST_FILE.to_string());

    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        settings: settings.clone(),
        corpus_sha256: sha256,
        started_at: started_at.to_rfc3339(),
        finished_at: chrono::Utc::now().to_rfc3339(),
        elapsed_seconds: clock.elapsed().as_secs_f64(),
        outputs,
    };
    write_json(&out.join(MANIFEST_FILE), &manifest)?;
    Ok(())
}

pub fn synth(args: &SynthArgs) -> Result<()> {
    let config = SynthConfig {
        total: args.total,
        richness: args.richness,
        vocabulary_size: args.vocab_size,
        separation: args.separation,
        mean_length: args.doc_length,
        seed: args.seed,
    };
    let corpus = generate(&config)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let file =
        File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    corpus.write_jsonl(BufWriter::new(file))?;
    eprintln!(
        "wrote {} documents ({} positive) to {}",
        corpus.total(),
        corpus.positives(),
        args.out.display()
    );
    Ok(())
}
