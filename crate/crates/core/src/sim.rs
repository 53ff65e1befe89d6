//! Round loop for the two experiment protocols.
//!
//! **Type One** holds out a random validation set, runs active learning over
//! the rest, and evaluates every model on the held-out documents.
//!
//! **Type Two** runs active learning over the whole corpus and, after each
//! round, measures how much of the corpus must be reviewed (training
//! documents plus everything at or above the recall cut-off) to reach each
//! recall target. It stops once the training set holds every positive.
//!
//! Each round: train, evaluate, score the remaining documents, select the
//! next batch. When the training set has only one class the round falls back
//! to flat 0.5 scores and the next batch is drawn at random.

use std::time::{Duration, Instant};

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{split_validation, CorpusError, LabeledCorpus};
use crate::features::{
    build_index, build_vocabulary, vectorize_corpus, FeatureError, InvertedIndex, SparseVector,
    DEFAULT_VOCABULARY_CAPACITY,
};
use crate::metrics::{
    default_targets, optimum_performance, review_stats, training_set_recall, validation_review_pct,
    MetricsError, OptimumPerformance, RecallTarget, ReviewStats, ValidationStats,
};
use crate::model::{train, LinearModel, ModelError, TrainConfig};
use crate::scorer::{score_all, ScoreError, ScoreTable};
use crate::seed;
use crate::selection::{select, StrategyKind};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentKind {
    #[serde(rename = "type1")]
    TypeOne,
    #[serde(rename = "type2")]
    TypeTwo,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::TypeOne => "type1",
            Self::TypeTwo => "type2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub experiment: ExperimentKind,
    pub strategy: StrategyKind,
    pub batch_size: usize,
    pub seed_size: usize,
    pub validation_fraction: f64,
    pub recall_targets: Vec<RecallTarget>,
    pub master_seed: u64,
    /// Models trained at most; defaults to `ceil(universe / batch_size) + 1`.
    pub max_rounds: Option<usize>,
    pub vocabulary_capacity: usize,
    pub train: TrainConfig,
    /// Keep each round's score table in its record.
    #[serde(default)]
    pub keep_scores: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentKind::TypeTwo,
            strategy: StrategyKind::TopRanked,
            batch_size: 1000,
            seed_size: 1000,
            validation_fraction: 0.10,
            recall_targets: default_targets(),
            master_seed: 0,
            max_rounds: None,
            vocabulary_capacity: DEFAULT_VOCABULARY_CAPACITY,
            train: TrainConfig::default(),
            keep_scores: false,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidConfig(m.to_string()));
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.seed_size == 0 {
            return bad("seed_size must be at least 1");
        }
        if self.experiment == ExperimentKind::TypeOne
            && !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0)
        {
            return bad("validation_fraction must lie in (0, 1)");
        }
        if self.recall_targets.is_empty() {
            return bad("at least one recall target is required");
        }
        if self.max_rounds == Some(0) {
            return bad("max_rounds must be at least 1");
        }
        if self.vocabulary_capacity == 0 {
            return bad("vocabulary_capacity must be at least 1");
        }
        self.train.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundEvaluation {
    /// Type Two: cost over training plus remaining documents.
    Review(Vec<ReviewStats>),
    /// Type One: cost on the held-out validation set.
    Validation(Vec<ValidationStats>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    /// Documents that joined the training set to form this round's model
    /// (the random seed batch in round 0).
    pub added: Vec<usize>,
    pub training_size: usize,
    pub training_positives: usize,
    pub training_recall_pct: f64,
    pub evaluation: RoundEvaluation,
    /// The training set was single-class; scores were flat 0.5.
    pub fallback: bool,
    pub epochs: usize,
    /// Scores of the remaining documents (only with `keep_scores`).
    pub scores: Option<ScoreTable>,
    #[serde(skip)]
    pub duration: Duration,
}

impl RoundRecord {
    pub fn review_stats(&self) -> &[ReviewStats] {
        match &self.evaluation {
            RoundEvaluation::Review(s) => s,
            RoundEvaluation::Validation(_) => &[],
        }
    }

    pub fn validation_stats(&self) -> &[ValidationStats] {
        match &self.evaluation {
            RoundEvaluation::Validation(s) => s,
            RoundEvaluation::Review(_) => &[],
        }
    }

    /// Cost at `target`: review percentage (Type Two) or validation review
    /// percentage (Type One).
    pub fn cost_pct(&self, target: RecallTarget) -> Option<f64> {
        match &self.evaluation {
            RoundEvaluation::Review(s) => s
                .iter()
                .find(|r| r.recall_target == target)
                .map(|r| r.pct_requiring_review),
            RoundEvaluation::Validation(s) => s
                .iter()
                .find(|r| r.recall_target == target)
                .map(|r| r.validation_review_pct),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub experiment: ExperimentKind,
    pub strategy: StrategyKind,
    /// Documents active learning draws from (the pool in Type One).
    pub universe_size: usize,
    pub universe_positives: usize,
    /// Held-out set size (Type One only).
    pub validation_size: Option<usize>,
    pub records: Vec<RoundRecord>,
}

impl RunResult {
    /// Per-round review statistics at `target`, in the shape
    /// [`optimum_performance`] expects. Type One rounds report the
    /// validation review percentage.
    pub fn cost_series(&self, target: RecallTarget) -> Vec<ReviewStats> {
        self.records
            .iter()
            .filter_map(|r| match &r.evaluation {
                RoundEvaluation::Review(s) => s.iter().find(|s| s.recall_target == target).cloned(),
                RoundEvaluation::Validation(s) => {
                    s.iter()
                        .find(|s| s.recall_target == target)
                        .map(|v| ReviewStats {
                            round: r.round,
                            recall_target: target,
                            cutoff_score: v.cutoff_score,
                            docs_at_or_above_cutoff: v.docs_at_or_above_cutoff,
                            training_docs_reviewed: r.training_size,
                            pct_requiring_review: v.validation_review_pct,
                            training_set_recall: r.training_recall_pct,
                        })
                }
            })
            .collect()
    }

    pub fn optimum(&self, target: RecallTarget) -> Option<OptimumPerformance> {
        optimum_performance(&self.cost_series(target), self.strategy, target)
    }
}

/// Vectors and index for one set of documents under a shared vocabulary.
struct Featurized {
    labels: Vec<bool>,
    positives: usize,
    vectors: Vec<SparseVector>,
    index: InvertedIndex,
}

impl Featurized {
    fn new(corpus: &LabeledCorpus, vectors: Vec<SparseVector>, dimension: usize) -> Self {
        let index = build_index(&vectors, dimension);
        Self {
            labels: corpus.labels().to_vec(),
            positives: corpus.positives(),
            vectors,
            index,
        }
    }

    fn len(&self) -> usize {
        self.labels.len()
    }
}

/// Everything a run needs that does not depend on the strategy.
struct Prepared {
    universe: Featurized,
    validation: Option<Featurized>,
    dimension: usize,
}

fn prepare(corpus: &LabeledCorpus, config: &SimulationConfig) -> Result<Prepared, SimError> {
    config.validate()?;
    match config.experiment {
        ExperimentKind::TypeTwo => {
            let vocab = build_vocabulary(corpus, config.vocabulary_capacity)?;
            let vectors = vectorize_corpus(corpus, &vocab);
            Ok(Prepared {
                universe: Featurized::new(corpus, vectors, vocab.len()),
                validation: None,
                dimension: vocab.len(),
            })
        }
        ExperimentKind::TypeOne => {
            let (validation, pool) =
                split_validation(corpus, config.validation_fraction, config.master_seed)?;
            let vocab = build_vocabulary(&pool, config.vocabulary_capacity)?;
            let pool_vectors = vectorize_corpus(&pool, &vocab);
            let validation_vectors = vectorize_corpus(&validation, &vocab);
            Ok(Prepared {
                universe: Featurized::new(&pool, pool_vectors, vocab.len()),
                validation: Some(Featurized::new(
                    &validation,
                    validation_vectors,
                    vocab.len(),
                )),
                dimension: vocab.len(),
            })
        }
    }
}

fn flat_scores(round: usize, ordinals: &[usize]) -> ScoreTable {
    ScoreTable::new(round, ordinals.iter().map(|&o| (o, 0.5)).collect())
}

fn simulate(prepared: &Prepared, config: &SimulationConfig) -> Result<RunResult, SimError> {
    let universe = &prepared.universe;
    let n = universe.len();
    let max_rounds = config
        .max_rounds
        .unwrap_or_else(|| n.div_ceil(config.batch_size) + 1);

    // Each experiment draws its own seed batch; strategies within one share it.
    let stream = match config.experiment {
        ExperimentKind::TypeOne => 1,
        ExperimentKind::TypeTwo => 2,
    };
    let mut rng = seed::rng_for(config.master_seed, seed::SEED_BATCH, stream);
    let mut added: Vec<usize> = index::sample(&mut rng, n, config.seed_size.min(n)).into_vec();

    let mut in_training = vec![false; n];
    let mut training: Vec<usize> = Vec::with_capacity(n);
    let mut training_positives = 0;
    let mut model: Option<LinearModel> = None;
    let mut records = Vec::new();

    for round in 0.. {
        let started = Instant::now();
        for &o in &added {
            debug_assert!(!in_training[o]);
            in_training[o] = true;
            training.push(o);
            training_positives += usize::from(universe.labels[o]);
        }

        let features: Vec<&SparseVector> = training.iter().map(|&o| &universe.vectors[o]).collect();
        let labels: Vec<bool> = training.iter().map(|&o| universe.labels[o]).collect();
        let init = if config.train.warm_start {
            model.as_ref()
        } else {
            None
        };
        let (fallback, epochs) =
            match train(&features, &labels, prepared.dimension, &config.train, init) {
                Ok((m, report)) => {
                    model = Some(m);
                    (false, report.epochs)
                }
                Err(ModelError::SingleClass(_)) => {
                    model = None;
                    (true, 0)
                }
                Err(e) => return Err(e.into()),
            };

        let remaining: Vec<usize> = (0..n).filter(|&o| !in_training[o]).collect();
        let training_recall_pct = training_set_recall(training_positives, universe.positives);

        let (evaluation, scores) = match &prepared.validation {
            Some(validation) => {
                let all: Vec<usize> = (0..validation.len()).collect();
                let held_out = match &model {
                    Some(m) => score_all(m, &validation.index, &all, round)?,
                    None => flat_scores(round, &all),
                };
                let pairs: Vec<(f64, bool)> = held_out
                    .entries
                    .iter()
                    .map(|&(o, s)| (s, validation.labels[o]))
                    .collect();
                let stats = config
                    .recall_targets
                    .iter()
                    .map(|&t| validation_review_pct(&pairs, t))
                    .collect();
                let scores = match &model {
                    Some(m) => score_all(m, &universe.index, &remaining, round)?,
                    None => flat_scores(round, &remaining),
                };
                (RoundEvaluation::Validation(stats), scores)
            }
            None => {
                let scores = match &model {
                    Some(m) => score_all(m, &universe.index, &remaining, round)?,
                    None => flat_scores(round, &remaining),
                };
                let triples: Vec<(usize, f64, bool)> = scores
                    .entries
                    .iter()
                    .map(|&(o, s)| (o, s, universe.labels[o]))
                    .collect();
                let stats = config
                    .recall_targets
                    .iter()
                    .map(|&t| {
                        review_stats(
                            round,
                            t,
                            &triples,
                            training.len(),
                            training_positives,
                            n,
                            universe.positives,
                        )
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                (RoundEvaluation::Review(stats), scores)
            }
        };

        let done = remaining.is_empty()
            || round + 1 >= max_rounds
            || (config.experiment == ExperimentKind::TypeTwo
                && training_positives == universe.positives);

        let next = if done {
            Vec::new()
        } else {
            let kind = if fallback {
                StrategyKind::Random
            } else {
                config.strategy
            };
            select(kind, &scores, config.batch_size, config.master_seed).ordinals
        };

        records.push(RoundRecord {
            round,
            added: std::mem::replace(&mut added, next),
            training_size: training.len(),
            training_positives,
            training_recall_pct,
            evaluation,
            fallback,
            epochs,
            scores: config.keep_scores.then_some(scores),
            duration: started.elapsed(),
        });
        if done {
            break;
        }
    }

    Ok(RunResult {
        experiment: config.experiment,
        strategy: config.strategy,
        universe_size: n,
        universe_positives: universe.positives,
        validation_size: prepared.validation.as_ref().map(Featurized::len),
        records,
    })
}

/// Runs one simulation of the configured experiment and strategy.
pub fn run(corpus: &LabeledCorpus, config: &SimulationConfig) -> Result<RunResult, SimError> {
    simulate(&prepare(corpus, config)?, config)
}

pub fn run_type_one(
    corpus: &LabeledCorpus,
    config: &SimulationConfig,
) -> Result<RunResult, SimError> {
    run(
        corpus,
        &SimulationConfig {
            experiment: ExperimentKind::TypeOne,
            ..config.clone()
        },
    )
}

pub fn run_type_two(
    corpus: &LabeledCorpus,
    config: &SimulationConfig,
) -> Result<RunResult, SimError> {
    run(
        corpus,
        &SimulationConfig {
            experiment: ExperimentKind::TypeTwo,
            ..config.clone()
        },
    )
}

/// Optimum Performance rows and the underlying runs for several strategies
/// sharing one master seed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub experiment: ExperimentKind,
    pub recall_targets: Vec<RecallTarget>,
    /// One row per (strategy, target), strategies outermost.
    pub rows: Vec<OptimumPerformance>,
    pub runs: Vec<RunResult>,
}

impl RunSummary {
    pub fn row(&self, strategy: StrategyKind, target: RecallTarget) -> Option<&OptimumPerformance> {
        self.rows
            .iter()
            .find(|r| r.strategy == strategy && r.recall_target == target)
    }

    pub fn run(&self, strategy: StrategyKind) -> Option<&RunResult> {
        self.runs.iter().find(|r| r.strategy == strategy)
    }
}

/// Runs every strategy on the same corpus and master seed. Runs execute in
/// parallel; results keep the order of `strategies`.
pub fn run_matrix(
    corpus: &LabeledCorpus,
    base: &SimulationConfig,
    strategies: &[StrategyKind],
    targets: &[RecallTarget],
) -> Result<RunSummary, SimError> {
    if strategies.is_empty() {
        return Err(SimError::InvalidConfig(
            "at least one strategy is required".into(),
        ));
    }
    let config = SimulationConfig {
        recall_targets: targets.to_vec(),
        ..base.clone()
    };
    let prepared = prepare(corpus, &config)?;
    let runs = strategies
        .par_iter()
        .map(|&strategy| {
            simulate(
                &prepared,
                &SimulationConfig {
                    strategy,
                    ..config.clone()
                },
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    let rows = runs
        .iter()
        .flat_map(|run| targets.iter().filter_map(|&t| run.optimum(t)))
        .collect();
    Ok(RunSummary {
        experiment: config.experiment,
        recall_targets: targets.to_vec(),
        rows,
        runs,
    })
}
