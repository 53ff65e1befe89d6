//! Simulation harness for active-learning document review.
//!
//! The pipeline: a [`corpus::LabeledCorpus`] is turned into unit-length
//! bag-of-words vectors ([`features`]), a logistic-regression [`model`] is
//! trained on the current training set, every remaining document is scored
//! term-at-a-time over an inverted index ([`scorer`]), the next training
//! batch is picked by one of three [`selection`] strategies, and each round
//! is evaluated with recall-targeted review metrics ([`metrics`]). The
//! [`sim`] module drives the round loop.

pub mod corpus;
pub mod features;
pub mod metrics;
pub mod model;
pub mod scorer;
pub mod seed;
pub mod selection;
pub mod sim;
pub mod synth;

pub use corpus::{Document, LabeledCorpus};
pub use features::{InvertedIndex, SparseVector, Vocabulary};
pub use metrics::{OptimumPerformance, RecallTarget, ReviewStats};
pub use model::{LinearModel, TrainConfig};
pub use scorer::ScoreTable;
pub use selection::{Batch, StrategyKind};
pub use sim::{ExperimentKind, RoundRecord, RunResult, RunSummary, SimulationConfig};
