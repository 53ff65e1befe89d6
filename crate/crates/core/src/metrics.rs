//! Recall-targeted review metrics.
//!
//! A cut-off score splits the documents not yet reviewed for training: every
//! remaining document scoring at or above the cut-off must be reviewed. The
//! cost of a round is the share of the whole corpus that ends up reviewed,
//! counting training documents. All percentages are kept at full precision;
//! only display formatting rounds.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::selection::StrategyKind;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("recall target {0} must lie in (0, 1]")]
    InvalidTarget(f64),
    #[error("{needed} positives needed but only {available} remain")]
    InfeasibleTarget { needed: usize, available: usize },
}

/// Fraction of all positives that must be found.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct RecallTarget(f64);

impl RecallTarget {
    pub fn new(fraction: f64) -> Result<Self, MetricsError> {
        if fraction > 0.0 && fraction <= 1.0 {
            Ok(Self(fraction))
        } else {
            Err(MetricsError::InvalidTarget(fraction))
        }
    }

    pub fn fraction(self) -> f64 {
        self.0
    }

    /// Percent label used in column names: `0.75` → `75`, `0.975` → `97.5`.
    pub fn label(self) -> String {
        let pct = self.0 * 100.0;
        let rounded = (pct * 1e6).round() / 1e6;
        format!("{rounded}")
    }

    /// Positives needed overall: `ceil(fraction × total_positives)`.
    ///
    /// Products within 1e-9 (relative) of an integer count as that integer so
    /// that e.g. `0.7 × 10` is 7, not 8.
    pub fn positives_needed(self, total_positives: usize) -> usize {
        let exact = self.0 * total_positives as f64;
        let nearest = exact.round();
        if (exact - nearest).abs() <= 1e-9 * exact.max(1.0) {
            nearest as usize
        } else {
            exact.ceil() as usize
        }
    }
}

impl TryFrom<f64> for RecallTarget {
    type Error = MetricsError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<RecallTarget> for f64 {
    fn from(t: RecallTarget) -> f64 {
        t.0
    }
}

impl fmt::Display for RecallTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}%", self.label())
    }
}

pub fn default_targets() -> Vec<RecallTarget> {
    vec![RecallTarget(0.75), RecallTarget(0.90)]
}

/// Percentage of positives already in the training set.
pub fn training_set_recall(training_positives: usize, total_positives: usize) -> f64 {
    100.0 * training_positives as f64 / total_positives as f64
}

/// Positives still to be found outside the training set:
/// `max(0, ceil(target × total_positives) − training_positives)`.
pub fn remaining_positives_needed(
    target: RecallTarget,
    total_positives: usize,
    training_positives: usize,
) -> usize {
    target
        .positives_needed(total_positives)
        .saturating_sub(training_positives)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    /// `None` when no further review is needed.
    pub score: Option<f64>,
    pub docs_at_or_above: usize,
    pub positives_at_or_above: usize,
}

impl Cutoff {
    pub const NONE: Cutoff = Cutoff {
        score: None,
        docs_at_or_above: 0,
        positives_at_or_above: 0,
    };
}

/// Largest score `c` such that at least `needed_positives` positive
/// documents score `≥ c`. Every document scoring `≥ c`, negatives tied at
/// `c` included, is counted as requiring review.
///
/// `remaining` holds `(ordinal, score, positive)` triples in any order.
pub fn find_cutoff(
    remaining: &[(usize, f64, bool)],
    needed_positives: usize,
) -> Result<Cutoff, MetricsError> {
    if needed_positives == 0 {
        return Ok(Cutoff::NONE);
    }
    let mut sorted: Vec<(f64, bool)> = remaining.iter().map(|&(_, s, l)| (s, l)).collect();
    sorted.sort_unstable_by(|a, b| b.0.total_cmp(&a.0));
    let mut docs = 0;
    let mut positives = 0;
    let mut i = 0;
    while i < sorted.len() {
        let score = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == score {
            docs += 1;
            positives += usize::from(sorted[i].1);
            i += 1;
        }
        if positives >= needed_positives {
            return Ok(Cutoff {
                score: Some(score),
                docs_at_or_above: docs,
                positives_at_or_above: positives,
            });
        }
    }
    Err(MetricsError::InfeasibleTarget {
        needed: needed_positives,
        available: positives,
    })
}

/// `100 × (docs at/above cut-off + training docs reviewed) / corpus size`.
pub fn pct_requiring_review(
    docs_at_or_above_cutoff: usize,
    training_docs_reviewed: usize,
    corpus_total: usize,
) -> f64 {
    100.0 * (docs_at_or_above_cutoff + training_docs_reviewed) as f64 / corpus_total as f64
}

/// Review cost of one round at one recall target, counted over the whole
/// corpus (training documents plus remaining documents).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewStats {
    pub round: usize,
    pub recall_target: RecallTarget,
    pub cutoff_score: Option<f64>,
    pub docs_at_or_above_cutoff: usize,
    pub training_docs_reviewed: usize,
    pub pct_requiring_review: f64,
    pub training_set_recall: f64,
}

/// Computes [`ReviewStats`] from the scores of the remaining documents.
pub fn review_stats(
    round: usize,
    target: RecallTarget,
    remaining: &[(usize, f64, bool)],
    training_size: usize,
    training_positives: usize,
    corpus_total: usize,
    total_positives: usize,
) -> Result<ReviewStats, MetricsError> {
    let needed = remaining_positives_needed(target, total_positives, training_positives);
    let cutoff = find_cutoff(remaining, needed)?;
    Ok(ReviewStats {
        round,
        recall_target: target,
        cutoff_score: cutoff.score,
        docs_at_or_above_cutoff: cutoff.docs_at_or_above,
        training_docs_reviewed: training_size,
        pct_requiring_review: pct_requiring_review(
            cutoff.docs_at_or_above,
            training_size,
            corpus_total,
        ),
        training_set_recall: training_set_recall(training_positives, total_positives),
    })
}

/// Held-out evaluation of one model at one recall target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationStats {
    pub recall_target: RecallTarget,
    pub cutoff_score: Option<f64>,
    pub docs_at_or_above_cutoff: usize,
    pub validation_review_pct: f64,
}

/// Share of a held-out set that must be reviewed to reach `target` recall
/// among its positives, using the largest feasible cut-off.
///
/// # Panics
///
/// If `validation` contains no positive documents.
pub fn validation_review_pct(validation: &[(f64, bool)], target: RecallTarget) -> ValidationStats {
    let positives = validation.iter().filter(|v| v.1).count();
    assert!(positives > 0, "validation set needs at least one positive");
    let triples: Vec<(usize, f64, bool)> = validation
        .iter()
        .enumerate()
        .map(|(i, &(s, l))| (i, s, l))
        .collect();
    let cutoff = find_cutoff(&triples, target.positives_needed(positives))
        .expect("target ≤ 1 is always feasible on the set itself");
    ValidationStats {
        recall_target: target,
        cutoff_score: cutoff.score,
        docs_at_or_above_cutoff: cutoff.docs_at_or_above,
        validation_review_pct: 100.0 * cutoff.docs_at_or_above as f64 / validation.len() as f64,
    }
}

/// Round at which a strategy reviews the fewest documents for a target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimumPerformance {
    pub strategy: StrategyKind,
    pub recall_target: RecallTarget,
    pub round: usize,
    pub training_set_recall: f64,
    pub pct_requiring_review: f64,
}

/// Earliest round attaining the minimum review percentage. Rounds for other
/// targets are ignored. Returns `None` when no round matches.
pub fn optimum_performance(
    rounds: &[ReviewStats],
    strategy: StrategyKind,
    target: RecallTarget,
) -> Option<OptimumPerformance> {
    let mut best: Option<&ReviewStats> = None;
    for r in rounds.iter().filter(|r| r.recall_target == target) {
        match best {
            Some(b) if r.pct_requiring_review >= b.pct_requiring_review => {}
            _ => best = Some(r),
        }
    }
    best.map(|b| OptimumPerformance {
        strategy,
        recall_target: target,
        round: b.round,
        training_set_recall: b.training_set_recall,
        pct_requiring_review: b.pct_requiring_review,
    })
}

/// One-decimal display used in reports.
pub fn display_pct(pct: f64) -> String {
    format!("{pct:.1}")
}
