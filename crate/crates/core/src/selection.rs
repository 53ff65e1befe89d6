//! Training-batch selection strategies.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::scorer::ScoreTable;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    TopRanked,
    Uncertain,
    Random,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 3] = [Self::TopRanked, Self::Uncertain, Self::Random];

    pub fn name(self) -> &'static str {
        match self {
            Self::TopRanked => "top-ranked",
            Self::Uncertain => "uncertain",
            Self::Random => "random",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Self::TopRanked => "Top-Ranked",
            Self::Uncertain => "Uncertain",
            Self::Random => "Random",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown strategy `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Batch {
    pub round: usize,
    pub ordinals: Vec<usize>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.ordinals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordinals.is_empty()
    }
}

/// Takes the `n` smallest entries under `cmp`, in order.
fn take_smallest(
    scores: &ScoreTable,
    n: usize,
    cmp: impl Fn(&(usize, f64), &(usize, f64)) -> Ordering,
) -> Vec<usize> {
    let mut entries = scores.entries.clone();
    let n = n.min(entries.len());
    if n == 0 {
        return Vec::new();
    }
    if n < entries.len() {
        entries.select_nth_unstable_by(n - 1, &cmp);
        entries.truncate(n);
    }
    entries.sort_unstable_by(&cmp);
    entries.into_iter().map(|e| e.0).collect()
}

/// The `n` highest scores; ties go to the lower ordinal.
pub fn select_top_ranked(scores: &ScoreTable, n: usize) -> Batch {
    let ordinals = take_smallest(scores, n, |a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Batch {
        round: scores.round,
        ordinals,
    }
}

/// The `n` scores nearest 0.5; equal distances go to the lower score, then
/// the lower ordinal.
pub fn select_uncertain(scores: &ScoreTable, n: usize) -> Batch {
    let ordinals = take_smallest(scores, n, |a, b| {
        (a.1 - 0.5)
            .abs()
            .total_cmp(&(b.1 - 0.5).abs())
            .then(a.1.total_cmp(&b.1))
            .then(a.0.cmp(&b.0))
    });
    Batch {
        round: scores.round,
        ordinals,
    }
}

/// Uniform sample of `min(n, |pool|)` documents without replacement, fully
/// determined by `(rng_seed, round)` and the pool's contents.
pub fn select_random(pool: &[usize], n: usize, rng_seed: u64, round: usize) -> Batch {
    let mut sorted = pool.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let k = n.min(sorted.len());
    let mut rng = seed::rng_for(rng_seed, seed::STRATEGY, round as u64);
    let ordinals = index::sample(&mut rng, sorted.len(), k)
        .into_iter()
        .map(|i| sorted[i])
        .collect();
    Batch { round, ordinals }
}

/// Dispatches on `kind`; `Random` draws from the table's documents.
pub fn select(kind: StrategyKind, scores: &ScoreTable, n: usize, rng_seed: u64) -> Batch {
    match kind {
        StrategyKind::TopRanked => select_top_ranked(scores, n),
        StrategyKind::Uncertain => select_uncertain(scores, n),
        StrategyKind::Random => {
            let pool: Vec<usize> = scores.ordinals().collect();
            select_random(&pool, n, rng_seed, scores.round)
        }
    }
}
