//! Term-at-a-time batch scoring over an inverted index.
//!
//! Margins for every document are accumulated in a dense array by walking the
//! postings of features `0..V` in ascending order, so each document sees
//! exactly the same sequence of floating-point additions as
//! [`LinearModel::margin`](crate::model::LinearModel::margin) applied to its
//! own vector. Large universes are sharded by document-ordinal range; each
//! shard owns a disjoint slice of the margin array.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::InvertedIndex;
use crate::model::{sigmoid, LinearModel};

/// Universes smaller than this are scored on the calling thread.
const SHARD_SIZE: usize = 8192;

#[derive(Debug, Error, PartialEq)]
pub enum ScoreError {
    #[error("document {ordinal} is outside the index universe of {universe} documents")]
    UnknownDocument { ordinal: usize, universe: usize },
    #[error("index has {index} features but the model has {model}")]
    DimensionMismatch { index: usize, model: usize },
}

/// Scores for a set of documents produced by one round's model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub round: usize,
    /// `(document ordinal, score)` in ascending ordinal order.
    pub entries: Vec<(usize, f64)>,
    /// Postings visited while producing the table.
    pub postings_touched: u64,
}

impl ScoreTable {
    pub fn new(round: usize, mut entries: Vec<(usize, f64)>) -> Self {
        entries.sort_unstable_by_key(|e| e.0);
        Self {
            round,
            entries,
            postings_touched: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ordinals(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|e| e.0)
    }
}

/// Scores every document in `targets` with `model`.
///
/// Targets may be in any order and the result is sorted by ordinal;
/// duplicates collapse.
pub fn score_all(
    model: &LinearModel,
    index: &InvertedIndex,
    targets: &[usize],
    round: usize,
) -> Result<ScoreTable, ScoreError> {
    let universe = index.num_documents();
    if let Some(&ordinal) = targets.iter().find(|&&t| t >= universe) {
        return Err(ScoreError::UnknownDocument { ordinal, universe });
    }
    if index.dimension() > model.dimension() {
        return Err(ScoreError::DimensionMismatch {
            index: index.dimension(),
            model: model.dimension(),
        });
    }
    let mut sorted = targets.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.is_empty() {
        return Ok(ScoreTable::new(round, Vec::new()));
    }

    let mut margins = vec![model.bias(); universe];
    let touched: u64 = if universe <= SHARD_SIZE {
        accumulate(model, index, 0, &mut margins)
    } else {
        margins
            .par_chunks_mut(SHARD_SIZE)
            .enumerate()
            .map(|(shard, chunk)| accumulate(model, index, shard * SHARD_SIZE, chunk))
            .sum()
    };

    let entries = sorted
        .into_iter()
        .map(|d| (d, sigmoid(margins[d])))
        .collect();
    Ok(ScoreTable {
        round,
        entries,
        postings_touched: touched,
    })
}

/// Adds every posting weight times its feature weight into `margins`, which
/// covers ordinals `offset..offset + margins.len()`.
fn accumulate(
    model: &LinearModel,
    index: &InvertedIndex,
    offset: usize,
    margins: &mut [f64],
) -> u64 {
    let end = offset + margins.len();
    let whole = offset == 0 && end == index.num_documents();
    let weights = model.weights();
    let mut touched = 0u64;
    for (feature, &w) in weights.iter().enumerate().take(index.dimension()) {
        let mut postings = index.postings(feature);
        if !whole {
            let lo = postings.partition_point(|p| p.0 < offset);
            let hi = postings.partition_point(|p| p.0 < end);
            postings = &postings[lo..hi];
        }
        touched += postings.len() as u64;
        for &(doc, x) in postings {
            margins[doc - offset] += w * x;
        }
    }
    touched
}
