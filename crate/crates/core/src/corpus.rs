//! Labeled document corpora: loading, validation, and the validation split.

use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::index;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error reading corpus")]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("document id must be nonempty (document {ordinal})")]
    EmptyId { ordinal: usize },
    #[error("duplicate document id `{0}`")]
    DuplicateId(String),
    #[error("corpus has no positive documents")]
    NoPositives,
    #[error("corpus has no negative documents")]
    NoNegatives,
    #[error("corpus needs at least 2 documents, found {0}")]
    TooSmall(usize),
    #[error("validation fraction {0} must lie strictly between 0 and 1")]
    InvalidFraction(f64),
    #[error("degenerate split: {0}")]
    DegenerateSplit(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub text: String,
}

/// One JSONL line of the corpus file.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    id: String,
    text: String,
    label: u8,
}

/// Documents paired with binary oracle labels (`true` = responsive).
///
/// Always holds at least two documents, at least one of each class, and
/// unique nonempty ids. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCorpus {
    documents: Vec<Document>,
    labels: Vec<bool>,
    positives: usize,
}

impl LabeledCorpus {
    pub fn new(documents: Vec<Document>, labels: Vec<bool>) -> Result<Self, CorpusError> {
        assert_eq!(documents.len(), labels.len(), "one label per document");
        if documents.len() < 2 {
            return Err(CorpusError::TooSmall(documents.len()));
        }
        let mut seen = HashSet::with_capacity(documents.len());
        for (ordinal, doc) in documents.iter().enumerate() {
            if doc.id.is_empty() {
                return Err(CorpusError::EmptyId { ordinal });
            }
            if !seen.insert(doc.id.as_str()) {
                return Err(CorpusError::DuplicateId(doc.id.clone()));
            }
        }
        let positives = labels.iter().filter(|&&l| l).count();
        if positives == 0 {
            return Err(CorpusError::NoPositives);
        }
        if positives == labels.len() {
            return Err(CorpusError::NoNegatives);
        }
        Ok(Self {
            documents,
            labels,
            positives,
        })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn label(&self, ordinal: usize) -> bool {
        self.labels[ordinal]
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn total(&self) -> usize {
        self.documents.len()
    }

    pub fn positives(&self) -> usize {
        self.positives
    }

    /// Fraction of positive documents.
    pub fn richness(&self) -> f64 {
        richness(self.positives, self.total())
    }

    /// Builds a corpus from a subset of ordinals, preserving corpus order.
    pub fn subset(&self, ordinals: &[usize]) -> Result<Self, CorpusError> {
        let documents = ordinals
            .iter()
            .map(|&o| self.documents[o].clone())
            .collect();
        let labels = ordinals.iter().map(|&o| self.labels[o]).collect();
        Self::new(documents, labels)
    }

    /// Reads a JSONL corpus (`id`, `text`, `label` per line).
    pub fn load(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        Self::from_reader(BufReader::new(File::open(path)?))
    }

    pub fn from_reader(reader: impl BufRead) -> Result<Self, CorpusError> {
        let mut documents = Vec::new();
        let mut labels = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let record: Record =
                serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            let label = match record.label {
                0 => false,
                1 => true,
                other => {
                    return Err(CorpusError::Malformed {
                        line: i + 1,
                        message: format!("label must be 0 or 1, got {other}"),
                    })
                }
            };
            documents.push(Document {
                id: record.id,
                text: record.text,
            });
            labels.push(label);
        }
        Self::new(documents, labels)
    }

    /// Writes the corpus back out in the JSONL input format.
    pub fn write_jsonl(&self, mut w: impl Write) -> io::Result<()> {
        for (doc, &label) in self.documents.iter().zip(&self.labels) {
            let record = Record {
                id: doc.id.clone(),
                text: doc.text.clone(),
                label: u8::from(label),
            };
            serde_json::to_writer(&mut w, &record)?;
            w.write_all(b"\n")?;
        }
        w.flush()
    }
}

pub fn richness(positives: usize, total: usize) -> f64 {
    positives as f64 / total as f64
}

/// Validation set size for `fraction` of `total`, rounding half up.
pub fn validation_size(total: usize, fraction: f64) -> usize {
    (fraction * total as f64 + 0.5).floor() as usize
}

/// Draws a uniform random validation set without replacement.
///
/// Returns `(validation, pool)`; both keep the corpus order. A split that
/// leaves either side without both classes is an error so the caller can
/// retry with another seed.
pub fn split_validation(
    corpus: &LabeledCorpus,
    fraction: f64,
    rng_seed: u64,
) -> Result<(LabeledCorpus, LabeledCorpus), CorpusError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(CorpusError::InvalidFraction(fraction));
    }
    let total = corpus.total();
    let size = validation_size(total, fraction);
    if size == 0 || size >= total {
        return Err(CorpusError::DegenerateSplit(format!(
            "validation size {size} out of {total} documents"
        )));
    }
    let mut rng = seed::rng_for(rng_seed, seed::SPLIT, 0);
    let mut in_validation = vec![false; total];
    for i in index::sample(&mut rng, total, size) {
        in_validation[i] = true;
    }
    let (validation, pool): (Vec<usize>, Vec<usize>) = (0..total).partition(|&i| in_validation[i]);
    let wrap = |side: &str, e: CorpusError| match e {
        CorpusError::NoPositives | CorpusError::NoNegatives | CorpusError::TooSmall(_) => {
            CorpusError::DegenerateSplit(format!("{side}: {e}"))
        }
        other => other,
    };
    let validation = corpus
        .subset(&validation)
        .map_err(|e| wrap("validation", e))?;
    let pool = corpus.subset(&pool).map_err(|e| wrap("pool", e))?;
    Ok((validation, pool))
}
