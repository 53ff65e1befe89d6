//! Bag-of-words feature space: tokenizer, document-frequency vocabulary,
//! unit-length term-frequency vectors, and the inverted index used for
//! batch scoring.

use std::collections::HashMap;
use std::io::{self, Write};

use thiserror::Error;

use crate::corpus::LabeledCorpus;

/// Default vocabulary budget.
pub const DEFAULT_VOCABULARY_CAPACITY: usize = 20_000;

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("vocabulary capacity must be at least 1")]
    ZeroCapacity,
    #[error("corpus contains no tokens")]
    EmptyVocabulary,
    #[error("sparse vector indices must be strictly increasing (at position {0})")]
    UnsortedIndices(usize),
    #[error("sparse vector weights must be finite and nonzero (at position {0})")]
    InvalidWeight(usize),
}

/// Lowercased maximal runs of Unicode letters and digits.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    document_frequency: Vec<usize>,
    lookup: HashMap<String, usize>,
    capacity: usize,
}

impl Vocabulary {
    /// Keeps the `capacity` tokens with the highest document frequency.
    /// Ties go to the lexicographically smaller token; indices follow that
    /// same order.
    pub fn build<'a>(
        texts: impl IntoIterator<Item = &'a str>,
        capacity: usize,
    ) -> Result<Self, FeatureError> {
        if capacity == 0 {
            return Err(FeatureError::ZeroCapacity);
        }
        let mut df: HashMap<String, usize> = HashMap::new();
        for text in texts {
            let mut tokens = tokenize(text);
            tokens.sort_unstable();
            tokens.dedup();
            for token in tokens {
                *df.entry(token).or_default() += 1;
            }
        }
        if df.is_empty() {
            return Err(FeatureError::EmptyVocabulary);
        }
        let mut ranked: Vec<(String, usize)> = df.into_iter().collect();
        ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(capacity);
        let lookup = ranked
            .iter()
            .enumerate()
            .map(|(i, (t, _))| (t.clone(), i))
            .collect();
        let (tokens, document_frequency) = ranked.into_iter().unzip();
        Ok(Self {
            tokens,
            document_frequency,
            lookup,
            capacity,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.lookup.get(token).copied()
    }

    pub fn token(&self, index: usize) -> &str {
        &self.tokens[index]
    }

    pub fn document_frequency(&self, index: usize) -> usize {
        self.document_frequency[index]
    }

    /// Debug dump: `token<TAB>index<TAB>df`, one line per feature.
    pub fn write_tsv(&self, mut w: impl Write) -> io::Result<()> {
        for (i, (token, df)) in self.tokens.iter().zip(&self.document_frequency).enumerate() {
            writeln!(w, "{token}\t{i}\t{df}")?;
        }
        Ok(())
    }
}

pub fn build_vocabulary(
    corpus: &LabeledCorpus,
    capacity: usize,
) -> Result<Vocabulary, FeatureError> {
    Vocabulary::build(corpus.documents().iter().map(|d| d.text.as_str()), capacity)
}

/// Sparse feature vector with strictly increasing indices and nonzero weights.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    indices: Vec<usize>,
    weights: Vec<f64>,
}

impl SparseVector {
    pub fn new(indices: Vec<usize>, weights: Vec<f64>) -> Result<Self, FeatureError> {
        assert_eq!(indices.len(), weights.len());
        if let Some(i) = indices.windows(2).position(|w| w[0] >= w[1]) {
            return Err(FeatureError::UnsortedIndices(i + 1));
        }
        if let Some(i) = weights.iter().position(|w| *w == 0.0 || !w.is_finite()) {
            return Err(FeatureError::InvalidWeight(i));
        }
        Ok(Self { indices, weights })
    }

    pub fn from_pairs(pairs: &[(usize, f64)]) -> Result<Self, FeatureError> {
        let (indices, weights) = pairs.iter().copied().unzip();
        Self::new(indices, weights)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .copied()
            .zip(self.weights.iter().copied())
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// One past the largest index, or 0 for an empty vector.
    pub fn dimension_hint(&self) -> usize {
        self.indices.last().map_or(0, |i| i + 1)
    }

    pub fn l2_norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }
}

/// Term counts of in-vocabulary tokens, scaled to unit L2 norm.
pub fn vectorize(text: &str, vocab: &Vocabulary) -> SparseVector {
    let mut counts: HashMap<usize, u32> = HashMap::new();
    for token in tokenize(text) {
        if let Some(i) = vocab.index_of(&token) {
            *counts.entry(i).or_default() += 1;
        }
    }
    let mut pairs: Vec<(usize, f64)> = counts.into_iter().map(|(i, c)| (i, f64::from(c))).collect();
    pairs.sort_unstable_by_key(|p| p.0);
    let norm = pairs.iter().map(|(_, c)| c * c).sum::<f64>().sqrt();
    let (indices, weights) = pairs.into_iter().map(|(i, c)| (i, c / norm)).unzip();
    SparseVector { indices, weights }
}

pub fn vectorize_corpus(corpus: &LabeledCorpus, vocab: &Vocabulary) -> Vec<SparseVector> {
    use rayon::prelude::*;
    corpus
        .documents()
        .par_iter()
        .map(|d| vectorize(&d.text, vocab))
        .collect()
}

/// Feature → postings of `(document ordinal, weight)`, sorted by ordinal.
#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    postings: Vec<Vec<(usize, f64)>>,
    num_documents: usize,
}

impl InvertedIndex {
    /// Transposes the document-vector matrix. `dimension` is the feature
    /// count; it grows to cover any larger index present in `vectors`.
    pub fn build(vectors: &[SparseVector], dimension: usize) -> Self {
        let dimension = vectors
            .iter()
            .map(SparseVector::dimension_hint)
            .fold(dimension, usize::max);
        let mut postings = vec![Vec::new(); dimension];
        for (doc, v) in vectors.iter().enumerate() {
            for (f, w) in v.iter() {
                postings[f].push((doc, w));
            }
        }
        Self {
            postings,
            num_documents: vectors.len(),
        }
    }

    pub fn postings(&self, feature: usize) -> &[(usize, f64)] {
        &self.postings[feature]
    }

    pub fn dimension(&self) -> usize {
        self.postings.len()
    }

    pub fn num_documents(&self) -> usize {
        self.num_documents
    }

    pub fn total_postings(&self) -> usize {
        self.postings.iter().map(Vec::len).sum()
    }
}

pub fn build_index(vectors: &[SparseVector], dimension: usize) -> InvertedIndex {
    InvertedIndex::build(vectors, dimension)
}
