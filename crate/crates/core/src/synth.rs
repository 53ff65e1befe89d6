//! Synthetic labeled corpora with controllable richness and class signal.
//!
//! Tokens come from a shared Zipf background distribution over the whole
//! vocabulary. Each class also owns a disjoint "topic" block of rare tokens.
//! A document of class `c` draws each token from `c`'s topic block with
//! probability `u`, otherwise from the background, where `u` is drawn per
//! document uniformly from `[0, 2·separation]` and clamped to 1. With
//! `separation = 0` both classes share one distribution.

use rand::distributions::{Distribution, Uniform, WeightedIndex};
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Document, LabeledCorpus};
use crate::seed;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("richness {richness} of {total} documents gives {positives} positives; need between 1 and {total} − 1")]
    InfeasibleRichness {
        richness: f64,
        total: usize,
        positives: usize,
    },
    #[error("invalid synthetic corpus parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub total: usize,
    pub richness: f64,
    pub vocabulary_size: usize,
    /// Class signal strength in `[0, 1]`.
    pub separation: f64,
    /// Mean tokens per document; lengths are uniform in `[mean/2, 3·mean/2]`.
    pub mean_length: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            total: 10_000,
            richness: 0.3,
            vocabulary_size: 2_000,
            separation: 0.3,
            mean_length: 60,
            seed: 0,
        }
    }
}

impl SynthConfig {
    /// `round(richness × total)`, rounding half up.
    pub fn positives(&self) -> usize {
        (self.richness * self.total as f64 + 0.5).floor() as usize
    }
}

/// Pseudo-word for token `i`: consonant-vowel syllables, so the tokenizer
/// sees exactly one token per word.
fn token_name(i: usize) -> String {
    const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
    const VOWELS: &[u8] = b"aeiou";
    let mut n = i;
    let mut word = String::new();
    loop {
        let syllable = n % (CONSONANTS.len() * VOWELS.len());
        word.push(CONSONANTS[syllable / VOWELS.len()] as char);
        word.push(VOWELS[syllable % VOWELS.len()] as char);
        n /= CONSONANTS.len() * VOWELS.len();
        if n == 0 {
            break;
        }
        n -= 1;
    }
    word
}

pub fn generate(config: &SynthConfig) -> Result<LabeledCorpus, SynthError> {
    let positives = config.positives();
    if !(config.richness > 0.0 && config.richness < 1.0)
        || positives < 1
        || positives >= config.total
    {
        return Err(SynthError::InfeasibleRichness {
            richness: config.richness,
            total: config.total,
            positives,
        });
    }
    if config.vocabulary_size < 2 {
        return Err(SynthError::InvalidParameter(
            "vocabulary_size must be at least 2".into(),
        ));
    }
    if !(0.0..=1.0).contains(&config.separation) {
        return Err(SynthError::InvalidParameter(
            "separation must lie in [0, 1]".into(),
        ));
    }
    if config.mean_length == 0 {
        return Err(SynthError::InvalidParameter(
            "mean_length must be positive".into(),
        ));
    }

    let v = config.vocabulary_size;
    let words: Vec<String> = (0..v).map(token_name).collect();
    let background =
        WeightedIndex::new((0..v).map(|r| 1.0 / (r + 1) as f64)).expect("positive weights");
    let topic = (v / 20).max(1);
    let positive_topic = Uniform::new(v - 2 * topic.min(v / 2), v - topic.min(v / 2));
    let negative_topic = Uniform::new(v - topic.min(v / 2), v);
    let lengths =
        Uniform::new_inclusive((config.mean_length / 2).max(1), config.mean_length * 3 / 2);

    let mut rng = seed::rng_for(config.seed, seed::SYNTH, 0);
    let mut labels = vec![false; config.total];
    for i in index::sample(&mut rng, config.total, positives) {
        labels[i] = true;
    }

    let mut documents = Vec::with_capacity(config.total);
    for (i, &positive) in labels.iter().enumerate() {
        let strength = (config.separation * rng.gen_range(0.0..2.0)).min(1.0);
        let own_topic = if positive {
            &positive_topic
        } else {
            &negative_topic
        };
        let len = lengths.sample(&mut rng);
        let mut text = String::with_capacity(len * 5);
        for t in 0..len {
            let token = if strength > 0.0 && rng.gen_bool(strength) {
                own_topic.sample(&mut rng)
            } else {
                background.sample(&mut rng)
            };
            if t > 0 {
                text.push(' ');
            }
            text.push_str(&words[token]);
        }
        documents.push(Document {
            id: format!("doc-{i:06}"),
            text,
        });
    }
    Ok(LabeledCorpus::new(documents, labels).expect("generated corpus satisfies invariants"))
}
