use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankerConfig {
    pub char_embedding_dim: usize,
    pub char_kernel_widths: Vec<usize>,
    pub char_filters: usize,
    pub word_embedding_dim: usize,
    /// Hidden units per LSTM direction.
    pub hidden_units: usize,
    pub margin: f64,
    /// Token-length range of mined candidate n-grams.
    pub ngram_range: [usize; 2],
    pub negatives_per_anchor: usize,
    /// Probability that a triplet's negative is another code's description
    /// instead of a mined string.
    pub description_negative_rate: f64,
    /// Probability of replacing a word id with UNK during training.
    pub word_dropout: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Optional word2vec text-format vectors for the word embedding.
    pub pretrained_embeddings: Option<PathBuf>,
    pub seed: u64,
}

impl Default for RankerConfig {
    fn default() -> Self {
        RankerConfig {
            char_embedding_dim: 50,
            char_kernel_widths: vec![2, 3, 4],
            char_filters: 25,
            word_embedding_dim: 100,
            hidden_units: 100,
            margin: 1.0,
            ngram_range: [2, 5],
            negatives_per_anchor: 5,
            description_negative_rate: 0.5,
            word_dropout: 0.1,
            learning_rate: 1e-3,
            batch_size: 16,
            epochs: 200,
            pretrained_embeddings: None,
            seed: 0,
        }
    }
}

impl RankerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return bad(format!("margin must be positive, got {}", self.margin));
        }
        if self.char_embedding_dim == 0
            || self.char_filters == 0
            || self.word_embedding_dim == 0
            || self.hidden_units == 0
            || self.batch_size == 0
        {
            return bad("ranker dimensions and batch size must be positive".into());
        }
        if self.char_kernel_widths.is_empty() || self.char_kernel_widths.contains(&0) {
            return bad(format!("invalid char kernel widths {:?}", self.char_kernel_widths));
        }
        let [lo, hi] = self.ngram_range;
        if lo == 0 || lo > hi {
            return bad(format!("invalid n-gram range {:?}", self.ngram_range));
        }
        if self.negatives_per_anchor == 0 {
            return bad("negatives_per_anchor must be positive".into());
        }
        for (name, p) in [
            ("description_negative_rate", self.description_negative_rate),
            ("word_dropout", self.word_dropout),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} {p} outside [0, 1]"));
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate < 1.0) {
            return bad(format!("learning rate {} outside (0, 1)", self.learning_rate));
        }
        Ok(())
    }

    /// Embedding width: both LSTM directions.
    pub fn output_dim(&self) -> usize {
        2 * self.hidden_units
    }
}
