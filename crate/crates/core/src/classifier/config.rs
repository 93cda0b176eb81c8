use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How label smoothing ε is chosen for each mini-batch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Smoothing {
    /// ε ~ Beta(α, α), resampled per batch.
    Beta { alpha: f64 },
    /// Constant ε; `0` disables smoothing.
    Fixed { epsilon: f64 },
}

impl Smoothing {
    pub fn off() -> Self {
        Smoothing::Fixed { epsilon: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextModelConfig {
    pub embedding_dim: usize,
    pub kernel_widths: Vec<usize>,
    pub feature_maps: usize,
    pub dropout: f64,
    pub l2: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub smoothing: Smoothing,
    /// Append guideline TF-IDF features before the output layer.
    pub tfidf_side_channel: bool,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TextModelConfig {
    fn default() -> Self {
        TextModelConfig {
            embedding_dim: 256,
            kernel_widths: vec![2, 3, 4],
            feature_maps: 128,
            dropout: 0.1,
            l2: 1e-4,
            learning_rate: 1e-3,
            batch_size: 32,
            smoothing: Smoothing::Beta { alpha: 0.3 },
            tfidf_side_channel: false,
            epochs: 20,
            seed: 0,
        }
    }
}

impl TextModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.embedding_dim == 0 || self.feature_maps == 0 || self.batch_size == 0 {
            return bad("embedding_dim, feature_maps and batch_size must be positive".into());
        }
        if self.kernel_widths.is_empty() || self.kernel_widths.contains(&0) {
            return bad(format!("invalid kernel widths {:?}", self.kernel_widths));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate < 1.0) {
            return bad(format!("learning rate {} outside (0, 1)", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.l2) {
            return bad(format!("l2 {} outside [0, 1)", self.l2));
        }
        match self.smoothing {
            Smoothing::Beta { alpha } if !(alpha > 0.0) => bad(format!("smoothing alpha {alpha} must be positive")),
            Smoothing::Fixed { epsilon } if !(0.0..=1.0).contains(&epsilon) => {
                bad(format!("smoothing epsilon {epsilon} outside [0, 1]"))
            }
            _ => Ok(()),
        }
    }

    pub fn max_kernel_width(&self) -> usize {
        self.kernel_widths.iter().copied().max().unwrap_or(1)
    }
}
