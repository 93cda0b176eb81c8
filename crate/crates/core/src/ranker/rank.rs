use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::RankerConfig;
use super::encoder::{PhraseEncoder, WordVocab};
use super::synonyms::LabeledPhrase;
use super::triplet::euclidean;
use crate::error::{Error, Result};
use crate::nn::{read_checkpoint, write_checkpoint};

pub const RANKER_CHECKPOINT: &str = "model.ckpt";

/// `1 - (d - min) / (max - min)` per code; all 0.5 when every distance is
/// equal.
pub fn min_max_scores(distances: &[f64]) -> Vec<f64> {
    let min = distances.iter().copied().fold(f64::INFINITY, f64::min);
    let max = distances.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    if !(range > 0.0) {
        return vec![0.5; distances.len()];
    }
    distances.iter().map(|d| 1.0 - (d - min) / range).collect()
}

/// Mean over phrases of each phrase's min-max score vector.
pub fn scores_from_embeddings(phrases: &[Vec<f64>], codes: &[Vec<f64>]) -> Result<Vec<f64>> {
    if phrases.is_empty() {
        return Err(Error::InvalidArgument("no diagnosis phrases to rank".into()));
    }
    let mut total = vec![0.0; codes.len()];
    for p in phrases {
        let d: Vec<f64> = codes.iter().map(|c| euclidean(p, c)).collect();
        total.iter_mut().zip(min_max_scores(&d)).for_each(|(t, s)| *t += s);
    }
    let n = phrases.len() as f64;
    Ok(total.into_iter().map(|t| t / n).collect())
}

#[derive(Serialize, Deserialize)]
struct CheckpointConfig {
    kind: String,
    schema_version: u32,
    config: RankerConfig,
    vocabulary: Vec<String>,
    codes: Vec<String>,
    descriptions: Vec<String>,
}

/// A trained encoder with cached code-description embeddings.
#[derive(Clone, Debug)]
pub struct DiagnosisRanker {
    pub encoder: PhraseEncoder,
    pub codes: Vec<String>,
    pub descriptions: Vec<String>,
    code_embeddings: Vec<Vec<f64>>,
}

impl DiagnosisRanker {
    pub fn new(encoder: PhraseEncoder, codes: Vec<String>, descriptions: Vec<String>) -> Result<Self> {
        if codes.len() != descriptions.len() || codes.is_empty() {
            return Err(Error::InvalidArgument("need one description per code".into()));
        }
        let code_embeddings = descriptions.iter().map(|d| encoder.encode(d)).collect::<Result<_>>()?;
        Ok(DiagnosisRanker {
            encoder,
            codes,
            descriptions,
            code_embeddings,
        })
    }

    pub fn num_codes(&self) -> usize {
        self.codes.len()
    }

    pub fn code_embeddings(&self) -> &[Vec<f64>] {
        &self.code_embeddings
    }

    /// Per-code scores in [0, 1]. Phrases without tokens are ignored; an
    /// error is returned when none remain.
    pub fn rank_codes<S: AsRef<str>>(&self, phrases: &[S]) -> Result<Vec<f64>> {
        let embs: Vec<Vec<f64>> = phrases.iter().filter_map(|p| self.encoder.encode(p.as_ref()).ok()).collect();
        scores_from_embeddings(&embs, &self.code_embeddings)
    }

    /// Index of the nearest code description.
    pub fn top1(&self, phrase: &str) -> Result<usize> {
        let e = self.encoder.encode(phrase)?;
        let mut best = (f64::INFINITY, 0);
        for (j, c) in self.code_embeddings.iter().enumerate() {
            let d = euclidean(&e, c);
            if d < best.0 {
                best = (d, j);
            }
        }
        Ok(best.1)
    }

    /// Fraction of phrases whose own code is the nearest description.
    pub fn top1_accuracy(&self, phrases: &[LabeledPhrase]) -> Result<f64> {
        if phrases.is_empty() {
            return Err(Error::InvalidArgument("no phrases to score".into()));
        }
        let mut hits = 0;
        for p in phrases {
            let j = self.top1(&p.phrase)?;
            if self.codes[j] == p.code {
                hits += 1;
            }
        }
        Ok(hits as f64 / phrases.len() as f64)
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let config = CheckpointConfig {
            kind: "ranker".into(),
            schema_version: crate::SCHEMA_VERSION,
            config: self.encoder.config().clone(),
            vocabulary: self.encoder.vocab().tokens().to_vec(),
            codes: self.codes.clone(),
            descriptions: self.descriptions.clone(),
        };
        write_checkpoint(
            dir.as_ref().join(RANKER_CHECKPOINT),
            &serde_json::to_value(&config)?,
            self.encoder.params(),
        )
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let ck = read_checkpoint(dir.as_ref().join(RANKER_CHECKPOINT))?;
        let config: CheckpointConfig = serde_json::from_value(ck.config)?;
        if config.kind != "ranker" {
            return Err(Error::Data(format!("checkpoint kind {} is not ranker", config.kind)));
        }
        let encoder = PhraseEncoder::from_parts(config.config, WordVocab::from_tokens(config.vocabulary), ck.params)?;
        DiagnosisRanker::new(encoder, config.codes, config.descriptions)
    }
}
