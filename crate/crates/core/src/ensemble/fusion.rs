use log::debug;
use serde::{Deserialize, Serialize};

use super::weights::EnsembleWeights;
use crate::error::{Error, Result};

/// One predictor's output for one admission.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModalityPrediction {
    pub predictor: String,
    /// Per-code probabilities; empty when unavailable.
    pub probabilities: Vec<f64>,
    pub available: bool,
}

impl ModalityPrediction {
    pub fn available(predictor: impl Into<String>, probabilities: Vec<f64>) -> Self {
        ModalityPrediction {
            predictor: predictor.into(),
            probabilities,
            available: true,
        }
    }

    pub fn missing(predictor: impl Into<String>) -> Self {
        ModalityPrediction {
            predictor: predictor.into(),
            probabilities: Vec::new(),
            available: false,
        }
    }
}

/// Weighted sum of available predictions after moving each missing
/// predictor's weight to the fallback. Predictors registered in `weights`
/// but absent from `predictions` count as missing.
pub fn fuse(predictions: &[ModalityPrediction], weights: &EnsembleWeights) -> Result<Vec<f64>> {
    let mut slots: Vec<Option<&[f64]>> = vec![None; weights.len()];
    for p in predictions {
        let k = weights
            .index_of(&p.predictor)
            .ok_or_else(|| Error::InvalidArgument(format!("predictor {} has no ensemble weight", p.predictor)))?;
        if p.available {
            slots[k] = Some(&p.probabilities);
        }
    }
    let available: Vec<bool> = slots.iter().map(Option::is_some).collect();
    let alpha = weights.reallocate(&available)?;
    let c = slots[weights.fallback()].map_or(0, <[f64]>::len);
    if let Some(bad) = slots.iter().flatten().find(|p| p.len() != c) {
        return Err(Error::Shape(format!("prediction has {} codes, fallback has {c}", bad.len())));
    }
    if available.iter().any(|a| !a) {
        debug!("fusing with reallocated weights {alpha:?}");
    }
    let mut out = vec![0.0; c];
    for (probs, a) in slots.iter().zip(&alpha) {
        if let Some(probs) = probs {
            if *a == 0.0 {
                continue;
            }
            out.iter_mut().zip(probs.iter()).for_each(|(o, p)| *o += a * p);
        }
    }
    // Rounding can step a hair outside the unit interval.
    out.iter_mut().for_each(|p| *p = p.clamp(0.0, 1.0));
    Ok(out)
}

/// Code j is selected iff `probabilities[j] >= thresholds[j]`.
pub fn decide(probabilities: &[f64], thresholds: &[f64]) -> Result<Vec<bool>> {
    if probabilities.len() != thresholds.len() {
        return Err(Error::Shape(format!(
            "{} probabilities for {} thresholds",
            probabilities.len(),
            thresholds.len()
        )));
    }
    Ok(probabilities.iter().zip(thresholds).map(|(p, t)| p >= t).collect())
}
