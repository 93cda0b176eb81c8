use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TEXT_PREDICTOR: &str = "text";
pub const RANKER_PREDICTOR: &str = "ranker";
pub const TABULAR_PREDICTOR: &str = "tabular";

const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct PredictorWeight {
    id: String,
    weight: f64,
    #[serde(default)]
    fallback: bool,
}

/// Non-negative weights summing to one over registered predictors. The
/// fallback predictor (the text model) receives the weight of any
/// predictor missing for an admission.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<PredictorWeight>", into = "Vec<PredictorWeight>")]
pub struct EnsembleWeights {
    predictors: Vec<String>,
    weights: Vec<f64>,
    fallback: usize,
}

impl TryFrom<Vec<PredictorWeight>> for EnsembleWeights {
    type Error = Error;

    fn try_from(entries: Vec<PredictorWeight>) -> Result<Self> {
        let fallbacks: Vec<usize> = entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.fallback)
            .map(|(i, _)| i)
            .collect();
        if fallbacks.len() != 1 {
            return Err(Error::Data(format!(
                "ensemble weights must mark exactly one fallback, found {}",
                fallbacks.len()
            )));
        }
        EnsembleWeights::new(
            entries.iter().map(|e| e.id.clone()).collect(),
            entries.iter().map(|e| e.weight).collect(),
            fallbacks[0],
        )
    }
}

impl From<EnsembleWeights> for Vec<PredictorWeight> {
    fn from(w: EnsembleWeights) -> Self {
        w.predictors
            .into_iter()
            .zip(w.weights)
            .enumerate()
            .map(|(i, (id, weight))| PredictorWeight {
                id,
                weight,
                fallback: i == w.fallback,
            })
            .collect()
    }
}

impl EnsembleWeights {
    pub fn new(predictors: Vec<String>, weights: Vec<f64>, fallback: usize) -> Result<Self> {
        if predictors.is_empty() || predictors.len() != weights.len() {
            return Err(Error::InvalidArgument(format!(
                "{} predictors with {} weights",
                predictors.len(),
                weights.len()
            )));
        }
        if fallback >= predictors.len() {
            return Err(Error::InvalidArgument(format!("fallback index {fallback} out of range")));
        }
        let mut seen = predictors.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != predictors.len() {
            return Err(Error::InvalidArgument("predictor ids must be unique".into()));
        }
        check_simplex(&weights)?;
        Ok(EnsembleWeights {
            predictors,
            weights,
            fallback,
        })
    }

    /// All weight on the fallback.
    pub fn fallback_only(predictors: Vec<String>, fallback: usize) -> Result<Self> {
        let weights = (0..predictors.len()).map(|i| if i == fallback { 1.0 } else { 0.0 }).collect();
        Self::new(predictors, weights, fallback)
    }

    pub fn predictors(&self) -> &[String] {
        &self.predictors
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn fallback(&self) -> usize {
        self.fallback
    }

    pub fn fallback_id(&self) -> &str {
        &self.predictors[self.fallback]
    }

    pub fn len(&self) -> usize {
        self.predictors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictors.is_empty()
    }

    pub fn index_of(&self, predictor: &str) -> Option<usize> {
        self.predictors.iter().position(|p| p == predictor)
    }

    pub fn weight_of(&self, predictor: &str) -> Option<f64> {
        self.index_of(predictor).map(|i| self.weights[i])
    }

    /// Weights after handing every unavailable predictor's weight to the
    /// fallback; unavailable entries become 0.
    pub fn reallocate(&self, available: &[bool]) -> Result<Vec<f64>> {
        if available.len() != self.len() {
            return Err(Error::Shape(format!(
                "availability for {} predictors, expected {}",
                available.len(),
                self.len()
            )));
        }
        if !available[self.fallback] {
            return Err(Error::MissingDependency(format!(
                "fallback predictor {} is unavailable",
                self.fallback_id()
            )));
        }
        let mut out = self.weights.clone();
        for k in 0..self.len() {
            if !available[k] {
                out[self.fallback] += out[k];
                out[k] = 0.0;
            }
        }
        Ok(out)
    }
}

pub(crate) fn check_simplex(weights: &[f64]) -> Result<()> {
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidArgument(format!("weights {weights:?} must be non-negative")));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::InvalidArgument(format!("weights {weights:?} sum to {sum}, not 1")));
    }
    Ok(())
}
