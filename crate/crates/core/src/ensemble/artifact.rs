use std::path::Path;

use serde::{Deserialize, Serialize};

use super::fusion::{decide, fuse, ModalityPrediction};
use super::weights::EnsembleWeights;
use crate::error::{Error, Result};

pub const ENSEMBLE_FILE: &str = "ensemble.json";

/// Tuned weights and per-code thresholds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub schema_version: u32,
    pub codes: Vec<String>,
    pub weights: EnsembleWeights,
    pub thresholds: Vec<f64>,
    pub validation_micro_f1: f64,
}

impl EnsembleModel {
    pub fn new(codes: Vec<String>, weights: EnsembleWeights, thresholds: Vec<f64>, validation_micro_f1: f64) -> Result<Self> {
        if thresholds.len() != codes.len() {
            return Err(Error::Shape(format!(
                "{} thresholds for {} codes",
                thresholds.len(),
                codes.len()
            )));
        }
        if thresholds.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
            return Err(Error::InvalidArgument("thresholds must lie in (0, 1)".into()));
        }
        Ok(EnsembleModel {
            schema_version: crate::SCHEMA_VERSION,
            codes,
            weights,
            thresholds,
            validation_micro_f1,
        })
    }

    /// Fuses and thresholds one admission.
    pub fn predict(&self, admission_id: &str, predictions: &[ModalityPrediction]) -> Result<AdmissionPrediction> {
        let probabilities = fuse(predictions, &self.weights)?;
        if probabilities.len() != self.codes.len() {
            return Err(Error::Shape(format!(
                "fused {} codes, ensemble has {}",
                probabilities.len(),
                self.codes.len()
            )));
        }
        let decisions = decide(&probabilities, &self.thresholds)?;
        let contributing = self
            .weights
            .predictors()
            .iter()
            .filter(|id| predictions.iter().any(|p| p.available && &p.predictor == *id))
            .cloned()
            .collect();
        Ok(AdmissionPrediction {
            admission_id: admission_id.to_string(),
            codes: self
                .codes
                .iter()
                .zip(probabilities.iter().zip(&decisions))
                .map(|(code, (&probability, &selected))| CodeDecision {
                    code: code.clone(),
                    probability,
                    selected,
                })
                .collect(),
            contributing,
        })
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let path = dir.as_ref().join(ENSEMBLE_FILE);
        std::fs::write(&path, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let path = dir.as_ref().join(ENSEMBLE_FILE);
        let text = std::fs::read_to_string(&path).map_err(|_| Error::MissingFile(path.clone()))?;
        let m: EnsembleModel = serde_json::from_str(&text)?;
        EnsembleModel::new(m.codes, m.weights, m.thresholds, m.validation_micro_f1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeDecision {
    pub code: String,
    pub probability: f64,
    pub selected: bool,
}

/// One line of the prediction output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissionPrediction {
    pub admission_id: String,
    pub codes: Vec<CodeDecision>,
    /// Predictors whose output entered the fusion.
    pub contributing: Vec<String>,
}

impl AdmissionPrediction {
    pub fn probabilities(&self) -> Vec<f64> {
        self.codes.iter().map(|c| c.probability).collect()
    }

    pub fn decisions(&self) -> Vec<bool> {
        self.codes.iter().map(|c| c.selected).collect()
    }

    pub fn selected_codes(&self) -> impl Iterator<Item = &str> {
        self.codes.iter().filter(|c| c.selected).map(|c| c.code.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_predict() {
        let ids = vec!["text".to_string(), "tabular".to_string()];
        let w = EnsembleWeights::new(ids, vec![0.6, 0.4], 0).unwrap();
        let m = EnsembleModel::new(vec!["A".into(), "B".into()], w, vec![0.5, 0.3], 0.8).unwrap();
        let dir = tempfile::tempdir().unwrap();
        m.save(dir.path()).unwrap();
        assert_eq!(EnsembleModel::load(dir.path()).unwrap(), m);
        let p = m
            .predict("7", &[ModalityPrediction::available("text", vec![0.4, 0.35]), ModalityPrediction::missing("tabular")])
            .unwrap();
        assert_eq!(p.decisions(), vec![false, true]);
        assert_eq!(p.contributing, vec!["text".to_string()]);
        assert!(EnsembleModel::new(vec!["A".into()], m.weights.clone(), vec![1.0], 0.0).is_err());
    }
}
