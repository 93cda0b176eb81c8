//! Weighted fusion of the modality predictors, weight and threshold tuning
//! on validation data, and reallocation of a missing predictor's weight to
//! the text model.

mod artifact;
mod fusion;
mod tuning;
mod weights;

pub use artifact::{AdmissionPrediction, CodeDecision, EnsembleModel, ENSEMBLE_FILE};
pub use fusion::{decide, fuse, ModalityPrediction};
pub use tuning::{
    fuse_all, grid_candidates, threshold_grid, tune_thresholds, tune_weights, CandidateScore, WeightSearch,
};
pub use weights::{EnsembleWeights, RANKER_PREDICTOR, TABULAR_PREDICTOR, TEXT_PREDICTOR};
