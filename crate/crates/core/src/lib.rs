//! Multimodal ICD-10 code prediction for hospital admissions.
//!
//! Three modality-specific predictors are trained independently and fused:
//!
//! - [`classifier`]: a convolutional multi-label classifier over the
//!   admission's notes, optionally fed guideline-keyword TF-IDF features,
//!   trained with Beta-sampled label smoothing.
//! - [`ranker`]: a char-CNN + word embedding + BiLSTM phrase encoder trained
//!   with a triplet loss, ranking codes by distance between the admission's
//!   diagnosis phrases and each code description.
//! - [`tabular`]: one-vs-all decision trees over binary lab, chart,
//!   medication and microbiology features.
//!
//! [`ensemble`] fuses the three with weights tuned on validation data and
//! hands a missing modality's weight to the text model. [`explain`] attaches
//! evidence to every predicted code: path-influence phrases from the text
//! network and local-surrogate feature weights from the tabular model.
//!
//! Runnable walkthroughs for each capability live in this crate's
//! `examples/` directory (`cargo run -p medcoder --example <name>`).

pub mod classifier;
pub mod corpus;
pub mod ensemble;
pub mod error;
pub mod explain;
pub mod matrix;
pub mod metrics;
pub mod nn;
pub mod pipeline;
pub mod ranker;
pub mod tabular;
pub mod text;

pub use error::{Error, Result};
pub use matrix::Matrix;

/// Version stamped into every persisted artifact.
pub const SCHEMA_VERSION: u32 = 1;
