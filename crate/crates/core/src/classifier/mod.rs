//! Convolutional multi-label text classifier with label smoothing.

mod config;
mod model;
mod predictor;
mod smoothing;
mod train;

pub use config::{Smoothing, TextModelConfig};
pub use model::{ForwardTrace, PoolTrace, TextModel, TextModelShape};
pub use predictor::{EncodedText, TextClassifier, TextClassifierConfig, TERMS_FILE, TEXT_CHECKPOINT, VOCAB_FILE};
pub use smoothing::{ce_loss, sample_epsilon, smooth_labels, SmoothedLabelBatch, PROB_CLAMP};
pub use train::{loss_and_gradient, predict_examples, train_text_model, EpochLog, TextExample, TrainingLog};
pub(crate) use model::conv_weight as conv_weight_name;
