use std::io::Write;
use std::path::Path;

use log::{debug, info, warn};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{Smoothing, TextModelConfig};
use super::model::{bce_logit_grad, TextModel, TextModelShape};
use super::smoothing::{bce, sample_epsilon, smooth_labels};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics::{apply_thresholds, f1_scores};
use crate::nn::{Adam, AdamConfig, ParamSet};

/// One encoded admission.
#[derive(Clone, Debug, PartialEq)]
pub struct TextExample {
    pub ids: Vec<u32>,
    pub tfidf: Option<Vec<f64>>,
    pub labels: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean smoothed-label loss over the epoch's batches.
    pub train_loss: f64,
    /// Unsmoothed loss on the validation set.
    pub val_loss: f64,
    pub val_micro_f1: f64,
    pub val_macro_f1: f64,
    pub mean_epsilon: f64,
    pub best: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochLog>,
    pub best_epoch: usize,
}

impl TrainingLog {
    pub fn train_losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.train_loss).collect()
    }

    /// JSON lines, one record per epoch.
    pub fn write_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = Vec::new();
        for e in &self.epochs {
            serde_json::to_writer(&mut out, e)?;
            out.push(b'\n');
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(&out))
            .map_err(|e| Error::io(path, e))
    }
}

fn label_matrix<'a>(examples: impl Iterator<Item = &'a TextExample>, c: usize) -> Result<Matrix<bool>> {
    let rows: Vec<Vec<bool>> = examples.map(|e| e.labels.clone()).collect();
    if rows.iter().any(|r| r.len() != c) {
        return Err(Error::Shape(format!("label vectors must have {c} entries")));
    }
    if rows.is_empty() {
        return Matrix::from_vec(0, c, Vec::new());
    }
    Matrix::from_rows(&rows)
}

/// Mean BCE over the batch's N×C entries and its gradient, without the
/// L2 term. `dropout_rng` switches on training-mode dropout.
pub fn loss_and_gradient(
    model: &TextModel,
    batch: &[&TextExample],
    targets: &Matrix<f64>,
    mut dropout_rng: Option<&mut ChaCha8Rng>,
) -> Result<(f64, ParamSet)> {
    let c = model.num_codes();
    if targets.rows() != batch.len() || targets.cols() != c {
        return Err(Error::Shape(format!(
            "targets {}x{} for a batch of {} and {c} codes",
            targets.rows(),
            targets.cols(),
            batch.len()
        )));
    }
    let scale = (batch.len() * c) as f64;
    let mut grads = model.params().zeros_like();
    let mut loss = 0.0;
    for (i, ex) in batch.iter().enumerate() {
        let trace = model.forward_trace(&ex.ids, ex.tfidf.as_deref(), dropout_rng.as_deref_mut())?;
        let target = targets.row(i);
        let probs = trace.probabilities();
        loss += probs.iter().zip(target).map(|(&p, &t)| bce(p, t)).sum::<f64>();
        let dlogits: Vec<f64> = trace
            .logits
            .iter()
            .zip(target)
            .map(|(&z, &t)| bce_logit_grad(z, t, scale))
            .collect();
        model.backward(&ex.ids, &trace, &dlogits, &mut grads);
    }
    Ok((loss / scale, grads))
}

/// Inference-mode probabilities for each example, N×C.
pub fn predict_examples(model: &TextModel, examples: &[TextExample]) -> Result<Matrix<f64>> {
    let c = model.num_codes();
    let mut data = Vec::with_capacity(examples.len() * c);
    for ex in examples {
        data.extend(model.forward(&ex.ids, ex.tfidf.as_deref())?);
    }
    Matrix::from_vec(examples.len(), c, data)
}

fn evaluate(model: &TextModel, examples: &[TextExample]) -> Result<(f64, f64, f64)> {
    let c = model.num_codes();
    let probs = predict_examples(model, examples)?;
    let labels = label_matrix(examples.iter(), c)?;
    let hard = smooth_labels(&labels, 0.0, c)?.targets;
    let loss = super::smoothing::ce_loss(&probs, &hard)?;
    let f1 = f1_scores(&apply_thresholds(&probs, &vec![0.5; c])?, &labels)?;
    Ok((loss, f1.micro_f1, f1.macro_f1))
}

/// Trains with Adam on label-smoothed BCE. ε is drawn once per mini-batch.
/// The returned weights are those of the epoch with the best validation
/// micro-F1 at threshold 0.5; ties go to the lower validation loss, then to
/// the earlier epoch.
pub fn train_text_model(
    config: &TextModelConfig,
    shape: TextModelShape,
    train: &[TextExample],
    validation: &[TextExample],
) -> Result<(TextModel, TrainingLog)> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::Data("empty training set".into()));
    }
    let c = shape.num_codes;
    let selection = if validation.is_empty() {
        warn!("no validation admissions; selecting the checkpoint on training data");
        train
    } else {
        validation
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = TextModel::new(config.clone(), shape, &mut rng)?;
    let mut adam = Adam::new(
        AdamConfig {
            learning_rate: config.learning_rate,
            ..AdamConfig::default()
        },
        model.params(),
    );
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut log = TrainingLog::default();
    let mut best: Option<(f64, f64, ParamSet)> = None;

    for epoch in 1..=config.epochs.max(1) {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut eps_sum, mut batches) = (0.0, 0.0, 0usize);
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&TextExample> = chunk.iter().map(|&i| &train[i]).collect();
            let epsilon = match config.smoothing {
                Smoothing::Beta { alpha } => sample_epsilon(alpha, &mut rng)?,
                Smoothing::Fixed { epsilon } => epsilon,
            };
            let labels = label_matrix(batch.iter().copied(), c)?;
            let targets = smooth_labels(&labels, epsilon, c)?.targets;
            let (loss, mut grads) = loss_and_gradient(&model, &batch, &targets, Some(&mut rng))?;
            if !loss.is_finite() {
                return Err(Error::Diverged(format!("loss {loss} at epoch {epoch}, batch {}", batches + 1)));
            }
            model.add_l2_gradient(&mut grads, config.l2);
            adam.step(model.params_mut(), &grads);
            model.reset_pad();
            if !model.params().all_finite() {
                return Err(Error::Diverged(format!("non-finite weights at epoch {epoch}")));
            }
            loss_sum += loss;
            eps_sum += epsilon;
            batches += 1;
        }
        let (val_loss, micro, macro_f1) = evaluate(&model, selection)?;
        let improved = best
            .as_ref()
            .is_none_or(|(b, bl, _)| micro > *b || (micro == *b && val_loss < *bl));
        if improved {
            best = Some((micro, val_loss, model.params().clone()));
            log.best_epoch = epoch;
        }
        let entry = EpochLog {
            epoch,
            train_loss: loss_sum / batches as f64,
            val_loss,
            val_micro_f1: micro,
            val_macro_f1: macro_f1,
            mean_epsilon: eps_sum / batches as f64,
            best: improved,
        };
        debug!("text epoch {epoch}: {entry:?}");
        log.epochs.push(entry);
    }
    if let Some((micro, _, params)) = best {
        info!("text model: best epoch {} (validation micro-F1 {micro:.4})", log.best_epoch);
        *model.params_mut() = params;
    }
    model.mark_trained();
    Ok((model, log))
}
