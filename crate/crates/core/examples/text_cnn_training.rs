//! Trains the convolutional text classifier with Beta-sampled label
//! smoothing on a planted corpus and scores the test split.
//!
//! ```bash
//! cargo run -p medcoder --example text_cnn_training
//! ```

use medcoder::classifier::{Smoothing, TextClassifier, TextClassifierConfig, TextModelConfig};
use medcoder::corpus::{generate_synthetic, split_by_patient, GeneratorConfig, SplitPart};
use medcoder::metrics::{apply_thresholds, f1_scores};
use medcoder::text::bundled_guidelines;
use medcoder::Matrix;

fn main() -> medcoder::Result<()> {
    let corpus = generate_synthetic(&GeneratorConfig::planted_fixture(500), 1)?;
    let split = split_by_patient(&corpus.records, [0.7, 0.15, 0.15], 1)?;
    let config = TextClassifierConfig {
        model: TextModelConfig {
            embedding_dim: 48,
            feature_maps: 24,
            learning_rate: 0.003,
            batch_size: 16,
            smoothing: Smoothing::Beta { alpha: 0.3 },
            tfidf_side_channel: true,
            epochs: 25,
            ..TextModelConfig::default()
        },
        min_frequency: 3,
        ..TextClassifierConfig::default()
    };
    let (model, log) = TextClassifier::fit(
        &config,
        &corpus.catalog,
        &split.select(&corpus.records, SplitPart::Train),
        &split.select(&corpus.records, SplitPart::Validation),
        &bundled_guidelines(&corpus.catalog),
    )?;
    println!("epoch  train_loss  val_loss  val_micro_f1  mean_eps");
    for e in &log.epochs {
        println!(
            "{:>5}  {:>10.4}  {:>8.4}  {:>12.4}  {:>8.3}{}",
            e.epoch,
            e.train_loss,
            e.val_loss,
            e.val_micro_f1,
            e.mean_epsilon,
            if e.best { "  *" } else { "" }
        );
    }

    let test = split.select(&corpus.records, SplitPart::Test);
    let probs: Vec<Vec<f64>> = test.iter().map(|r| model.predict(r)).collect::<medcoder::Result<_>>()?;
    let labels: Vec<Vec<bool>> = test.iter().map(|r| r.labels.clone()).collect();
    let decisions = apply_thresholds(&Matrix::from_rows(&probs)?, &vec![0.5; corpus.catalog.len()])?;
    let f1 = f1_scores(&decisions, &Matrix::from_rows(&labels)?)?;
    println!("\ntest micro-F1 {:.4}, macro-F1 {:.4}", f1.micro_f1, f1.macro_f1);
    Ok(())
}
