//! Helpers shared by the integration tests.

#![allow(dead_code)]

use std::io::Write;
use std::path::Path;

use medcoder::classifier::{
    loss_and_gradient, Smoothing, TextExample, TextModel, TextModelConfig, TextModelShape,
};
use medcoder::pipeline::{full_run, run_command, CorpusConfig, RunConfig};
use medcoder::ranker::RankerConfig;
use medcoder::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Writes a line to stderr past the test harness's output capture.
pub fn report(line: &str) {
    let _ = writeln!(std::io::stderr(), "{line}");
}

/// Prints one PASS/FAIL line for a criterion and returns whether it passed.
pub fn verdict(name: &str, pass: bool, detail: &str) -> bool {
    report(&format!("ACCEPTANCE {} {name}: {detail}", if pass { "PASS" } else { "FAIL" }));
    pass
}

fn objective(model: &TextModel, batch: &[&TextExample], targets: &Matrix<f64>, l2: f64) -> f64 {
    loss_and_gradient(model, batch, targets, None).unwrap().0 + model.l2_penalty(l2)
}

/// Central differences against the analytic gradient of a toy Text-CNN
/// (|V| = 20, dim 8, C = 3, one kernel of width 3) on `coords` random
/// coordinates. Returns the worst relative error and the coordinates
/// exceeding `tolerance`.
pub fn gradient_check(tfidf_dim: usize, coords: usize, tolerance: f64) -> (f64, Vec<String>) {
    let l2 = 1e-3;
    let config = TextModelConfig {
        embedding_dim: 8,
        kernel_widths: vec![3],
        feature_maps: 6,
        dropout: 0.0,
        l2,
        smoothing: Smoothing::off(),
        tfidf_side_channel: tfidf_dim > 0,
        ..TextModelConfig::default()
    };
    let shape = TextModelShape {
        vocab_size: 20,
        num_codes: 3,
        tfidf_dim,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let model = TextModel::new(config, shape, &mut rng).unwrap();
    let examples: Vec<TextExample> = (0..4)
        .map(|i| TextExample {
            ids: (0..5 + i).map(|_| rng.random_range(1..20)).collect(),
            tfidf: (tfidf_dim > 0).then(|| (0..tfidf_dim).map(|_| rng.random::<f64>()).collect()),
            labels: vec![i % 2 == 0, i % 3 == 0, true],
        })
        .collect();
    let batch: Vec<&TextExample> = examples.iter().collect();
    let targets = Matrix::from_rows(
        &examples
            .iter()
            .map(|e| e.labels.iter().map(|&l| if l { 0.9 } else { 0.05 }).collect::<Vec<f64>>())
            .collect::<Vec<_>>(),
    )
    .unwrap();
    let (_, mut grads) = loss_and_gradient(&model, &batch, &targets, None).unwrap();
    model.add_l2_gradient(&mut grads, l2);

    let h = 1e-5;
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    while checked < coords {
        let t = rng.random_range(0..model.params().len());
        let k = rng.random_range(0..model.params().tensor(t).numel());
        // The PAD row never receives gradient and is held at zero.
        if model.params().names()[t] == "embedding" && k < 8 {
            continue;
        }
        let mut plus = model.clone();
        plus.params_mut().tensor_mut(t).data[k] += h;
        let mut minus = model.clone();
        minus.params_mut().tensor_mut(t).data[k] -= h;
        let numeric = (objective(&plus, &batch, &targets, l2) - objective(&minus, &batch, &targets, l2)) / (2.0 * h);
        let analytic = grads.tensor(t).data[k];
        let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-6);
        worst = worst.max(rel);
        if rel >= tolerance {
            failures.push(format!(
                "{}[{k}]: analytic {analytic:e} vs numeric {numeric:e}",
                model.params().names()[t]
            ));
        }
        checked += 1;
    }
    (worst, failures)
}

/// Small-model run over the five-code planted corpus.
pub fn planted_config(out: &Path, seed: u64) -> RunConfig {
    let mut c = RunConfig {
        seed,
        out_dir: out.to_path_buf(),
        corpus: CorpusConfig::Synthetic {
            admissions: Some(500),
            generator: None,
        },
        ..RunConfig::default()
    };
    c.text.min_frequency = 3;
    c.text.model = TextModelConfig {
        embedding_dim: 48,
        kernel_widths: vec![2, 3, 4],
        feature_maps: 24,
        learning_rate: 0.003,
        batch_size: 16,
        tfidf_side_channel: true,
        epochs: 20,
        ..TextModelConfig::default()
    };
    c.ranker = RankerConfig {
        char_embedding_dim: 16,
        char_filters: 8,
        word_embedding_dim: 32,
        hidden_units: 32,
        learning_rate: 0.003,
        epochs: 60,
        ..RankerConfig::default()
    };
    c
}

pub fn run_all(config: &RunConfig) {
    for c in full_run(config) {
        run_command(config, c).unwrap_or_else(|e| panic!("{c} failed: {e}"));
    }
}

pub fn copy_dir(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for entry in std::fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let target = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_dir(&entry.path(), &target);
        } else {
            std::fs::copy(entry.path(), target).unwrap();
        }
    }
}
