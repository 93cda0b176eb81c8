//! Weighted fusion of three predictors, weight search on validation data
//! and reallocation when a modality is missing.
//!
//! ```bash
//! cargo run -p medcoder --example ensemble_fusion
//! ```

use medcoder::ensemble::{fuse, tune_weights, EnsembleWeights, ModalityPrediction};
use medcoder::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> medcoder::Result<()> {
    let ids: Vec<String> = ["text", "ranker", "tabular"].map(String::from).to_vec();
    let weights = EnsembleWeights::new(ids.clone(), vec![0.5, 0.2, 0.3], 0)?;
    let all = [
        ModalityPrediction::available("text", vec![0.8, 0.1]),
        ModalityPrediction::available("ranker", vec![0.4, 0.9]),
        ModalityPrediction::available("tabular", vec![0.6, 0.2]),
    ];
    println!("all available:   {:?}", fuse(&all, &weights)?);
    let partial = [all[0].clone(), all[1].clone(), ModalityPrediction::missing("tabular")];
    println!("tabular missing: {:?}", fuse(&partial, &weights)?);
    println!("weights applied: {:?}", weights.reallocate(&[true, true, false])?);

    // A noisy text model, an informative tabular model and an
    // uninformative ranker on a toy validation set.
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut validation = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..200 {
        let y: Vec<bool> = (0..2).map(|_| rng.random_bool(0.3)).collect();
        let noisy = |rng: &mut ChaCha8Rng, s: f64| -> Vec<f64> {
            y.iter().map(|&b| (if b { 0.7 } else { 0.3 } + rng.random_range(-s..s)).clamp(0.0, 1.0)).collect()
        };
        validation.push(vec![
            ModalityPrediction::available("text", noisy(&mut rng, 0.35)),
            ModalityPrediction::available("ranker", (0..2).map(|_| rng.random()).collect()),
            ModalityPrediction::available("tabular", noisy(&mut rng, 0.15)),
        ]);
        labels.push(y);
    }
    let search = tune_weights(&validation, &Matrix::from_rows(&labels)?, &ids, 0, 0.05)?;
    println!(
        "\nsearched {} grid points: weights {:?}, validation micro-F1 {:.4}",
        search.candidates.len(),
        search.weights.weights(),
        search.micro_f1
    );
    Ok(())
}
