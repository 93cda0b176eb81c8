//! Binary lab, chart, medication and microbiology features with one
//! class-weighted decision tree per code.
//!
//! ```bash
//! cargo run -p medcoder --example tabular_trees
//! ```

use medcoder::corpus::{generate_synthetic, split_by_patient, GeneratorConfig, SplitPart};
use medcoder::metrics::{auc_scores, micro_f1_at_half};
use medcoder::tabular::{TabularConfig, TreeEnsembleModel};
use medcoder::Matrix;

fn main() -> medcoder::Result<()> {
    let corpus = generate_synthetic(&GeneratorConfig::planted_fixture(400), 5)?;
    let split = split_by_patient(&corpus.records, [0.7, 0.15, 0.15], 5)?;
    let model = TreeEnsembleModel::fit(
        &TabularConfig::default(),
        &corpus.catalog.code_ids(),
        &split.select(&corpus.records, SplitPart::Train),
    )?;
    println!("{} binary features", model.schema.width());
    for (code, tree) in model.codes.iter().zip(&model.trees) {
        let used: Vec<String> = tree
            .used_features()
            .into_iter()
            .take(4)
            .map(|f| model.schema.features[f].to_string())
            .collect();
        println!("{code:<6} depth {:>2}, splits on {used:?}...", tree.depth());
    }

    let test = split.select(&corpus.records, SplitPart::Test);
    let probs: Vec<Vec<f64>> = test.iter().map(|r| model.predict(r)).collect();
    let labels: Vec<Vec<bool>> = test.iter().map(|r| r.labels.clone()).collect();
    let (p, y) = (Matrix::from_rows(&probs)?, Matrix::from_rows(&labels)?);
    println!(
        "\ntest micro-F1 {:.4}, micro-AUC {:.4}",
        micro_f1_at_half(&p, &y)?,
        auc_scores(&p, &y)?.micro_auc
    );
    Ok(())
}
