//! Micro and macro F1 and AUC, and the per-code table ordered by training
//! frequency.
//!
//! ```bash
//! cargo run -p medcoder --example evaluate_metrics
//! ```

use medcoder::metrics::{apply_thresholds, auc_scores, f1_scores, MetricReport};
use medcoder::Matrix;

fn main() -> medcoder::Result<()> {
    let codes: Vec<String> = ["I10", "E11.9", "N17.9"].map(String::from).to_vec();
    let probs = Matrix::from_rows(&[
        [0.9, 0.2, 0.4],
        [0.7, 0.6, 0.1],
        [0.3, 0.8, 0.7],
        [0.1, 0.1, 0.6],
        [0.6, 0.4, 0.2],
    ])?;
    let labels = Matrix::from_rows(&[
        [true, false, false],
        [true, true, false],
        [false, true, true],
        [false, false, true],
        [false, false, false],
    ])?;
    let decisions = apply_thresholds(&probs, &[0.5, 0.5, 0.5])?;
    let f1 = f1_scores(&decisions, &labels)?;
    let auc = auc_scores(&probs, &labels)?;
    println!("micro-F1 {:.4}  macro-F1 {:.4}", f1.micro_f1, f1.macro_f1);
    println!("micro-AUC {:.4}  macro-AUC {:.4}\n", auc.micro_auc, auc.macro_auc);

    let report = MetricReport::compute(&codes, &probs, &decisions, &labels, &[120, 340, 75])?;
    print!("{}", report.per_code_table());
    Ok(())
}
