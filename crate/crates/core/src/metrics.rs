//! Multi-label F1 and AUC, micro- and macro-averaged.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct F1Report {
    pub macro_f1: f64,
    pub micro_f1: f64,
    pub per_code: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AucReport {
    pub macro_auc: f64,
    pub micro_auc: f64,
    /// `None` for codes lacking a positive or a negative example.
    pub per_code: Vec<Option<f64>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct Counts {
    tp: usize,
    fp: usize,
    fn_: usize,
}

impl Counts {
    fn f1(self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if self.tp == 0 {
            0.0
        } else {
            2.0 * self.tp as f64 / denom as f64
        }
    }
}

/// Per-code, micro and macro F1; F1 is 0 when precision + recall is 0.
pub fn f1_scores(decisions: &Matrix<bool>, labels: &Matrix<bool>) -> Result<F1Report> {
    decisions.ensure_same_shape(labels, "labels")?;
    let c = labels.cols();
    let mut counts = vec![Counts::default(); c];
    for (drow, lrow) in decisions.iter_rows().zip(labels.iter_rows()) {
        for j in 0..c {
            match (drow[j], lrow[j]) {
                (true, true) => counts[j].tp += 1,
                (true, false) => counts[j].fp += 1,
                (false, true) => counts[j].fn_ += 1,
                (false, false) => {}
            }
        }
    }
    let pooled = counts.iter().fold(Counts::default(), |a, b| Counts {
        tp: a.tp + b.tp,
        fp: a.fp + b.fp,
        fn_: a.fn_ + b.fn_,
    });
    let per_code: Vec<f64> = counts.iter().map(|k| k.f1()).collect();
    let macro_f1 = if c == 0 { 0.0 } else { per_code.iter().sum::<f64>() / c as f64 };
    Ok(F1Report {
        macro_f1,
        micro_f1: pooled.f1(),
        per_code,
    })
}

/// Rank-statistic AUC with midranks for ties. `None` if a class is absent.
pub fn binary_auc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let n_pos = labels.iter().filter(|&&y| y).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // Ranks are 1-based; tied block i..=j shares the mean rank.
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        let pos_in_block = order[i..=j].iter().filter(|&&k| labels[k]).count();
        rank_sum_pos += midrank * pos_in_block as f64;
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos as f64 * n_neg as f64))
}

/// Per-code AUC, macro over defined codes, micro over all pooled entries.
pub fn auc_scores(probabilities: &Matrix<f64>, labels: &Matrix<bool>) -> Result<AucReport> {
    probabilities.ensure_same_shape(labels, "labels")?;
    let c = labels.cols();
    let mut per_code = Vec::with_capacity(c);
    for j in 0..c {
        let s: Vec<f64> = probabilities.column(j).copied().collect();
        let y: Vec<bool> = labels.column(j).copied().collect();
        per_code.push(binary_auc(&s, &y));
    }
    let defined: Vec<f64> = per_code.iter().flatten().copied().collect();
    if defined.is_empty() {
        return Err(Error::Data("no code has both positive and negative examples".into()));
    }
    let skipped = c - defined.len();
    if skipped > 0 {
        warn!("{skipped} code(s) lack both classes and are excluded from macro-AUC");
    }
    let micro_auc = binary_auc(probabilities.as_slice(), labels.as_slice())
        .ok_or_else(|| Error::Data("pooled labels lack both classes".into()))?;
    Ok(AucReport {
        macro_auc: defined.iter().sum::<f64>() / defined.len() as f64,
        micro_auc,
        per_code,
    })
}

/// `P[i][j] >= thresholds[j]`.
pub fn apply_thresholds(probabilities: &Matrix<f64>, thresholds: &[f64]) -> Result<Matrix<bool>> {
    if thresholds.len() != probabilities.cols() {
        return Err(Error::Shape(format!(
            "{} thresholds for {} codes",
            thresholds.len(),
            probabilities.cols()
        )));
    }
    let data = probabilities
        .iter_rows()
        .flat_map(|row| row.iter().zip(thresholds).map(|(p, t)| p >= t))
        .collect();
    Matrix::from_vec(probabilities.rows(), probabilities.cols(), data)
}

/// Micro-F1 of probabilities thresholded at 0.5.
pub fn micro_f1_at_half(probabilities: &Matrix<f64>, labels: &Matrix<bool>) -> Result<f64> {
    let decisions = apply_thresholds(probabilities, &vec![0.5; probabilities.cols()])?;
    Ok(f1_scores(&decisions, labels)?.micro_f1)
}

/// One row of the per-code breakdown.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeMetrics {
    pub code: String,
    pub f1: f64,
    pub auc: Option<f64>,
    pub train_count: usize,
    pub test_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub schema_version: u32,
    pub macro_f1: f64,
    pub micro_f1: f64,
    pub macro_auc: f64,
    pub micro_auc: f64,
    pub n_admissions: usize,
    pub codes: Vec<CodeMetrics>,
}

impl MetricReport {
    /// Scores decisions and probabilities against labels. `train_counts`
    /// gives the training positives per code for the breakdown table.
    pub fn compute(
        codes: &[String],
        probabilities: &Matrix<f64>,
        decisions: &Matrix<bool>,
        labels: &Matrix<bool>,
        train_counts: &[usize],
    ) -> Result<Self> {
        if codes.len() != labels.cols() || train_counts.len() != labels.cols() {
            return Err(Error::Shape(format!(
                "{} codes and {} train counts for {} label columns",
                codes.len(),
                train_counts.len(),
                labels.cols()
            )));
        }
        let f1 = f1_scores(decisions, labels)?;
        let auc = auc_scores(probabilities, labels)?;
        let codes = codes
            .iter()
            .enumerate()
            .map(|(j, code)| CodeMetrics {
                code: code.clone(),
                f1: f1.per_code[j],
                auc: auc.per_code[j],
                train_count: train_counts[j],
                test_count: labels.column(j).filter(|&&y| y).count(),
            })
            .collect();
        Ok(MetricReport {
            schema_version: crate::SCHEMA_VERSION,
            macro_f1: f1.macro_f1,
            micro_f1: f1.micro_f1,
            macro_auc: auc.macro_auc,
            micro_auc: auc.micro_auc,
            n_admissions: labels.rows(),
            codes,
        })
    }

    /// Plain-text table, codes ordered by training count descending.
    pub fn per_code_table(&self) -> String {
        let mut rows: Vec<&CodeMetrics> = self.codes.iter().collect();
        rows.sort_by(|a, b| b.train_count.cmp(&a.train_count).then_with(|| a.code.cmp(&b.code)));
        let mut out = format!("{:<10} {:>8} {:>8} {:>8} {:>8}\n", "code", "train_n", "test_n", "auc", "f1");
        for r in rows {
            let auc = r.auc.map_or_else(|| "-".to_string(), |a| format!("{a:.4}"));
            out.push_str(&format!(
                "{:<10} {:>8} {:>8} {:>8} {:>8.4}\n",
                r.code, r.train_count, r.test_count, auc, r.f1
            ));
        }
        out
    }
}
