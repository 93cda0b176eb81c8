use log::info;
use serde::{Deserialize, Serialize};

use super::fusion::{fuse, ModalityPrediction};
use super::weights::EnsembleWeights;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics::{apply_thresholds, f1_scores, micro_f1_at_half};

/// Every point of the K-simplex whose coordinates are multiples of `step`,
/// in ascending lexicographic order.
pub fn grid_candidates(k: usize, step: f64) -> Result<Vec<Vec<f64>>> {
    if k == 0 {
        return Err(Error::InvalidArgument("grid over zero predictors".into()));
    }
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::InvalidArgument(format!("grid step {step} must lie in (0, 1]")));
    }
    let n = (1.0 / step).round() as usize;
    if ((n as f64) * step - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("grid step {step} does not divide 1")));
    }
    fn rec(k: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for i in 0..=left {
            prefix.push(i);
            rec(k - 1, left - i, prefix, out);
            prefix.pop();
        }
    }
    let mut ints = Vec::new();
    rec(k, n, &mut Vec::new(), &mut ints);
    Ok(ints
        .into_iter()
        .map(|v| v.into_iter().map(|i| i as f64 / n as f64).collect())
        .collect())
}

/// Fused N×C probabilities for each admission's predictions.
pub fn fuse_all(predictions: &[Vec<ModalityPrediction>], weights: &EnsembleWeights) -> Result<Matrix<f64>> {
    let rows: Vec<Vec<f64>> = predictions.iter().map(|p| fuse(p, weights)).collect::<Result<_>>()?;
    let c = rows.first().map_or(0, Vec::len);
    Matrix::from_vec(rows.len(), c, rows.concat())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub weights: Vec<f64>,
    pub micro_f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSearch {
    pub weights: EnsembleWeights,
    pub micro_f1: f64,
    /// Every enumerated candidate with its validation score.
    pub candidates: Vec<CandidateScore>,
}

/// Grid search for the weights maximizing validation micro-F1 at 0.5. Ties
/// go to the larger fallback weight, then to the lexicographically
/// smallest weight vector.
pub fn tune_weights(
    validation: &[Vec<ModalityPrediction>],
    labels: &Matrix<bool>,
    predictors: &[String],
    fallback: usize,
    step: f64,
) -> Result<WeightSearch> {
    if validation.is_empty() || labels.rows() == 0 {
        return Err(Error::Data("cannot tune ensemble weights on an empty validation set".into()));
    }
    if validation.len() != labels.rows() {
        return Err(Error::Shape(format!(
            "{} prediction rows for {} label rows",
            validation.len(),
            labels.rows()
        )));
    }
    let score = |w: &EnsembleWeights| -> Result<f64> { micro_f1_at_half(&fuse_all(validation, w)?, labels) };
    if predictors.len() == 1 {
        let weights = EnsembleWeights::new(predictors.to_vec(), vec![1.0], fallback)?;
        let micro_f1 = score(&weights)?;
        return Ok(WeightSearch {
            candidates: vec![CandidateScore {
                weights: vec![1.0],
                micro_f1,
            }],
            weights,
            micro_f1,
        });
    }
    let mut best: Option<(f64, usize)> = None;
    let mut candidates: Vec<CandidateScore> = Vec::new();
    for (i, point) in grid_candidates(predictors.len(), step)?.into_iter().enumerate() {
        // Grid points sum to one only up to rounding; renormalize exactly.
        let sum: f64 = point.iter().sum();
        let point: Vec<f64> = point.iter().map(|w| w / sum).collect();
        let w = EnsembleWeights::new(predictors.to_vec(), point.clone(), fallback)?;
        let s = score(&w)?;
        let better = best.is_none_or(|(bs, bi)| {
            s > bs || (s == bs && point[fallback] > candidates[bi].weights[fallback])
        });
        candidates.push(CandidateScore {
            weights: point,
            micro_f1: s,
        });
        if better {
            best = Some((s, i));
        }
    }
    let (micro_f1, bi) = best.expect("grid is non-empty");
    let weights = EnsembleWeights::new(predictors.to_vec(), candidates[bi].weights.clone(), fallback)?;
    info!(
        "ensemble weights {:?} (validation micro-F1 {micro_f1:.4} over {} candidates)",
        weights.weights(),
        candidates.len()
    );
    Ok(WeightSearch {
        weights,
        micro_f1,
        candidates,
    })
}

/// Threshold grid searched per code.
pub fn threshold_grid() -> Vec<f64> {
    (1..20).map(|i| i as f64 / 20.0).collect()
}

/// Per-code thresholds by coordinate ascent on validation micro-F1,
/// starting from 0.5. A threshold moves only on strict improvement, so the
/// result never scores below the global 0.5 rule.
pub fn tune_thresholds(probabilities: &Matrix<f64>, labels: &Matrix<bool>) -> Result<Vec<f64>> {
    probabilities.ensure_same_shape(&Matrix::filled(labels.rows(), labels.cols(), 0.0), "labels")?;
    let c = labels.cols();
    let mut thresholds = vec![0.5; c];
    if labels.rows() == 0 {
        return Ok(thresholds);
    }
    let score = |t: &[f64]| -> Result<f64> { Ok(f1_scores(&apply_thresholds(probabilities, t)?, labels)?.micro_f1) };
    let mut current = score(&thresholds)?;
    for _round in 0..10 {
        let mut changed = false;
        for j in 0..c {
            for t in threshold_grid() {
                if t == thresholds[j] {
                    continue;
                }
                let mut trial = thresholds.clone();
                trial[j] = t;
                let s = score(&trial)?;
                if s > current {
                    current = s;
                    thresholds = trial;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    Ok(thresholds)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn grid_enumeration() {
        assert_eq!(
            grid_candidates(2, 0.5).unwrap(),
            vec![vec![0.0, 1.0], vec![0.5, 0.5], vec![1.0, 0.0]]
        );
        assert_eq!(grid_candidates(3, 0.05).unwrap().len(), 231);
        assert!(grid_candidates(2, 0.3).is_err());
        assert_eq!(grid_candidates(1, 0.05).unwrap(), vec![vec![1.0]]);
    }

    fn fixture(n: usize, seed: u64) -> (Vec<Vec<ModalityPrediction>>, Matrix<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut preds = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..n {
            let y: Vec<bool> = (0..3).map(|_| rng.random_bool(0.4)).collect();
            let perfect: Vec<f64> = y.iter().map(|&b| if b { 0.9 } else { 0.1 }).collect();
            let random: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
            preds.push(vec![
                ModalityPrediction::available("random", random),
                ModalityPrediction::available("perfect", perfect),
            ]);
            labels.push(y);
        }
        (preds, Matrix::from_rows(&labels).unwrap())
    }

    #[test]
    fn perfect_predictor_dominates() {
        let (preds, labels) = fixture(60, 1);
        let ids = vec!["random".to_string(), "perfect".to_string()];
        let search = tune_weights(&preds, &labels, &ids, 0, 0.05).unwrap();
        assert_eq!(search.micro_f1, 1.0);
        // Among perfect candidates the largest fallback weight wins.
        let chosen = search.weights.weights()[0];
        for c in &search.candidates {
            if c.weights[0] > chosen + 1e-12 {
                assert!(c.micro_f1 < 1.0);
            }
        }
        assert!(search.weights.weight_of("perfect").unwrap() >= 0.55 - 1e-12);
    }

    #[test]
    fn search_is_optimal_over_a_coarse_enumeration() {
        let (preds, labels) = fixture(40, 2);
        let ids = vec!["random".to_string(), "perfect".to_string()];
        let search = tune_weights(&preds, &labels, &ids, 0, 0.25).unwrap();
        for w0 in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let w = EnsembleWeights::new(ids.clone(), vec![w0, 1.0 - w0], 0).unwrap();
            let s = micro_f1_at_half(&fuse_all(&preds, &w).unwrap(), &labels).unwrap();
            assert!(search.micro_f1 >= s);
        }
        for cand in &search.candidates {
            assert!(search.micro_f1 >= cand.micro_f1);
            if cand.micro_f1 == search.micro_f1 {
                assert!(search.weights.weights()[0] >= cand.weights[0]);
            }
        }
    }

    #[test]
    fn single_predictor_needs_no_search() {
        let (preds, labels) = fixture(10, 3);
        let single: Vec<Vec<ModalityPrediction>> = preds.iter().map(|p| vec![p[1].clone()]).collect();
        let search = tune_weights(&single, &labels, &["perfect".to_string()], 0, 0.05).unwrap();
        assert_eq!(search.weights.weights(), &[1.0]);
        assert!(tune_weights(&[], &Matrix::filled(0, 3, false), &["perfect".to_string()], 0, 0.05).is_err());
    }

    #[test]
    fn tuned_thresholds_never_lose_to_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let probs = Matrix::from_vec(30, 3, (0..90).map(|_| rng.random::<f64>()).collect()).unwrap();
            let labels =
                Matrix::from_vec(30, 3, probs.as_slice().iter().map(|p| rng.random::<f64>() < *p).collect()).unwrap();
            let t = tune_thresholds(&probs, &labels).unwrap();
            let tuned = f1_scores(&apply_thresholds(&probs, &t).unwrap(), &labels).unwrap().micro_f1;
            assert!(tuned >= micro_f1_at_half(&probs, &labels).unwrap());
            assert!(t.iter().all(|x| *x > 0.0 && *x < 1.0));
        }
    }
}
