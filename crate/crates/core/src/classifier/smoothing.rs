use rand::Rng;
use rand_distr::{Beta, Distribution};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Probabilities are clamped into `[PROB_CLAMP, 1 - PROB_CLAMP]` before logs.
pub const PROB_CLAMP: f64 = 1e-7;

/// Smoothed targets for one batch and the ε that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothedLabelBatch {
    pub targets: Matrix<f64>,
    pub epsilon: f64,
}

/// `(1 - ε)·I + ε/C` elementwise.
pub fn smooth_labels(labels: &Matrix<bool>, epsilon: f64, num_codes: usize) -> Result<SmoothedLabelBatch> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} outside [0, 1]")));
    }
    if num_codes == 0 {
        return Err(Error::InvalidArgument("number of codes must be positive".into()));
    }
    let prior = epsilon / num_codes as f64;
    let data = labels
        .as_slice()
        .iter()
        .map(|&y| (1.0 - epsilon) * if y { 1.0 } else { 0.0 } + prior)
        .collect();
    Ok(SmoothedLabelBatch {
        targets: Matrix::from_vec(labels.rows(), labels.cols(), data)?,
        epsilon,
    })
}

/// One draw from `Beta(α, α)`, kept strictly inside (0, 1).
pub fn sample_epsilon<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("beta alpha must be positive, got {alpha}")));
    }
    let beta = Beta::new(alpha, alpha).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(beta.sample(rng).clamp(1e-12, 1.0 - 1e-12))
}

/// Mean binary cross-entropy over all N×C entries.
pub fn ce_loss(probabilities: &Matrix<f64>, targets: &Matrix<f64>) -> Result<f64> {
    probabilities.ensure_same_shape(targets, "smoothed labels")?;
    let n = probabilities.as_slice().len();
    if n == 0 {
        return Err(Error::Shape("empty probability matrix".into()));
    }
    let total: f64 = probabilities
        .as_slice()
        .iter()
        .zip(targets.as_slice())
        .map(|(&p, &t)| bce(p, t))
        .sum();
    Ok((total / n as f64).max(0.0))
}

#[inline]
pub(crate) fn bce(p: f64, t: f64) -> f64 {
    let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn smoothing_examples() {
        let one = Matrix::from_vec(1, 1, vec![true]).unwrap();
        let zero = Matrix::from_vec(1, 1, vec![false]).unwrap();
        assert_eq!(*smooth_labels(&one, 0.0, 32).unwrap().targets.get(0, 0), 1.0);
        assert_eq!(*smooth_labels(&zero, 1.0, 32).unwrap().targets.get(0, 0), 0.03125);
        let oracle = 0.8 * 1.0 + 0.2 / 32.0;
        assert!((*smooth_labels(&one, 0.2, 32).unwrap().targets.get(0, 0) - oracle).abs() < 1e-15);
        assert!(smooth_labels(&one, 1.5, 32).is_err());
        assert!(smooth_labels(&one, -0.1, 32).is_err());
    }

    #[test]
    fn beta_mean_and_concentration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws: Vec<f64> = (0..10_000).map(|_| sample_epsilon(0.3, &mut rng).unwrap()).collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!((mean - 0.5).abs() < 0.02, "mean {mean}");
        assert!(draws.iter().all(|e| *e > 0.0 && *e < 1.0));

        let tight: Vec<f64> = (0..2000).map(|_| sample_epsilon(1e6, &mut rng).unwrap()).collect();
        let m = tight.iter().sum::<f64>() / tight.len() as f64;
        let sd = (tight.iter().map(|x| (x - m).powi(2)).sum::<f64>() / tight.len() as f64).sqrt();
        assert!(sd < 0.01);
        assert!(sample_epsilon(0.0, &mut rng).is_err());
    }

    #[test]
    fn epsilon_sequence_is_reproducible() {
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..5).map(|_| sample_epsilon(0.3, &mut rng).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(draw(3), draw(3));
    }

    #[test]
    fn loss_examples() {
        let half = Matrix::filled(2, 3, 0.5);
        assert!((ce_loss(&half, &half).unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
        let hard = Matrix::from_vec(1, 3, vec![1.0, 0.0, 1.0]).unwrap();
        assert!(ce_loss(&hard, &hard).unwrap() <= 1e-6);
        assert!(ce_loss(&half, &Matrix::filled(3, 2, 0.5)).is_err());
    }

    fn oracle(p: &[f64], t: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..p.len() {
            let q = p[i].clamp(1e-7, 1.0 - 1e-7);
            s -= t[i] * q.ln() + (1.0 - t[i]) * (1.0 - q).ln();
        }
        s / p.len() as f64
    }

    proptest! {
        #[test]
        fn loss_matches_scalar_oracle(p in prop::collection::vec(0.001f64..0.999, 6), t in prop::collection::vec(0.0f64..1.0, 6)) {
            let pm = Matrix::from_vec(2, 3, p.clone()).unwrap();
            let tm = Matrix::from_vec(2, 3, t.clone()).unwrap();
            prop_assert!((ce_loss(&pm, &tm).unwrap() - oracle(&p, &t)).abs() < 1e-9);
        }

        #[test]
        fn loss_minimized_at_target(t in prop::collection::vec(0.05f64..0.95, 4), k in 0usize..4, sign in prop::bool::ANY) {
            let tm = Matrix::from_vec(1, 4, t.clone()).unwrap();
            let base = ce_loss(&tm, &tm).unwrap();
            let mut p = t.clone();
            p[k] += if sign { 0.01 } else { -0.01 };
            let moved = ce_loss(&Matrix::from_vec(1, 4, p).unwrap(), &tm).unwrap();
            prop_assert!(base >= 0.0);
            prop_assert!(moved > base);
        }

        #[test]
        fn smoothing_preserves_order(eps in 1e-6f64..(1.0 - 1e-6), c in 1usize..64) {
            let m = Matrix::from_vec(1, 2, vec![true, false]).unwrap();
            let s = smooth_labels(&m, eps, c).unwrap().targets;
            prop_assert!(s.get(0, 0) > s.get(0, 1));
        }
    }
}
