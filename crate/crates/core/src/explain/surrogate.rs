use log::warn;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::{FeatureId, Table};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurrogateConfig {
    pub samples: usize,
    /// Kernel width in normalized Hamming distance.
    pub sigma: f64,
    /// Ridge penalty; the intercept is not penalized.
    pub lambda: f64,
    pub top_k: usize,
    pub seed: u64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        SurrogateConfig {
            samples: 1000,
            sigma: 0.25,
            lambda: 1.0,
            top_k: 3,
            seed: 0,
        }
    }
}

impl SurrogateConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 10 {
            return Err(Error::InvalidArgument("surrogate needs at least 10 samples".into()));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::InvalidArgument("surrogate sigma must be positive".into()));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::InvalidArgument("surrogate lambda must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureEvidence {
    pub feature: FeatureId,
    pub table: Table,
    pub weight: f64,
    /// 1-based.
    pub rank: usize,
}

/// `exp(-(hamming/width)² / σ²)`.
pub fn proximity_kernel(hamming: usize, width: usize, sigma: f64) -> f64 {
    let d = hamming as f64 / width.max(1) as f64;
    (-(d * d) / (sigma * sigma)).exp()
}

/// Weighted ridge fit with an unpenalized intercept; returns the slope
/// coefficients.
pub(crate) fn weighted_ridge(x: &DMatrix<f64>, y: &DVector<f64>, w: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    let (n, m) = x.shape();
    let design = DMatrix::from_fn(n, m + 1, |i, j| if j == 0 { 1.0 } else { x[(i, j - 1)] });
    let weighted = DMatrix::from_fn(n, m + 1, |i, j| design[(i, j)] * w[i]);
    let mut gram = design.transpose() * &weighted;
    for j in 1..=m {
        gram[(j, j)] += lambda;
    }
    let rhs = weighted.transpose() * y;
    let beta = match gram.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => gram
            .svd(true, true)
            .solve(&rhs, 1e-12)
            .map_err(|e| Error::Data(format!("surrogate regression failed: {e}")))?,
    };
    Ok(beta.rows(1, m).into_owned())
}

/// Local surrogate explanation of `predict` around `bits` for one code.
/// Perturbations switch each active bit off with probability 0.5; inactive
/// bits stay off. Returns the top-k active features by |coefficient|.
pub fn explain_tabular<F>(
    predict: F,
    bits: &[bool],
    features: &[FeatureId],
    config: &SurrogateConfig,
) -> Result<Vec<FeatureEvidence>>
where
    F: Fn(&[bool]) -> Result<f64>,
{
    config.validate()?;
    if bits.len() != features.len() {
        return Err(Error::Shape(format!("{} bits for {} feature ids", bits.len(), features.len())));
    }
    let active: Vec<usize> = bits.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i).collect();
    if active.is_empty() {
        warn!("instance has no active features; tabular evidence is empty");
        return Ok(Vec::new());
    }
    let m = active.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut x = DMatrix::zeros(config.samples, m);
    let mut y = DVector::zeros(config.samples);
    let mut w = DVector::zeros(config.samples);
    let mut sample = vec![false; bits.len()];
    for i in 0..config.samples {
        let mut flipped = 0;
        for (j, &f) in active.iter().enumerate() {
            let keep = rng.random_bool(0.5);
            sample[f] = keep;
            x[(i, j)] = if keep { 1.0 } else { 0.0 };
            flipped += usize::from(!keep);
        }
        y[i] = predict(&sample)?;
        w[i] = proximity_kernel(flipped, m, config.sigma);
    }
    let coef = weighted_ridge(&x, &y, &w, config.lambda)?;
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| coef[b].abs().total_cmp(&coef[a].abs()).then(a.cmp(&b)));
    Ok(order
        .into_iter()
        .take(config.top_k)
        .enumerate()
        .map(|(r, j)| {
            let feature = features[active[j]].clone();
            FeatureEvidence {
                table: feature.table,
                feature,
                weight: coef[j],
                rank: r + 1,
            }
        })
        .collect())
}
