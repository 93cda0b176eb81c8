use crate::error::{Error, Result};

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Hinge `max(d(a,p) - d(a,n) + margin, 0)` for one triplet.
pub fn triplet_hinge(anchor: &[f64], positive: &[f64], negative: &[f64], margin: f64) -> Result<f64> {
    if anchor.len() != positive.len() || anchor.len() != negative.len() {
        return Err(Error::Shape(format!(
            "triplet dimensions {}, {}, {}",
            anchor.len(),
            positive.len(),
            negative.len()
        )));
    }
    if !(margin > 0.0) {
        return Err(Error::InvalidArgument(format!("margin must be positive, got {margin}")));
    }
    Ok((euclidean(anchor, positive) - euclidean(anchor, negative) + margin).max(0.0))
}

/// Mean hinge over a batch of triplets.
pub fn triplet_loss(anchors: &[Vec<f64>], positives: &[Vec<f64>], negatives: &[Vec<f64>], margin: f64) -> Result<f64> {
    if anchors.len() != positives.len() || anchors.len() != negatives.len() || anchors.is_empty() {
        return Err(Error::Shape("triplet batches must be non-empty and equally long".into()));
    }
    let mut total = 0.0;
    for ((a, p), n) in anchors.iter().zip(positives).zip(negatives) {
        total += triplet_hinge(a, p, n, margin)?;
    }
    Ok(total / anchors.len() as f64)
}

/// Loss and gradients with respect to anchor, positive and negative.
/// A zero distance contributes a zero subgradient.
pub fn triplet_gradient(
    anchor: &[f64],
    positive: &[f64],
    negative: &[f64],
    margin: f64,
) -> Result<(f64, Vec<f64>, Vec<f64>, Vec<f64>)> {
    let loss = triplet_hinge(anchor, positive, negative, margin)?;
    let dim = anchor.len();
    let (mut da, mut dp, mut dn) = (vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]);
    if loss > 0.0 {
        let d_ap = euclidean(anchor, positive);
        let d_an = euclidean(anchor, negative);
        for k in 0..dim {
            if d_ap > 0.0 {
                let g = (anchor[k] - positive[k]) / d_ap;
                da[k] += g;
                dp[k] -= g;
            }
            if d_an > 0.0 {
                let g = (anchor[k] - negative[k]) / d_an;
                da[k] -= g;
                dn[k] += g;
            }
        }
    }
    Ok((loss, da, dp, dn))
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn examples() {
        let a = vec![0.0, 0.0];
        assert_eq!(triplet_hinge(&a, &a, &[2.0, 0.0], 1.0).unwrap(), 0.0);
        assert_eq!(triplet_hinge(&a, &[0.0, 3.0], &[3.0, 0.0], 1.0).unwrap(), 1.0);
        assert!(triplet_hinge(&a, &[1.0], &a, 1.0).is_err());
        assert!(triplet_hinge(&a, &a, &a, 0.0).is_err());
    }

    fn oracle(a: &[Vec<f64>], p: &[Vec<f64>], n: &[Vec<f64>], m: f64) -> f64 {
        let mut s = 0.0;
        for i in 0..a.len() {
            let mut dap = 0.0;
            let mut dan = 0.0;
            for k in 0..a[i].len() {
                dap += (a[i][k] - p[i][k]).powi(2);
                dan += (a[i][k] - n[i][k]).powi(2);
            }
            let v = dap.sqrt() - dan.sqrt() + m;
            if v > 0.0 {
                s += v;
            }
        }
        s / a.len() as f64
    }

    proptest! {
        #[test]
        fn batch_matches_oracle(
            v in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 12), 1..6),
            margin in 0.01f64..3.0,
        ) {
            let split = |r: &Vec<f64>, i: usize| r[i * 4..(i + 1) * 4].to_vec();
            let a: Vec<Vec<f64>> = v.iter().map(|r| split(r, 0)).collect();
            let p: Vec<Vec<f64>> = v.iter().map(|r| split(r, 1)).collect();
            let n: Vec<Vec<f64>> = v.iter().map(|r| split(r, 2)).collect();
            let got = triplet_loss(&a, &p, &n, margin).unwrap();
            prop_assert!(got >= 0.0);
            prop_assert!((got - oracle(&a, &p, &n, margin)).abs() < 1e-9);
            let satisfied = (0..a.len()).all(|i| euclidean(&a[i], &p[i]) + margin <= euclidean(&a[i], &n[i]));
            prop_assert_eq!(got == 0.0, satisfied);
        }

        #[test]
        fn gradient_matches_finite_differences(v in prop::collection::vec(-2.0f64..2.0, 9), k in 0usize..9) {
            let (a, p, n) = (v[0..3].to_vec(), v[3..6].to_vec(), v[6..9].to_vec());
            let (loss, da, dp, dn) = triplet_gradient(&a, &p, &n, 1.0).unwrap();
            prop_assume!(loss > 1e-3);
            prop_assume!(euclidean(&a, &p) > 1e-2 && euclidean(&a, &n) > 1e-2);
            let grad = [da, dp, dn].concat();
            let f = |w: &[f64]| triplet_hinge(&w[0..3], &w[3..6], &w[6..9], 1.0).unwrap();
            let mut plus = v.clone();
            plus[k] += 1e-6;
            let mut minus = v.clone();
            minus[k] -= 1e-6;
            let numeric = (f(&plus) - f(&minus)) / 2e-6;
            prop_assume!(f(&minus) > 0.0);
            prop_assert!((numeric - grad[k]).abs() < 1e-5);
        }
    }
}
