use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Growth limits for one tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeParams {
    pub max_depth: usize,
    /// Minimum summed sample weight on each side of a split.
    pub min_leaf_weight: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 12,
            min_leaf_weight: 5.0,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_leaf_weight >= 0.0) {
            return Err(Error::InvalidArgument("min_leaf_weight must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        feature_id: String,
        /// Child for samples with the bit off.
        off: usize,
        on: usize,
    },
    Leaf {
        probability: f64,
        weight_positive: f64,
        weight_negative: f64,
    },
}

/// Binary tree in arena form; node 0 is the root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
}

impl DecisionTree {
    pub fn constant(probability: f64) -> Self {
        DecisionTree {
            nodes: vec![TreeNode::Leaf {
                probability,
                weight_positive: 0.0,
                weight_negative: 0.0,
            }],
        }
    }

    pub fn predict(&self, bits: &[bool]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Leaf { probability, .. } => return *probability,
                TreeNode::Split { feature, off, on, .. } => {
                    i = if bits[*feature] { *on } else { *off };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &DecisionTree, i: usize) -> usize {
            match &t.nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { off, on, .. } => 1 + walk(t, *off).max(walk(t, *on)),
            }
        }
        walk(self, 0)
    }

    /// Feature indices used by at least one split.
    pub fn used_features(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                TreeNode::Split { feature, .. } => Some(*feature),
                TreeNode::Leaf { .. } => None,
            })
            .collect();
        f.sort_unstable();
        f.dedup();
        f
    }

    pub(crate) fn check(&self, width: usize) -> Result<()> {
        let n = self.nodes.len();
        if n == 0 {
            return Err(Error::Data("tree has no nodes".into()));
        }
        for node in &self.nodes {
            if let TreeNode::Split { feature, off, on, .. } = node {
                if *feature >= width || *off >= n || *on >= n {
                    return Err(Error::Data("tree node refers outside the model".into()));
                }
            }
        }
        Ok(())
    }
}

/// Column-major copy of the training bits with a permutation-invariant
/// rank per column, used to break gain ties.
pub struct TrainingColumns {
    columns: Vec<Vec<bool>>,
    rank: Vec<usize>,
    n_rows: usize,
}

impl TrainingColumns {
    pub fn new(rows: &[Vec<bool>], width: usize) -> Result<Self> {
        if let Some(r) = rows.iter().find(|r| r.len() != width) {
            return Err(Error::Shape(format!("feature row has {} bits, expected {width}", r.len())));
        }
        let columns: Vec<Vec<bool>> = (0..width).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
        let mut order: Vec<usize> = (0..width).collect();
        order.sort_by(|&a, &b| columns[a].cmp(&columns[b]).then(a.cmp(&b)));
        let mut rank = vec![0; width];
        for (r, &j) in order.iter().enumerate() {
            rank[j] = r;
        }
        Ok(TrainingColumns {
            columns,
            rank,
            n_rows: rows.len(),
        })
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }
}

fn gini_mass(wp: f64, wn: f64) -> f64 {
    let w = wp + wn;
    if w <= 0.0 {
        return 0.0;
    }
    // w * (1 - p² - n²) = 2·wp·wn / w
    2.0 * wp * wn / w
}

struct Grower<'a> {
    data: &'a TrainingColumns,
    labels: &'a [bool],
    weights: &'a [f64],
    names: &'a [String],
    params: &'a TreeParams,
    nodes: Vec<TreeNode>,
}

impl Grower<'_> {
    fn grow(&mut self, rows: &[usize], depth: usize) -> usize {
        let (mut wp, mut wn) = (0.0, 0.0);
        for &i in rows {
            if self.labels[i] {
                wp += self.weights[i];
            } else {
                wn += self.weights[i];
            }
        }
        let id = self.nodes.len();
        self.nodes.push(TreeNode::Leaf {
            probability: if wp + wn > 0.0 { wp / (wp + wn) } else { 0.0 },
            weight_positive: wp,
            weight_negative: wn,
        });
        if depth >= self.params.max_depth || wp == 0.0 || wn == 0.0 {
            return id;
        }
        let parent = gini_mass(wp, wn);
        let mut best: Option<(f64, usize)> = None;
        for f in 0..self.data.width() {
            let col = &self.data.columns[f];
            let (mut p1, mut n1) = (0.0, 0.0);
            for &i in rows {
                if col[i] {
                    if self.labels[i] {
                        p1 += self.weights[i];
                    } else {
                        n1 += self.weights[i];
                    }
                }
            }
            let (p0, n0) = (wp - p1, wn - n1);
            if p1 + n1 < self.params.min_leaf_weight || p0 + n0 < self.params.min_leaf_weight {
                continue;
            }
            if p1 + n1 <= 0.0 || p0 + n0 <= 0.0 {
                continue;
            }
            let gain = parent - gini_mass(p1, n1) - gini_mass(p0, n0);
            let tol = 1e-12 * parent.max(1.0);
            if gain <= tol {
                continue;
            }
            let better = match best {
                None => true,
                Some((g, b)) => gain > g || (gain == g && self.data.rank[f] < self.data.rank[b]),
            };
            if better {
                best = Some((gain, f));
            }
        }
        let Some((_, feature)) = best else {
            return id;
        };
        let col = &self.data.columns[feature];
        let (on_rows, off_rows): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| col[i]);
        let off = self.grow(&off_rows, depth + 1);
        let on = self.grow(&on_rows, depth + 1);
        self.nodes[id] = TreeNode::Split {
            feature,
            feature_id: self.names[feature].clone(),
            off,
            on,
        };
        id
    }
}

/// Balanced class weights N/(2·count) for one code; `None` when a class is
/// absent.
pub fn balanced_weights(labels: &[bool]) -> Option<(f64, f64)> {
    let n = labels.len() as f64;
    let pos = labels.iter().filter(|&&l| l).count() as f64;
    let neg = n - pos;
    (pos > 0.0 && neg > 0.0).then(|| (n / (2.0 * pos), n / (2.0 * neg)))
}

/// Fits one class-weighted Gini tree for a binary target. A target with a
/// single class yields a constant leaf.
pub fn fit_tree(data: &TrainingColumns, labels: &[bool], names: &[String], params: &TreeParams) -> Result<DecisionTree> {
    params.validate()?;
    if labels.len() != data.n_rows() || names.len() != data.width() {
        return Err(Error::Shape(format!(
            "{} labels and {} names for {} rows of {} features",
            labels.len(),
            names.len(),
            data.n_rows(),
            data.width()
        )));
    }
    if labels.is_empty() {
        return Err(Error::Data("cannot fit a tree on zero rows".into()));
    }
    let Some((w_pos, w_neg)) = balanced_weights(labels) else {
        let p = if labels[0] { 1.0 } else { 0.0 };
        return Ok(DecisionTree::constant(p));
    };
    let weights: Vec<f64> = labels.iter().map(|&l| if l { w_pos } else { w_neg }).collect();
    let mut grower = Grower {
        data,
        labels,
        weights: &weights,
        names,
        params,
        nodes: Vec::new(),
    };
    let rows: Vec<usize> = (0..labels.len()).collect();
    grower.grow(&rows, 0);
    Ok(DecisionTree { nodes: grower.nodes })
}

/// One tree per label column. `labels[i][j]` is code j of row i.
pub fn fit_trees(
    rows: &[Vec<bool>],
    labels: &[Vec<bool>],
    names: &[String],
    code_ids: &[String],
    params: &TreeParams,
) -> Result<Vec<DecisionTree>> {
    if rows.len() != labels.len() {
        return Err(Error::Shape(format!("{} feature rows but {} label rows", rows.len(), labels.len())));
    }
    let data = TrainingColumns::new(rows, names.len())?;
    let mut trees = Vec::with_capacity(code_ids.len());
    for (j, code) in code_ids.iter().enumerate() {
        let y: Vec<bool> = labels
            .iter()
            .map(|l| {
                l.get(j)
                    .copied()
                    .ok_or_else(|| Error::Shape(format!("label rows must have {} entries", code_ids.len())))
            })
            .collect::<Result<_>>()?;
        if balanced_weights(&y).is_none() {
            warn!("code {code} has a single class in training data; its tree is a constant leaf");
        }
        trees.push(fit_tree(&data, &y, names, params)?);
    }
    Ok(trees)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn learns_a_single_informative_bit() {
        let rows: Vec<Vec<bool>> = (0..40).map(|i| vec![i % 3 == 0, i % 2 == 0]).collect();
        let labels: Vec<bool> = rows.iter().map(|r| r[1]).collect();
        let data = TrainingColumns::new(&rows, 2).unwrap();
        let t = fit_tree(&data, &labels, &names(2), &TreeParams::default()).unwrap();
        assert_eq!(t.used_features(), vec![1]);
        assert_eq!(t.predict(&[false, true]), 1.0);
        assert_eq!(t.predict(&[true, false]), 0.0);
    }

    #[test]
    fn single_class_gives_constant_leaf() {
        let rows = vec![vec![true], vec![false]];
        let data = TrainingColumns::new(&rows, 1).unwrap();
        let t = fit_tree(&data, &[false, false], &names(1), &TreeParams::default()).unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.predict(&[true]), 0.0);
        let t = fit_tree(&data, &[true, true], &names(1), &TreeParams::default()).unwrap();
        assert_eq!(t.predict(&[false]), 1.0);
    }

    #[test]
    fn identical_features_with_mixed_labels_give_balanced_leaf() {
        let rows = vec![vec![true, false]; 10];
        let labels: Vec<bool> = (0..10).map(|i| i < 3).collect();
        let data = TrainingColumns::new(&rows, 2).unwrap();
        let t = fit_tree(&data, &labels, &names(2), &TreeParams::default()).unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert!((t.predict(&[true, false]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn depth_and_leaf_weight_limits_hold() {
        let rows: Vec<Vec<bool>> = (0..64u32).map(|i| (0..6).map(|b| i & (1 << b) != 0).collect()).collect();
        let labels: Vec<bool> = (0..64u32).map(|i| i.count_ones() % 2 == 1).collect();
        let data = TrainingColumns::new(&rows, 6).unwrap();
        let params = TreeParams {
            max_depth: 3,
            min_leaf_weight: 5.0,
        };
        let t = fit_tree(&data, &labels, &names(6), &params).unwrap();
        assert!(t.depth() <= 3);
        for n in &t.nodes {
            if let TreeNode::Leaf {
                weight_positive,
                weight_negative,
                ..
            } = n
            {
                assert!(weight_positive + weight_negative >= 5.0 - 1e-9);
            }
        }
    }

    #[test]
    fn root_split_matches_brute_force_gini() {
        let rows: Vec<Vec<bool>> = (0..30u32).map(|i| vec![i % 2 == 0, i % 5 < 2, i % 7 < 4]).collect();
        let labels: Vec<bool> = (0..30u32).map(|i| i % 5 < 2 || i % 7 == 0).collect();
        let (wp, wn) = balanced_weights(&labels).unwrap();
        let impurity = |idx: &[usize]| {
            let p: f64 = idx.iter().filter(|&&i| labels[i]).map(|_| wp).sum();
            let n: f64 = idx.iter().filter(|&&i| !labels[i]).map(|_| wn).sum();
            let w = p + n;
            w * (1.0 - (p / w).powi(2) - (n / w).powi(2))
        };
        let all: Vec<usize> = (0..30).collect();
        let best = (0..3)
            .min_by(|&a, &b| {
                let score = |f: usize| {
                    let (on, off): (Vec<usize>, Vec<usize>) = all.iter().partition(|&&i| rows[i][f]);
                    impurity(&on) + impurity(&off)
                };
                score(a).partial_cmp(&score(b)).unwrap()
            })
            .unwrap();
        let data = TrainingColumns::new(&rows, 3).unwrap();
        let t = fit_tree(&data, &labels, &names(3), &TreeParams::default()).unwrap();
        match &t.nodes[0] {
            TreeNode::Split { feature, .. } => assert_eq!(*feature, best),
            other => panic!("expected a split, got {other:?}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn predictions_ignore_column_order(
            seed_rows in prop::collection::vec(prop::collection::vec(any::<bool>(), 6), 12..40),
            seed_labels in prop::collection::vec(any::<bool>(), 40),
            perm in Just((0..6usize).collect::<Vec<_>>()).prop_shuffle(),
            queries in prop::collection::vec(prop::collection::vec(any::<bool>(), 6), 1..10),
        ) {
            let labels = &seed_labels[..seed_rows.len()];
            let columns: Vec<Vec<bool>> = (0..6).map(|j| seed_rows.iter().map(|r| r[j]).collect()).collect();
            let mut distinct = columns.clone();
            distinct.sort();
            distinct.dedup();
            prop_assume!(distinct.len() == 6);
            let params = TreeParams { max_depth: 12, min_leaf_weight: 1.0 };
            let permute = |r: &Vec<bool>| perm.iter().map(|&p| r[p]).collect::<Vec<bool>>();
            let a = TrainingColumns::new(&seed_rows, 6).unwrap();
            let b_rows: Vec<Vec<bool>> = seed_rows.iter().map(permute).collect();
            let b = TrainingColumns::new(&b_rows, 6).unwrap();
            let ta = fit_tree(&a, labels, &names(6), &params).unwrap();
            let tb = fit_tree(&b, labels, &names(6), &params).unwrap();
            for q in queries.iter().chain(&seed_rows) {
                let pa = ta.predict(q);
                let pb = tb.predict(&permute(q));
                prop_assert_eq!(pa, pb);
                prop_assert!((0.0..=1.0).contains(&pa));
            }
        }
    }
}
