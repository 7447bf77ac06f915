//! CART classification tree with Gini impurity.
//!
//! Candidate thresholds are midpoints between consecutive distinct values of
//! a feature. Split quality is compared exactly in integer arithmetic: for a
//! partition into children with class counts `(a_c, b_c)` and sizes `n_c`,
//! the weighted child Gini is `1 - (1/n) * sum_c (a_c^2 + b_c^2) / n_c`, so the
//! best split maximizes `S = sum_c (a_c^2 + b_c^2) / n_c`. Ties go to the
//! lower feature index, then the lower threshold. A node is split only when
//! the best `S` strictly exceeds the parent's `(a^2 + b^2) / n`.
//!
//! Nodes are stored in preorder: a split is followed by its whole left
//! subtree, then its right subtree.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Dataset, FeatureVector, Standardization, N_FEATURES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self { max_depth: 6, min_leaf: 5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    /// Inputs with `x[feature] < threshold` go left, the rest right.
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { drone_probability: f64, sample_count: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub nodes: Vec<TreeNode>,
    pub config: TreeConfig,
    /// When set, raw inputs are standardized before routing.
    pub standardization: Option<Standardization>,
}

/// `(a^2 + b^2) / n` as an exact fraction.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Purity {
    num: u128,
    den: u128,
}

impl Purity {
    pub(crate) fn of_counts(counts: &[(u64, u64)]) -> Self {
        // sum_c (a_c^2 + b_c^2) / n_c over a common denominator
        let mut num: u128 = 0;
        let mut den: u128 = 1;
        for &(a, b) in counts {
            let n = u128::from(a + b);
            let sq = u128::from(a) * u128::from(a) + u128::from(b) * u128::from(b);
            num = num * n + sq * den;
            den *= n;
        }
        Self { num, den }
    }

    fn cmp(&self, other: &Self) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = (lo + hi) / 2.0;
    // Adjacent floats can round the midpoint down onto `lo`.
    if mid > lo {
        mid
    } else {
        hi
    }
}

struct Builder<'a> {
    xs: &'a [[f64; N_FEATURES]],
    drone: &'a [bool],
    config: TreeConfig,
    nodes: Vec<TreeNode>,
}

impl Builder<'_> {
    fn leaf(&self, idx: &[usize]) -> TreeNode {
        let pos = idx.iter().filter(|&&i| self.drone[i]).count();
        TreeNode::Leaf { drone_probability: pos as f64 / idx.len() as f64, sample_count: idx.len() }
    }

    fn best_split(&self, idx: &[usize]) -> Option<(usize, f64)> {
        let n = idx.len();
        let pos_total = idx.iter().filter(|&&i| self.drone[i]).count() as u64;
        let neg_total = n as u64 - pos_total;
        let min_leaf = self.config.min_leaf.max(1);
        let mut best: Option<(Purity, usize, f64)> = None;
        let mut sorted = idx.to_vec();
        for f in 0..N_FEATURES {
            sorted.sort_by(|&a, &b| self.xs[a][f].total_cmp(&self.xs[b][f]));
            let mut pos_left = 0u64;
            for i in 1..n {
                if self.drone[sorted[i - 1]] {
                    pos_left += 1;
                }
                let (lo, hi) = (self.xs[sorted[i - 1]][f], self.xs[sorted[i]][f]);
                if !(lo < hi) || i < min_leaf || n - i < min_leaf {
                    continue;
                }
                let neg_left = i as u64 - pos_left;
                let s = Purity::of_counts(&[(pos_left, neg_left), (pos_total - pos_left, neg_total - neg_left)]);
                // Scan order is (feature, threshold) ascending, so only a
                // strict improvement displaces the incumbent.
                if best.as_ref().is_none_or(|(b, _, _)| s.cmp(b) == Ordering::Greater) {
                    best = Some((s, f, midpoint(lo, hi)));
                }
            }
        }
        let parent = Purity::of_counts(&[(pos_total, neg_total)]);
        best.filter(|(s, _, _)| s.cmp(&parent) == Ordering::Greater).map(|(_, f, t)| (f, t))
    }

    fn grow(&mut self, idx: &[usize], depth: usize) -> usize {
        let id = self.nodes.len();
        let pos = idx.iter().filter(|&&i| self.drone[i]).count();
        let pure = pos == 0 || pos == idx.len();
        let split = if pure || depth >= self.config.max_depth { None } else { self.best_split(idx) };
        let Some((feature, threshold)) = split else {
            self.nodes.push(self.leaf(idx));
            return id;
        };
        self.nodes.push(TreeNode::Leaf { drone_probability: 0.0, sample_count: 0 });
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.xs[i][feature] < threshold);
        let left = self.grow(&l, depth + 1);
        let right = self.grow(&r, depth + 1);
        self.nodes[id] = TreeNode::Split { feature, threshold, left, right };
        id
    }
}

pub fn train_tree(train: &Dataset, config: &TreeConfig) -> Result<TreeModel> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let xs: Vec<[f64; N_FEATURES]> = train.samples.iter().map(|s| s.features.to_array()).collect();
    if xs.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let drone: Vec<bool> = train.samples.iter().map(|s| s.label.is_drone()).collect();
    let mut b = Builder { xs: &xs, drone: &drone, config: *config, nodes: Vec::new() };
    let all: Vec<usize> = (0..xs.len()).collect();
    b.grow(&all, 0);
    Ok(TreeModel { nodes: b.nodes, config: *config, standardization: train.standardization })
}

impl TreeModel {
    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
    }

    /// Length of the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn route(&self, x: &[f64; N_FEATURES]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { drone_probability, .. } => return drone_probability,
                TreeNode::Split { feature, threshold, left, right } => {
                    i = if x[feature] < threshold { left } else { right };
                }
            }
        }
    }

    /// Structural checks for models loaded from outside: children follow
    /// their parent in preorder, every node is reachable exactly once, and
    /// leaf probabilities lie in `[0, 1]`.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::MalformedModel(m));
        if self.nodes.is_empty() {
            return bad("tree has no nodes".into());
        }
        let mut seen = vec![false; self.nodes.len()];
        seen[0] = true;
        for (i, node) in self.nodes.iter().enumerate() {
            match *node {
                TreeNode::Leaf { drone_probability, .. } => {
                    if !(0.0..=1.0).contains(&drone_probability) {
                        return bad(format!("node {i}: probability {drone_probability} outside [0, 1]"));
                    }
                }
                TreeNode::Split { feature, threshold, left, right } => {
                    if feature >= N_FEATURES {
                        return bad(format!("node {i}: feature index {feature} out of range"));
                    }
                    if !threshold.is_finite() {
                        return bad(format!("node {i}: non-finite threshold"));
                    }
                    for child in [left, right] {
                        if child <= i || child >= self.nodes.len() {
                            return bad(format!("node {i}: child index {child} invalid"));
                        }
                        if std::mem::replace(&mut seen[child], true) {
                            return bad(format!("node {child} has more than one parent"));
                        }
                    }
                }
            }
        }
        if let Some(orphan) = seen.iter().position(|s| !s) {
            return bad(format!("node {orphan} is unreachable"));
        }
        Ok(())
    }
}

pub fn predict_proba_tree(model: &TreeModel, features: &FeatureVector) -> Result<f64> {
    if !features.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    let x = match &model.standardization {
        Some(s) => s.apply(features),
        None => *features,
    };
    Ok(model.route(&x.to_array()))
}
