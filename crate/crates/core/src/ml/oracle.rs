//! Exhaustive reference implementation of tree induction.
//!
//! Shares only the output types and the midpoint threshold rule with
//! [`super::tree`]: every
//! candidate `(feature, midpoint)` is materialized, the node is physically
//! partitioned by the routing rule, and impurity decrease is evaluated from
//! the textbook Gini definition in exact rational arithmetic. Quadratic per
//! node, intended for small datasets.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::features::{Dataset, N_FEATURES};

use super::tree::{TreeConfig, TreeModel, TreeNode};

#[derive(Debug, Clone, Copy)]
struct Ratio {
    num: i128,
    den: i128,
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

impl Ratio {
    fn new(num: i128, den: i128) -> Self {
        let g = gcd(num, den).max(1);
        let s = if den < 0 { -1 } else { 1 };
        Ratio { num: s * num / g, den: s * den / g }
    }
    fn int(v: i128) -> Self {
        Ratio { num: v, den: 1 }
    }
    fn add(self, o: Ratio) -> Ratio {
        Ratio::new(self.num * o.den + o.num * self.den, self.den * o.den)
    }
    fn sub(self, o: Ratio) -> Ratio {
        Ratio::new(self.num * o.den - o.num * self.den, self.den * o.den)
    }
    fn mul(self, o: Ratio) -> Ratio {
        Ratio::new(self.num * o.num, self.den * o.den)
    }
    fn cmp(self, o: Ratio) -> Ordering {
        (self.num * o.den).cmp(&(o.num * self.den))
    }
}

/// `1 - p_drone^2 - p_terrestrial^2`.
fn gini(labels: &[bool]) -> Ratio {
    let n = labels.len() as i128;
    let d = labels.iter().filter(|&&l| l).count() as i128;
    let p = Ratio::new(d, n);
    let q = Ratio::new(n - d, n);
    Ratio::int(1).sub(p.mul(p)).sub(q.mul(q))
}

struct Candidate {
    feature: usize,
    threshold: f64,
    decrease: Ratio,
}

fn better(c: &Candidate, incumbent: &Candidate) -> bool {
    match c.decrease.cmp(incumbent.decrease) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => (c.feature, c.threshold) < (incumbent.feature, incumbent.threshold),
    }
}

fn build(
    rows: &[([f64; N_FEATURES], bool)],
    depth: usize,
    config: &TreeConfig,
    nodes: &mut Vec<TreeNode>,
) -> usize {
    let labels: Vec<bool> = rows.iter().map(|r| r.1).collect();
    let drones = labels.iter().filter(|&&l| l).count();
    let id = nodes.len();
    let leaf = TreeNode::Leaf { drone_probability: drones as f64 / rows.len() as f64, sample_count: rows.len() };
    if drones == 0 || drones == rows.len() || depth >= config.max_depth {
        nodes.push(leaf);
        return id;
    }

    let parent = gini(&labels);
    let n = rows.len() as i128;
    let mut best: Option<Candidate> = None;
    for feature in 0..N_FEATURES {
        let mut values: Vec<f64> = rows.iter().map(|r| r.0[feature]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for pair in values.windows(2) {
            let threshold = super::tree::midpoint(pair[0], pair[1]);
            let left: Vec<bool> = rows.iter().filter(|r| r.0[feature] < threshold).map(|r| r.1).collect();
            let right: Vec<bool> = rows.iter().filter(|r| !(r.0[feature] < threshold)).map(|r| r.1).collect();
            if left.len() < config.min_leaf.max(1) || right.len() < config.min_leaf.max(1) {
                continue;
            }
            let weighted = Ratio::new(left.len() as i128, n)
                .mul(gini(&left))
                .add(Ratio::new(right.len() as i128, n).mul(gini(&right)));
            let c = Candidate { feature, threshold, decrease: parent.sub(weighted) };
            if c.decrease.cmp(Ratio::int(0)) != Ordering::Greater {
                continue;
            }
            if best.as_ref().is_none_or(|b| better(&c, b)) {
                best = Some(c);
            }
        }
    }

    let Some(best) = best else {
        nodes.push(leaf);
        return id;
    };
    nodes.push(leaf);
    let (l, r): (Vec<_>, Vec<_>) = rows.iter().partition(|r| r.0[best.feature] < best.threshold);
    let left = build(&l, depth + 1, config, nodes);
    let right = build(&r, depth + 1, config, nodes);
    nodes[id] = TreeNode::Split { feature: best.feature, threshold: best.threshold, left, right };
    id
}

/// Induce a tree by exhaustive split enumeration.
pub fn brute_force_tree(train: &Dataset, config: &TreeConfig) -> Result<TreeModel> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let rows: Vec<_> = train.samples.iter().map(|s| (s.features.to_array(), s.label.is_drone())).collect();
    let mut nodes = Vec::new();
    build(&rows, 0, config, &mut nodes);
    Ok(TreeModel { nodes, config: *config, standardization: train.standardization })
}
