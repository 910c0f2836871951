//! From per-node conditional scores to leaf predictions.
//!
//! Each node predictor outputs the probability that its label is present
//! given that at least one of its parents is. The unconditional probability
//! of a node multiplies that score with a noisy-OR over the parents'
//! unconditional probabilities; the root's parent presence is taken as
//! certain. Predictions are always leaves.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::hierarchy::{Hierarchy, NodeId};

/// `P(node present | x, some parent present)` per node, in node order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalScores(Vec<f64>);

/// `P(node present | x)` per node, in node order.
#[derive(Debug, Clone, PartialEq)]
pub struct UnconditionalScores(Vec<f64>);

fn check_unit_interval(values: &[f64]) -> Result<()> {
    if let Some((i, v)) = values
        .iter()
        .enumerate()
        .find(|(_, v)| !(0.0..=1.0).contains(*v))
    {
        return Err(Error::InvalidParameters(format!(
            "score {v} at position {i} is outside [0, 1]"
        )));
    }
    Ok(())
}

impl ConditionalScores {
    pub fn new(h: &Hierarchy, values: Vec<f64>) -> Result<Self> {
        if values.len() != h.len() {
            return Err(Error::LengthMismatch {
                expected: h.len(),
                actual: values.len(),
            });
        }
        Self::from_values(values)
    }

    /// Range-checked scores whose length is trusted by the caller.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        check_unit_interval(&values)?;
        Ok(ConditionalScores(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl UnconditionalScores {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, node: NodeId) -> f64 {
        self.0[node.index()]
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Evaluates the recursive presence model in topological order.
pub fn unconditional_probs(h: &Hierarchy, cond: &ConditionalScores) -> UnconditionalScores {
    let cond = cond.values();
    assert_eq!(cond.len(), h.len(), "scores built for another hierarchy");
    let mut out = vec![0.0f64; h.len()];
    for &node in h.topological_order() {
        let parent_present = match h.parents(node) {
            [] => 1.0,
            [p] => out[p.index()],
            // 1 - prod(1 - u) without cancellation for small u
            parents => -parents
                .iter()
                .map(|p| (-out[p.index()]).ln_1p())
                .sum::<f64>()
                .exp_m1(),
        };
        out[node.index()] = cond[node.index()] * parent_present;
    }
    UnconditionalScores(out)
}

/// Descending by score, ties by node order.
fn rank_desc(scores: &[f64], a: NodeId, b: NodeId) -> Ordering {
    scores[b.index()]
        .total_cmp(&scores[a.index()])
        .then(a.cmp(&b))
}

/// Leaves sorted by decreasing unconditional probability.
pub fn rank_leaves(h: &Hierarchy, uncond: &UnconditionalScores) -> Vec<NodeId> {
    let mut leaves = h.leaves().to_vec();
    leaves.sort_by(|&a, &b| rank_desc(uncond.values(), a, b));
    leaves
}

pub fn predict_leaf(h: &Hierarchy, cond: &ConditionalScores) -> NodeId {
    let uncond = unconditional_probs(h, cond);
    h.leaves()
        .iter()
        .copied()
        .min_by(|&a, &b| rank_desc(uncond.values(), a, b))
        .expect("hierarchy has at least one leaf")
}

pub fn top_k_leaves(h: &Hierarchy, cond: &ConditionalScores, k: usize) -> Result<Vec<NodeId>> {
    let n_leaves = h.leaves().len();
    if k == 0 || k > n_leaves {
        return Err(Error::KTooLarge {
            k,
            leaves: n_leaves,
        });
    }
    let mut ranked = rank_leaves(h, &unconditional_probs(h, cond));
    ranked.truncate(k);
    Ok(ranked)
}
