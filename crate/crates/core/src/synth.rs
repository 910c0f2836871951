//! Synthetic hierarchies and datasets for desk-scale experiments.
//!
//! [`SyntheticConfig`] builds a balanced tree and one Gaussian cluster per
//! leaf. Every non-root node owns one feature axis; a leaf's center is the
//! sum of `step * e_axis` over the nodes on its root path, where
//! `step = margin * sigma / sqrt(2)`. Two sibling leaves therefore sit exactly
//! `margin * sigma` apart and leaves from different subtrees are farther
//! apart, so feature similarity follows the hierarchy.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::LabeledExample;
use crate::error::{Error, Result};
use crate::hierarchy::Hierarchy;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    /// Children per node at each level, root first.
    pub branching: Vec<usize>,
    pub train_per_leaf: usize,
    pub val_per_leaf: usize,
    pub sigma: f64,
    /// Distance between sibling leaf centers, in units of `sigma`.
    pub margin: f64,
    /// Extra pure-noise feature dimensions.
    pub noise_dims: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            branching: vec![2, 2, 2],
            train_per_leaf: 200,
            val_per_leaf: 100,
            sigma: 1.0,
            margin: 2.0,
            noise_dims: 0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub hierarchy: Hierarchy,
    pub train: Vec<LabeledExample>,
    pub val: Vec<LabeledExample>,
}

/// Balanced tree with node names `root`, `n0`, `n0.1`, `n0.1.0`, ...
pub fn balanced_tree(branching: &[usize]) -> Result<Hierarchy> {
    if branching.is_empty() || branching.contains(&0) {
        return Err(Error::InvalidParameters(
            "branching factors must be a non-empty list of positive integers".into(),
        ));
    }
    let mut edges = Vec::new();
    let mut level = vec!["root".to_string()];
    for &b in branching {
        let mut next = Vec::with_capacity(level.len() * b);
        for parent in &level {
            for i in 0..b {
                let child = if parent == "root" {
                    format!("n{i}")
                } else {
                    format!("{parent}.{i}")
                };
                edges.push((child.clone(), parent.clone()));
                next.push(child);
            }
        }
        level = next;
    }
    Hierarchy::from_edges(edges)
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite() && self.margin >= 0.0) {
            return Err(Error::InvalidParameters(
                "sigma must be positive and margin non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn generate(&self) -> Result<SyntheticData> {
        self.validate()?;
        let h = balanced_tree(&self.branching)?;
        // one axis per non-root node, in node order
        let mut axis = vec![usize::MAX; h.len()];
        let mut dims = 0;
        for n in h.nodes() {
            if n != h.root() {
                axis[n.index()] = dims;
                dims += 1;
            }
        }
        let dim = dims + self.noise_dims;
        let step = self.margin * self.sigma / std::f64::consts::SQRT_2;
        let centers: Vec<Vec<f64>> = h
            .leaves()
            .iter()
            .map(|&leaf| {
                let mut c = vec![0.0; dim];
                c[axis[leaf.index()]] += step;
                for &a in h.ancestors(leaf).expect("leaf") {
                    if a != h.root() {
                        c[axis[a.index()]] += step;
                    }
                }
                c
            })
            .collect();

        let noise =
            Normal::new(0.0, self.sigma).map_err(|e| Error::InvalidParameters(e.to_string()))?;
        let sample = |split: &str, per_leaf: usize| -> Vec<LabeledExample> {
            let mut out = Vec::with_capacity(per_leaf * centers.len());
            let mut rng = seed::rng(self.seed, split);
            for (leaf, center) in h.leaves().iter().zip(&centers) {
                for _ in 0..per_leaf {
                    let features = center.iter().map(|&c| c + noise.sample(&mut rng)).collect();
                    out.push(LabeledExample {
                        id: format!("{split}-{:06}", out.len()),
                        label: h.name(*leaf).to_string(),
                        features,
                    });
                }
            }
            out
        };
        let train = sample("train", self.train_per_leaf);
        let val = sample("val", self.val_per_leaf);
        Ok(SyntheticData {
            hierarchy: h,
            train,
            val,
        })
    }
}

/// Random rooted DAG on `n` nodes named `v0` (root) .. `v{n-1}`. Node `i`
/// gets between one and `max_parents` distinct parents among `v0..v{i-1}`.
pub fn random_dag<R: Rng + ?Sized>(n: usize, max_parents: usize, rng: &mut R) -> Hierarchy {
    assert!(n >= 2, "a hierarchy needs at least one edge");
    let mut edges = Vec::new();
    for i in 1..n {
        let candidates: Vec<usize> = (0..i).collect();
        let k = rng.random_range(1..=max_parents.max(1).min(i));
        for &p in candidates.choose_multiple(rng, k) {
            edges.push((format!("v{i}"), format!("v{p}")));
        }
    }
    Hierarchy::from_edges(edges).expect("valid by construction")
}

/// Linear chain `d0 <- d1 <- ... <- d{depth}` with a single leaf at `depth`.
pub fn chain(depth: usize) -> Hierarchy {
    assert!(depth >= 1);
    Hierarchy::from_edges((1..=depth).map(|i| (format!("d{i}"), format!("d{}", i - 1))))
        .expect("valid by construction")
}
