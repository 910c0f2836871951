//! Synthetic label noise: imprecision (moving labels up the hierarchy) and
//! inaccuracy (swapping leaves).
//!
//! Depth models describe how deep a degraded label should be. A precise
//! dataset is degraded by drawing a target depth per example and walking up
//! from the original label until that depth is reached. Labels never move
//! down: a target at or below the current depth keeps the label.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{require_leaf_labels, LabeledExample};
use crate::error::{Error, Result};
use crate::hierarchy::{Hierarchy, NodeId};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DepthModel {
    /// Mass `q (1 - q)^k` on depth `d_max - k`. `q = 1` keeps every label.
    Geometric {
        q: f64,
        #[serde(default)]
        shift: usize,
    },
    /// Absolute depth drawn from `Poisson(lambda)`.
    Poisson {
        lambda: f64,
        #[serde(default)]
        shift: usize,
    },
    /// Replace a fixed fraction of labels with a direct parent.
    Relabel { fraction: f64 },
    /// No imprecision.
    Benchmark,
}

impl DepthModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DepthModel::Geometric { q, .. } if !(q > 0.0 && q <= 1.0) => Err(
                Error::InvalidParameters(format!("geometric q = {q} is outside (0, 1]")),
            ),
            DepthModel::Poisson { lambda, .. } if !(lambda >= 0.0 && lambda.is_finite()) => Err(
                Error::InvalidParameters(format!("poisson lambda = {lambda} must be >= 0")),
            ),
            DepthModel::Relabel { fraction } => check_fraction(fraction),
            _ => Ok(()),
        }
    }
}

fn check_fraction(fraction: f64) -> Result<()> {
    if (0.0..=1.0).contains(&fraction) {
        Ok(())
    } else {
        Err(Error::InvalidParameters(format!(
            "fraction {fraction} is outside [0, 1]"
        )))
    }
}

fn check_shift(shift: usize, d_max: usize) -> Result<()> {
    if shift > d_max {
        return Err(Error::InvalidParameters(format!(
            "shift {shift} exceeds maximum depth {d_max}"
        )));
    }
    Ok(())
}

fn normalize(mut w: Vec<f64>) -> Result<Vec<f64>> {
    let total: f64 = w.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::InvalidParameters(
            "depth distribution has no mass on the admissible depths".into(),
        ));
    }
    w.iter_mut().for_each(|x| *x /= total);
    Ok(w)
}

/// Target-depth distribution over `0..=d_max`, truncated to the admissible
/// depths `shift..=d_max` and renormalized.
pub fn depth_pmf(model: &DepthModel, d_max: usize) -> Result<Vec<f64>> {
    model.validate()?;
    match *model {
        DepthModel::Geometric { q, shift } => {
            check_shift(shift, d_max)?;
            let mut w = vec![0.0; d_max + 1];
            for k in 0..=(d_max - shift) {
                w[d_max - k] = q * (1.0 - q).powi(k as i32);
            }
            normalize(w)
        }
        DepthModel::Poisson { lambda, shift } => {
            check_shift(shift, d_max)?;
            let mut w = vec![0.0; d_max + 1];
            if lambda == 0.0 {
                w[0] = 1.0;
            } else {
                // log-space; the e^-lambda factor cancels in the normalization
                let logs: Vec<f64> = (0..=d_max)
                    .scan(0.0, |log_fact, d| {
                        if d > 0 {
                            *log_fact += (d as f64).ln();
                        }
                        Some(d as f64 * lambda.ln() - *log_fact)
                    })
                    .collect();
                let top = logs[shift..]
                    .iter()
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max);
                for d in shift..=d_max {
                    w[d] = (logs[d] - top).exp();
                }
            }
            for x in &mut w[..shift] {
                *x = 0.0;
            }
            normalize(w)
        }
        DepthModel::Benchmark => {
            let mut w = vec![0.0; d_max + 1];
            w[d_max] = 1.0;
            Ok(w)
        }
        DepthModel::Relabel { .. } => Err(Error::InvalidParameters(
            "the relabel model has no depth distribution".into(),
        )),
    }
}

/// Walks up from `y`, choosing uniformly among parents, until a node at
/// `target_depth` is reached. Returns `y` when it is not deeper than the
/// target.
pub fn imprecisify_label<R: Rng + ?Sized>(
    h: &Hierarchy,
    y: NodeId,
    target_depth: usize,
    rng: &mut R,
) -> Result<NodeId> {
    let mut current = h.check(y)?;
    // a parent is at most one level shallower than its child, so the walk
    // cannot skip over the target depth
    while h.depth(current) > target_depth {
        current = *h
            .parents(current)
            .choose(rng)
            .expect("non-root node has a parent");
    }
    Ok(current)
}

/// Replaces the labels of exactly `round(fraction * N)` examples with one of
/// their direct parents. Root labels have no parent and stay unchanged.
pub fn relabel_parents(
    h: &Hierarchy,
    dataset: &[LabeledExample],
    fraction: f64,
    seed: u64,
) -> Result<Vec<LabeledExample>> {
    check_fraction(fraction)?;
    let chosen = seed::exact_subset(
        dataset.iter().map(|e| e.id.as_str()),
        fraction,
        seed,
        "relabel",
    );
    let mut out = dataset.to_vec();
    for i in chosen {
        let example = &mut out[i];
        let label = h.id(&example.label)?;
        let mut rng = seed::derive_rng(seed, "relabel-parent", &example.id);
        if let Some(&parent) = h.parents(label).choose(&mut rng) {
            example.label = h.name(parent).to_string();
        }
    }
    Ok(out)
}

/// Swaps the labels of exactly `round(fraction * N)` examples for a uniformly
/// drawn different leaf.
pub fn inject_inaccuracy(
    h: &Hierarchy,
    dataset: &[LabeledExample],
    fraction: f64,
    seed: u64,
) -> Result<Vec<LabeledExample>> {
    Ok(inject_inaccuracy_counted(h, dataset, fraction, seed)?.0)
}

fn inject_inaccuracy_counted(
    h: &Hierarchy,
    dataset: &[LabeledExample],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<LabeledExample>, usize)> {
    check_fraction(fraction)?;
    require_leaf_labels(h, dataset)?;
    let chosen = seed::exact_subset(
        dataset.iter().map(|e| e.id.as_str()),
        fraction,
        seed,
        "inaccuracy",
    );
    if !chosen.is_empty() && h.leaves().len() < 2 {
        return Err(Error::InvalidParameters(
            "inaccuracy needs at least two leaves".into(),
        ));
    }
    let mut out = dataset.to_vec();
    for &i in &chosen {
        let example = &mut out[i];
        let current = h.id(&example.label)?;
        let mut rng = seed::derive_rng(seed, "inaccuracy-label", &example.id);
        // uniform over the other leaves
        let leaves = h.leaves();
        let pos = leaves.binary_search(&current).expect("leaf label");
        let mut pick = rng.random_range(0..leaves.len() - 1);
        if pick >= pos {
            pick += 1;
        }
        example.label = h.name(leaves[pick]).to_string();
    }
    Ok((out, chosen.len()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Degraded {
    pub examples: Vec<LabeledExample>,
    /// Examples whose leaf label was swapped before imprecision.
    pub confused: usize,
    /// Examples whose label moved up the hierarchy.
    pub imprecise: usize,
}

/// Applies inaccuracy (if `inaccuracy > 0`) and then the depth model.
pub fn degrade_dataset(
    h: &Hierarchy,
    dataset: &[LabeledExample],
    model: &DepthModel,
    inaccuracy: f64,
    seed: u64,
) -> Result<Degraded> {
    model.validate()?;
    let (confused_set, confused) = if inaccuracy > 0.0 {
        inject_inaccuracy_counted(h, dataset, inaccuracy, seed)?
    } else {
        check_fraction(inaccuracy)?;
        (dataset.to_vec(), 0)
    };

    let examples = match *model {
        DepthModel::Benchmark => confused_set.clone(),
        DepthModel::Relabel { fraction } => relabel_parents(h, &confused_set, fraction, seed)?,
        DepthModel::Geometric { .. } | DepthModel::Poisson { .. } => {
            let pmf = depth_pmf(model, h.max_depth())?;
            let sampler =
                WeightedIndex::new(&pmf).map_err(|e| Error::InvalidParameters(e.to_string()))?;
            confused_set
                .iter()
                .map(|e| {
                    let mut rng = seed::derive_rng(seed, "depth", &e.id);
                    let target = sampler.sample(&mut rng);
                    let label = imprecisify_label(h, h.id(&e.label)?, target, &mut rng)?;
                    Ok(LabeledExample {
                        label: h.name(label).to_string(),
                        ..e.clone()
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    let imprecise = examples
        .iter()
        .zip(&confused_set)
        .filter(|(a, b)| a.label != b.label)
        .count();
    Ok(Degraded {
        examples,
        confused,
        imprecise,
    })
}

/// Draws one target depth from a pmf produced by [`depth_pmf`].
pub fn sample_depth<R: Rng + ?Sized>(pmf: &[f64], rng: &mut R) -> Result<usize> {
    let sampler = WeightedIndex::new(pmf).map_err(|e| Error::InvalidParameters(e.to_string()))?;
    Ok(sampler.sample(rng))
}
