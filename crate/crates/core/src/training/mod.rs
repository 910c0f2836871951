//! Training of the per-node sigmoid head and of the two softmax baselines.
//!
//! All methods train a head on fixed feature vectors with mini-batch SGD
//! under an [`SgdrSchedule`]. The hierarchical head uses masked binary
//! cross-entropy with the relaxed mask; the baselines use softmax
//! cross-entropy over the leaves after mapping every example to a leaf
//! (dropping imprecise examples, or replacing them by a random leaf below the
//! given label).

pub mod loss;
pub mod model;
pub mod schedule;

use std::collections::HashMap;

use rand::seq::{IndexedRandom, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::data::LabeledExample;
use crate::encoding::{MaskKind, MaskedTarget};
use crate::error::{Error, Result};
use crate::hierarchy::{Hierarchy, NodeId};
use crate::seed;

pub use loss::{masked_bce_grad, masked_bce_loss, sigmoid, softmax, EPS};
pub use model::{load_checkpoint, save_checkpoint, score, Dense, HeadKind, HeadModel, Scores};
pub use schedule::{sgdr_lr, SgdrSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Chillax,
    LeavesOnly,
    RandomLeaf,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Chillax, Method::LeavesOnly, Method::RandomLeaf];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Chillax => "chillax",
            Method::LeavesOnly => "leaves-only",
            Method::RandomLeaf => "random-leaf",
        }
    }

    pub fn head_kind(self) -> HeadKind {
        match self {
            Method::Chillax => HeadKind::Chillax,
            Method::LeavesOnly | Method::RandomLeaf => HeadKind::SoftmaxLeaves,
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s || m.as_str().replace('-', "_") == s)
            .ok_or_else(|| Error::InvalidParameters(format!("unknown method {s:?}")))
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub schedule: SgdrSchedule,
    pub batch_size: usize,
    /// Width of an optional tanh hidden layer.
    #[serde(default)]
    pub hidden: Option<usize>,
    #[serde(default)]
    pub momentum: f64,
    #[serde(default)]
    pub weight_decay: f64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        if self.batch_size == 0 {
            return Err(Error::InvalidParameters(
                "batch size must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.momentum) || self.weight_decay < 0.0 {
            return Err(Error::InvalidParameters(
                "momentum must be in [0, 1) and weight decay non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Maps the dataset to what a method trains on. The baselines only see leaf
/// labels; `random-leaf` draws the replacement leaf from a per-example stream
/// so the result does not depend on dataset order.
pub fn preprocess(
    h: &Hierarchy,
    dataset: &[LabeledExample],
    method: Method,
    seed: u64,
) -> Result<Vec<LabeledExample>> {
    let mut out = Vec::with_capacity(dataset.len());
    for e in dataset {
        let label = h.id(&e.label)?;
        match method {
            Method::Chillax => out.push(e.clone()),
            Method::LeavesOnly => {
                if h.is_leaf(label) {
                    out.push(e.clone());
                }
            }
            Method::RandomLeaf => {
                if h.is_leaf(label) {
                    out.push(e.clone());
                } else {
                    let leaves = h.leaf_descendants(label)?;
                    let mut rng = seed::derive_rng(seed, "random-leaf", &e.id);
                    let leaf = *leaves.choose(&mut rng).expect("inner node has leaves");
                    out.push(LabeledExample {
                        label: h.name(leaf).to_string(),
                        ..e.clone()
                    });
                }
            }
        }
    }
    Ok(out)
}

enum Target<'a> {
    Masked(&'a MaskedTarget),
    Leaf(usize),
}

struct Gradients {
    hidden: Option<model::Dense>,
    output: model::Dense,
}

impl Gradients {
    fn zeros_like(m: &HeadModel) -> Self {
        Gradients {
            hidden: m
                .hidden
                .as_ref()
                .map(|d| model::Dense::zeros(d.inputs, d.outputs)),
            output: model::Dense::zeros(m.output.inputs, m.output.outputs),
        }
    }
}

/// Adds this example's parameter gradient to `grads`, given the gradient of
/// the loss with respect to the output logits. Rows with a zero logit
/// gradient are skipped, so they stay exactly zero.
fn backprop(m: &HeadModel, x: &[f64], act: &[f64], dlogits: &[f64], grads: &mut Gradients) {
    let inputs = m.output.inputs;
    let mut dact = m.hidden.as_ref().map(|d| vec![0.0; d.outputs]);
    for (o, &g) in dlogits.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        grads.output.bias[o] += g;
        let row = &mut grads.output.weights[o * inputs..(o + 1) * inputs];
        for (w, &a) in row.iter_mut().zip(act) {
            *w += g * a;
        }
        if let Some(dact) = dact.as_mut() {
            for (d, &w) in dact.iter_mut().zip(m.output.row(o)) {
                *d += g * w;
            }
        }
    }
    if let (Some(layer), Some(grad), Some(dact)) = (&m.hidden, grads.hidden.as_mut(), dact) {
        for (j, (&da, &a)) in dact.iter().zip(act).enumerate() {
            let dz = da * (1.0 - a * a);
            if dz == 0.0 {
                continue;
            }
            grad.bias[j] += dz;
            let row = &mut grad.weights[j * layer.inputs..(j + 1) * layer.inputs];
            for (w, &v) in row.iter_mut().zip(x) {
                *w += dz * v;
            }
        }
    }
}

fn sgd_update(
    params: &mut model::Dense,
    grad: &model::Dense,
    velocity: &mut model::Dense,
    lr: f64,
    scale: f64,
    cfg: &TrainConfig,
) {
    let pairs = params
        .weights
        .iter_mut()
        .chain(params.bias.iter_mut())
        .zip(grad.weights.iter().chain(&grad.bias))
        .zip(velocity.weights.iter_mut().chain(velocity.bias.iter_mut()));
    for ((p, &g), v) in pairs {
        let mut g = g * scale;
        if cfg.weight_decay > 0.0 {
            g += cfg.weight_decay * *p;
        }
        if g == 0.0 && *v == 0.0 {
            continue;
        }
        *v = cfg.momentum * *v + g;
        *p -= lr * *v;
    }
}

/// Trains a head for `method` and returns it together with the mean loss of
/// each step.
pub fn train_with_history(
    h: &Hierarchy,
    dataset: &[LabeledExample],
    method: Method,
    cfg: &TrainConfig,
) -> Result<(HeadModel, Vec<f64>)> {
    cfg.validate()?;
    let prepared = preprocess(h, dataset, method, cfg.seed)?;
    if prepared.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let dim = crate::data::validate(h, &prepared)?;

    let leaf_pos: HashMap<NodeId, usize> = h
        .leaves()
        .iter()
        .enumerate()
        .map(|(i, &l)| (l, i))
        .collect();
    let mut cache: HashMap<NodeId, usize> = HashMap::new();
    let mut masked: Vec<MaskedTarget> = Vec::new();
    let mut targets: Vec<usize> = Vec::with_capacity(prepared.len());
    for e in &prepared {
        let label = h.id(&e.label)?;
        let t = match method {
            Method::Chillax => match cache.get(&label) {
                Some(&i) => i,
                None => {
                    masked.push(MaskedTarget::new(h, label, MaskKind::Chillax)?);
                    cache.insert(label, masked.len() - 1);
                    masked.len() - 1
                }
            },
            _ => leaf_pos[&label],
        };
        targets.push(t);
    }
    let target_of = |i: usize| match method {
        Method::Chillax => Target::Masked(&masked[targets[i]]),
        _ => Target::Leaf(targets[i]),
    };

    let mut init_rng = seed::rng(cfg.seed, "init");
    let mut model = HeadModel::init(method.head_kind(), h, dim, cfg.hidden, &mut init_rng);
    let mut velocity = Gradients::zeros_like(&model);

    let mut order: Vec<usize> = (0..prepared.len()).collect();
    let mut batch_rng = seed::rng(cfg.seed, "batches");
    order.shuffle(&mut batch_rng);
    let mut cursor = 0;
    let mut history = Vec::with_capacity(cfg.schedule.total_steps);

    for step in 0..cfg.schedule.total_steps {
        let lr = cfg.schedule.lr(step)?;
        let mut grads = Gradients::zeros_like(&model);
        let mut batch_loss = 0.0;
        let batch = cfg.batch_size.min(prepared.len());
        for _ in 0..batch {
            if cursor == order.len() {
                order.shuffle(&mut batch_rng);
                cursor = 0;
            }
            let i = order[cursor];
            cursor += 1;
            let x = &prepared[i].features;
            let (act, logits) = model.forward(x);
            let dlogits = match target_of(i) {
                Target::Masked(t) => {
                    let probs: Vec<f64> = logits.iter().copied().map(sigmoid).collect();
                    batch_loss += masked_bce_loss(&probs, t)?;
                    masked_bce_grad(&probs, t)?
                }
                Target::Leaf(label) => {
                    let probs = softmax(&logits);
                    batch_loss += loss::softmax_ce_loss(&probs, label);
                    loss::softmax_ce_grad(&probs, label)
                }
            };
            backprop(&model, x, &act, &dlogits, &mut grads);
        }
        let scale = 1.0 / batch as f64;
        sgd_update(
            &mut model.output,
            &grads.output,
            &mut velocity.output,
            lr,
            scale,
            cfg,
        );
        if let (Some(p), Some(g), Some(v)) = (
            model.hidden.as_mut(),
            grads.hidden.as_ref(),
            velocity.hidden.as_mut(),
        ) {
            sgd_update(p, g, v, lr, scale, cfg);
        }
        if !model.is_finite() {
            return Err(Error::InvalidParameters(format!(
                "parameters diverged at step {step}; lower the learning rate"
            )));
        }
        history.push(batch_loss * scale);
    }
    Ok((model, history))
}

pub fn train(
    h: &Hierarchy,
    dataset: &[LabeledExample],
    method: Method,
    cfg: &TrainConfig,
) -> Result<HeadModel> {
    Ok(train_with_history(h, dataset, method, cfg)?.0)
}
