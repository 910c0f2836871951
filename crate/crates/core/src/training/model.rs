use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::loss::{sigmoid, softmax};
use crate::error::{Error, Result};
use crate::hierarchy::Hierarchy;
use crate::probmodel::ConditionalScores;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadKind {
    /// One sigmoid predictor per node.
    Chillax,
    /// Softmax over the leaves.
    SoftmaxLeaves,
}

/// Affine map `inputs -> outputs`, weights row-major `[outputs][inputs]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    /// Uniform weights in `±1/sqrt(inputs)`, zero bias.
    pub fn init<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (inputs.max(1) as f64).sqrt();
        let weights = (0..inputs * outputs)
            .map(|_| rng.random_range(-bound..bound))
            .collect();
        Dense {
            inputs,
            outputs,
            weights,
            bias: vec![0.0; outputs],
        }
    }

    pub fn row(&self, o: usize) -> &[f64] {
        &self.weights[o * self.inputs..(o + 1) * self.inputs]
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        (0..self.outputs)
            .map(|o| {
                self.row(o)
                    .iter()
                    .zip(x)
                    .fold(self.bias[o], |acc, (w, v)| acc + w * v)
            })
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scores {
    Conditional(ConditionalScores),
    /// Softmax distribution over `Hierarchy::leaves()`.
    Leaves(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadModel {
    pub kind: HeadKind,
    pub feature_dim: usize,
    /// Optional tanh layer in front of the output layer.
    pub hidden: Option<Dense>,
    pub output: Dense,
}

impl HeadModel {
    pub fn init<R: Rng + ?Sized>(
        kind: HeadKind,
        h: &Hierarchy,
        feature_dim: usize,
        hidden: Option<usize>,
        rng: &mut R,
    ) -> Self {
        let outputs = match kind {
            HeadKind::Chillax => h.len(),
            HeadKind::SoftmaxLeaves => h.leaves().len(),
        };
        let hidden = hidden.map(|width| Dense::init(feature_dim, width, rng));
        let last_in = hidden.as_ref().map_or(feature_dim, |d| d.outputs);
        HeadModel {
            kind,
            feature_dim,
            hidden,
            output: Dense::init(last_in, outputs, rng),
        }
    }

    pub fn check_dim(&self, features: &[f64]) -> Result<()> {
        if features.len() != self.feature_dim {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim,
                actual: features.len(),
            });
        }
        Ok(())
    }

    /// Hidden activations (or the input itself) and output logits.
    pub(crate) fn forward(&self, features: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let act = match &self.hidden {
            Some(layer) => layer.forward(features).into_iter().map(f64::tanh).collect(),
            None => features.to_vec(),
        };
        let logits = self.output.forward(&act);
        (act, logits)
    }

    pub fn logits(&self, features: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(features)?;
        Ok(self.forward(features).1)
    }

    pub fn is_finite(&self) -> bool {
        self.output.is_finite() && self.hidden.as_ref().is_none_or(Dense::is_finite)
    }
}

pub fn score(model: &HeadModel, features: &[f64]) -> Result<Scores> {
    let logits = model.logits(features)?;
    Ok(match model.kind {
        HeadKind::Chillax => Scores::Conditional(ConditionalScores::from_values(
            logits.into_iter().map(sigmoid).collect(),
        )?),
        HeadKind::SoftmaxLeaves => Scores::Leaves(softmax(&logits)),
    })
}

const CHECKPOINT_FORMAT: &str = "chillax-head";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    node_order_fingerprint: String,
    num_nodes: usize,
    num_leaves: usize,
    model: HeadModel,
}

/// Writes the model as a versioned JSON document bound to `h`'s node order.
pub fn save_checkpoint(model: &HeadModel, h: &Hierarchy, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let ckpt = Checkpoint {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        node_order_fingerprint: h.fingerprint(),
        num_nodes: h.len(),
        num_leaves: h.leaves().len(),
        model: model.clone(),
    };
    let text = serde_json::to_string(&ckpt).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        line: 0,
        source,
    })?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(h: &Hierarchy, path: impl AsRef<Path>) -> Result<HeadModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ckpt: Checkpoint = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        line: 1,
        source,
    })?;
    if ckpt.format != CHECKPOINT_FORMAT || ckpt.version != CHECKPOINT_VERSION {
        return Err(Error::CheckpointMismatch(format!(
            "unsupported checkpoint {} v{}",
            ckpt.format, ckpt.version
        )));
    }
    if ckpt.node_order_fingerprint != h.fingerprint() {
        return Err(Error::CheckpointMismatch(
            "node order fingerprint differs".into(),
        ));
    }
    let expected = match ckpt.model.kind {
        HeadKind::Chillax => h.len(),
        HeadKind::SoftmaxLeaves => h.leaves().len(),
    };
    if ckpt.model.output.outputs != expected {
        return Err(Error::CheckpointMismatch(format!(
            "model has {} outputs, hierarchy needs {expected}",
            ckpt.model.output.outputs
        )));
    }
    Ok(ckpt.model)
}
