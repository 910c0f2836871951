//! Learning leaf-level classifiers from labels of arbitrary precision over a
//! class hierarchy.
//!
//! Every node of the hierarchy gets a sigmoid predictor for "this label is
//! present given a parent is". Training uses a loss mask that leaves the
//! subtree below an imprecise label untouched, so coarse labels such as
//! "bird" still teach the model where birds are without claiming that no
//! particular bird species is present. Predictions combine the per-node
//! scores into unconditional leaf probabilities.
//!
//! Besides the model, the crate ships the label-noise models used to degrade
//! precise datasets, the softmax baselines, evaluation metrics, and a
//! text-to-hierarchy depth analysis.

pub mod data;
pub mod encoding;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod hierarchy;
pub mod noise;
pub mod probmodel;
pub mod seed;
pub mod synth;
pub mod textdepth;
pub mod training;

pub use data::LabeledExample;
pub use encoding::{encode, mask_chillax, mask_original, MaskKind, MaskedTarget};
pub use error::{Error, Result};
pub use eval::{emit_report, evaluate, EvalReport};
pub use hierarchy::{Hierarchy, NodeId};
pub use noise::{
    degrade_dataset, depth_pmf, imprecisify_label, inject_inaccuracy, relabel_parents, DepthModel,
};
pub use probmodel::{
    predict_leaf, top_k_leaves, unconditional_probs, ConditionalScores, UnconditionalScores,
};
pub use training::{
    masked_bce_grad, masked_bce_loss, score, sgdr_lr, train, HeadKind, HeadModel, Method,
    SgdrSchedule, TrainConfig,
};
