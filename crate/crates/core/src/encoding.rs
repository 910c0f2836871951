//! Per-node target vectors and loss masks for a single training label.
//!
//! Given a label `y`, the target vector marks `y` and all of its ancestors as
//! present. The loss mask selects which node predictors receive a training
//! signal. Two masks exist:
//!
//! * [`mask_original`] trains `y`, the children of `y`, and every child of a
//!   strict ancestor of `y`. Children of `y` are then pushed towards 0, so an
//!   inner-node label reads as "none of the more specific classes".
//! * [`mask_chillax`] drops the children of `y`. An inner-node label then only
//!   says "some descendant of `y`" and the subtree below it is left alone.
//!
//! For a leaf label both masks coincide.

use crate::error::Result;
use crate::hierarchy::{Hierarchy, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskKind {
    Original,
    Chillax,
}

/// Target and mask vectors for one label, laid out in node order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedTarget {
    pub label: NodeId,
    pub targets: Vec<u8>,
    pub mask: Vec<u8>,
}

impl MaskedTarget {
    pub fn new(h: &Hierarchy, label: NodeId, kind: MaskKind) -> Result<Self> {
        let targets = encode(h, label)?;
        let mask = match kind {
            MaskKind::Original => mask_original(h, label)?,
            MaskKind::Chillax => mask_chillax(h, label)?,
        };
        Ok(MaskedTarget {
            label,
            targets,
            mask,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Number of trained components.
    pub fn mask_weight(&self) -> usize {
        self.mask.iter().filter(|&&m| m == 1).count()
    }
}

/// 1 for `y` and its ancestors, 0 elsewhere.
pub fn encode(h: &Hierarchy, y: NodeId) -> Result<Vec<u8>> {
    let ancestors = h.ancestors(y)?;
    let mut out = vec![0u8; h.len()];
    out[y.index()] = 1;
    for &a in ancestors {
        out[a.index()] = 1;
    }
    Ok(out)
}

/// `y` itself plus every child of a strict ancestor of `y`.
pub fn mask_chillax(h: &Hierarchy, y: NodeId) -> Result<Vec<u8>> {
    let mut out = vec![0u8; h.len()];
    out[h.check(y)?.index()] = 1;
    for &a in h.ancestors(y)? {
        for &s in h.children(a) {
            out[s.index()] = 1;
        }
    }
    Ok(out)
}

/// [`mask_chillax`] plus the children of `y`.
pub fn mask_original(h: &Hierarchy, y: NodeId) -> Result<Vec<u8>> {
    let mut out = mask_chillax(h, y)?;
    for &s in h.children(y) {
        out[s.index()] = 1;
    }
    Ok(out)
}
