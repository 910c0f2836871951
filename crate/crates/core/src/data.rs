//! Labeled examples and their JSON-Lines representation.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::{Hierarchy, NodeId};

/// One example as stored on disk; the label is a node name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub id: String,
    pub label: String,
    pub features: Vec<f64>,
}

/// Reads one JSON value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        })?;
        out.push(value);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, items: &[T]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        let line = serde_json::to_string(item).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            line: 0,
            source,
        })?;
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_examples(path: impl AsRef<Path>) -> Result<Vec<LabeledExample>> {
    read_jsonl(path)
}

/// Resolves every label against `h` and checks that all feature vectors have
/// one common length. Returns that length (0 for an empty dataset).
pub fn validate(h: &Hierarchy, examples: &[LabeledExample]) -> Result<usize> {
    let dim = examples.first().map_or(0, |e| e.features.len());
    for e in examples {
        h.id(&e.label)?;
        if e.features.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: e.features.len(),
            });
        }
    }
    Ok(dim)
}

pub fn label_id(h: &Hierarchy, example: &LabeledExample) -> Result<NodeId> {
    h.id(&example.label)
}

pub fn require_leaf_labels(h: &Hierarchy, examples: &[LabeledExample]) -> Result<()> {
    for e in examples {
        if !h.is_leaf(h.id(&e.label)?) {
            return Err(Error::NotLeafLabeled {
                id: e.id.clone(),
                label: e.label.clone(),
            });
        }
    }
    Ok(())
}

/// Counts of label depths, indexed `0..=h.max_depth()`.
pub fn label_depth_counts(h: &Hierarchy, examples: &[LabeledExample]) -> Result<Vec<u64>> {
    let mut counts = vec![0u64; h.max_depth() + 1];
    for e in examples {
        counts[h.depth(h.id(&e.label)?)] += 1;
    }
    Ok(counts)
}
