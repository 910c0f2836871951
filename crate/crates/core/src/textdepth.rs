//! Depth of the labels that free text maps to.
//!
//! Text is split into lowercase alphanumeric tokens, each reduced to a lemma
//! by lexicon lookup with a plural-stripping fallback. A lemma may name
//! several nodes; the shallowest one is taken so as not to read more into
//! the word than it says. Across a text, the deepest of those per-lemma
//! choices is the text's label.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::{Hierarchy, NodeId};

#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: HashMap<String, Vec<NodeId>>,
}

impl Lexicon {
    /// Parses `lemma<TAB>node[,node...]` lines. Lemmas are lowercased; blank
    /// and `#` lines are skipped. Repeated lemmas merge their node lists.
    pub fn parse(h: &Hierarchy, text: &str) -> Result<Self> {
        let mut entries: HashMap<String, Vec<NodeId>> = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let malformed = || Error::MalformedLine {
                line: lineno + 1,
                content: line.to_string(),
            };
            let (lemma, nodes) = line.split_once('\t').ok_or_else(malformed)?;
            let lemma = lemma.trim().to_lowercase();
            if lemma.is_empty() {
                return Err(malformed());
            }
            let list = entries.entry(lemma).or_default();
            for name in nodes.split(',').map(str::trim) {
                if name.is_empty() {
                    return Err(malformed());
                }
                list.push(h.id(name)?);
            }
        }
        for list in entries.values_mut() {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Lexicon { entries })
    }

    pub fn load(h: &Hierarchy, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(h, &text)
    }

    pub fn from_entries<I, S>(h: &Hierarchy, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<S>)>,
        S: AsRef<str>,
    {
        let mut map: HashMap<String, Vec<NodeId>> = HashMap::new();
        for (lemma, nodes) in entries {
            let list = map.entry(lemma.as_ref().to_lowercase()).or_default();
            for n in nodes {
                list.push(h.id(n.as_ref())?);
            }
        }
        for list in map.values_mut() {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Lexicon { entries: map })
    }

    pub fn get(&self, lemma: &str) -> Option<&[NodeId]> {
        self.entries.get(lemma).map(Vec::as_slice)
    }

    pub fn contains(&self, lemma: &str) -> bool {
        self.entries.contains_key(lemma)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextRecord {
    pub id: String,
    pub fields: BTreeMap<String, String>,
}

fn lemma_of(token: String, lexicon: &Lexicon) -> String {
    if lexicon.contains(&token) {
        return token;
    }
    for suffix in ["es", "s"] {
        if let Some(stem) = token.strip_suffix(suffix) {
            if !stem.is_empty() && lexicon.contains(stem) {
                return stem.to_string();
            }
        }
    }
    token
}

/// Lowercase alphanumeric tokens, each mapped to its lemma.
pub fn lemmas_of(text: &str, lexicon: &Lexicon) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| lemma_of(t.to_lowercase(), lexicon))
        .collect()
}

fn shallowest(h: &Hierarchy, candidates: &[NodeId]) -> Option<NodeId> {
    candidates.iter().copied().min_by_key(|&n| (h.depth(n), n))
}

/// The node a text is labeled with, if any lemma matches.
pub fn best_node(h: &Hierarchy, lexicon: &Lexicon, text: &str) -> Option<NodeId> {
    lemmas_of(text, lexicon)
        .iter()
        .filter_map(|l| lexicon.get(l))
        .filter_map(|cands| shallowest(h, cands))
        // deepest wins; among equal depths the first in node order
        .min_by_key(|&n| (std::cmp::Reverse(h.depth(n)), n))
}

pub fn best_depth(h: &Hierarchy, lexicon: &Lexicon, text: &str) -> Option<usize> {
    best_node(h, lexicon, text).map(|n| h.depth(n))
}

/// Per field name, counts of `best_depth` over depths `0..=h.max_depth()`.
/// Records without a match in a field do not count for it.
pub fn depth_histogram(
    h: &Hierarchy,
    lexicon: &Lexicon,
    records: &[TextRecord],
) -> BTreeMap<String, Vec<u64>> {
    let mut hist: BTreeMap<String, Vec<u64>> = BTreeMap::new();
    for record in records {
        for (field, text) in &record.fields {
            let counts = hist
                .entry(field.clone())
                .or_insert_with(|| vec![0; h.max_depth() + 1]);
            if let Some(d) = best_depth(h, lexicon, text) {
                counts[d] += 1;
            }
        }
    }
    hist
}
