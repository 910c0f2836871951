//! Class hierarchies: rooted DAGs of is-a edges.
//!
//! A [`Hierarchy`] is parsed from an edge list (`child<TAB>parent` per line)
//! and is immutable afterwards. Nodes are addressed by [`NodeId`], a dense
//! index into the node order, which is the order of first appearance in the
//! edge list. Every per-node vector in this crate is laid out in that order.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

/// Dense index of a node within one [`Hierarchy`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone)]
pub struct Hierarchy {
    names: Vec<String>,
    index: HashMap<String, NodeId>,
    parents: Vec<Vec<NodeId>>,
    children: Vec<Vec<NodeId>>,
    root: NodeId,
    depth: Vec<usize>,
    leaves: Vec<NodeId>,
    is_leaf: Vec<bool>,
    topo: Vec<NodeId>,
    // strict ancestors of every node, sorted by node order
    ancestors: Vec<Vec<NodeId>>,
}

impl Hierarchy {
    /// Parses an edge-list document. Blank lines and lines starting with `#`
    /// are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split('\t');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(child), Some(parent), None) if !child.is_empty() && !parent.is_empty() => {
                    edges.push((child, parent));
                }
                _ => {
                    return Err(Error::MalformedLine {
                        line: lineno + 1,
                        content: line.to_string(),
                    })
                }
            }
        }
        Self::from_edges(edges)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Builds a hierarchy from `(child, parent)` pairs.
    pub fn from_edges<I, S>(edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S)>,
        S: AsRef<str>,
    {
        let mut names: Vec<String> = Vec::new();
        let mut index: HashMap<String, NodeId> = HashMap::new();
        let mut intern = |name: &str| -> NodeId {
            *index.entry(name.to_string()).or_insert_with(|| {
                names.push(name.to_string());
                NodeId(names.len() - 1)
            })
        };

        let mut edge_list = Vec::new();
        let mut seen = HashSet::new();
        for (child, parent) in edges {
            let (child, parent) = (child.as_ref(), parent.as_ref());
            let c = intern(child);
            let p = intern(parent);
            if !seen.insert((c, p)) {
                return Err(Error::DuplicateEdge {
                    child: child.to_string(),
                    parent: parent.to_string(),
                });
            }
            edge_list.push((c, p));
        }
        if edge_list.is_empty() {
            return Err(Error::EmptyDocument);
        }

        let n = names.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for &(c, p) in &edge_list {
            parents[c.0].push(p);
            children[p.0].push(c);
        }
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort_unstable();
        }

        // Kahn's algorithm from the parentless nodes downwards; ties resolved by
        // node order so the evaluation order is reproducible.
        let mut pending: Vec<usize> = parents.iter().map(Vec::len).collect();
        let mut ready: BinaryHeap<Reverse<NodeId>> = (0..n)
            .filter(|&i| pending[i] == 0)
            .map(|i| Reverse(NodeId(i)))
            .collect();
        let mut topo = Vec::with_capacity(n);
        while let Some(Reverse(node)) = ready.pop() {
            topo.push(node);
            for &c in &children[node.0] {
                pending[c.0] -= 1;
                if pending[c.0] == 0 {
                    ready.push(Reverse(c));
                }
            }
        }
        if topo.len() < n {
            let stuck = (0..n).find(|&i| pending[i] > 0).expect("unvisited node");
            return Err(Error::CycleDetected {
                node: names[stuck].clone(),
            });
        }

        let roots: Vec<NodeId> = (0..n)
            .filter(|&i| parents[i].is_empty())
            .map(NodeId)
            .collect();
        let root = match roots.as_slice() {
            [] => return Err(Error::NoRoot),
            [r] => *r,
            _ => {
                return Err(Error::MultipleRoots {
                    roots: roots.iter().map(|r| names[r.0].clone()).collect(),
                })
            }
        };

        // shortest downward distance from the root
        let mut depth = vec![usize::MAX; n];
        depth[root.0] = 0;
        let mut queue = VecDeque::from([root]);
        while let Some(node) = queue.pop_front() {
            for &c in &children[node.0] {
                if depth[c.0] == usize::MAX {
                    depth[c.0] = depth[node.0] + 1;
                    queue.push_back(c);
                }
            }
        }
        debug_assert!(depth.iter().all(|&d| d != usize::MAX));

        let mut ancestors: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        for &node in &topo {
            let mut set: Vec<NodeId> = Vec::new();
            for &p in &parents[node.0] {
                set.push(p);
                set.extend_from_slice(&ancestors[p.0]);
            }
            set.sort_unstable();
            set.dedup();
            ancestors[node.0] = set;
        }

        let is_leaf: Vec<bool> = children.iter().map(Vec::is_empty).collect();
        let leaves = (0..n).filter(|&i| is_leaf[i]).map(NodeId).collect();

        Ok(Hierarchy {
            names,
            index,
            parents,
            children,
            root,
            depth,
            leaves,
            is_leaf,
            topo,
            ancestors,
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    /// Looks a node up by name.
    pub fn id(&self, name: &str) -> Result<NodeId> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownNode(name.to_string()))
    }

    pub fn name(&self, node: NodeId) -> &str {
        &self.names[node.0]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// All nodes in node order.
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.names.len()).map(NodeId)
    }

    pub fn contains(&self, node: NodeId) -> bool {
        node.0 < self.names.len()
    }

    /// Returns `node` unchanged if it belongs to this hierarchy.
    pub fn check(&self, node: NodeId) -> Result<NodeId> {
        if self.contains(node) {
            Ok(node)
        } else {
            Err(Error::UnknownNode(node.to_string()))
        }
    }

    pub fn parents(&self, node: NodeId) -> &[NodeId] {
        &self.parents[node.0]
    }

    pub fn children(&self, node: NodeId) -> &[NodeId] {
        &self.children[node.0]
    }

    pub fn depth(&self, node: NodeId) -> usize {
        self.depth[node.0]
    }

    /// Largest node depth in the hierarchy.
    pub fn max_depth(&self) -> usize {
        self.depth.iter().copied().max().unwrap_or(0)
    }

    pub fn leaves(&self) -> &[NodeId] {
        &self.leaves
    }

    pub fn is_leaf(&self, node: NodeId) -> bool {
        self.is_leaf[node.0]
    }

    /// Nodes ordered so that every parent precedes its children.
    pub fn topological_order(&self) -> &[NodeId] {
        &self.topo
    }

    /// Strict transitive ancestors of `node`, sorted by node order.
    pub fn ancestors(&self, node: NodeId) -> Result<&[NodeId]> {
        self.check(node)?;
        Ok(&self.ancestors[node.0])
    }

    pub fn is_ancestor(&self, ancestor: NodeId, node: NodeId) -> bool {
        self.ancestors[node.0].binary_search(&ancestor).is_ok()
    }

    /// Leaves reachable downwards from `node`, sorted by node order. A leaf
    /// is its own only descendant leaf.
    pub fn leaf_descendants(&self, node: NodeId) -> Result<Vec<NodeId>> {
        self.check(node)?;
        if self.is_leaf(node) {
            return Ok(vec![node]);
        }
        let mut seen = vec![false; self.len()];
        let mut stack = vec![node];
        let mut out = Vec::new();
        while let Some(n) = stack.pop() {
            for &c in &self.children[n.0] {
                if !seen[c.0] {
                    seen[c.0] = true;
                    if self.is_leaf(c) {
                        out.push(c);
                    } else {
                        stack.push(c);
                    }
                }
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    /// Depth of the deepest common ancestor of `a` and `b`, where each node
    /// counts as its own ancestor.
    pub fn lca_depth(&self, a: NodeId, b: NodeId) -> Result<usize> {
        self.check(a)?;
        self.check(b)?;
        let in_a = |n: NodeId| n == a || self.is_ancestor(n, a);
        let best = std::iter::once(b)
            .chain(self.ancestors[b.0].iter().copied())
            .filter(|&n| in_a(n))
            .map(|n| self.depth(n))
            .max();
        // the root is shared by every pair
        Ok(best.unwrap_or(0))
    }

    /// SHA-256 over the node names in node order; binds checkpoints to a
    /// vector layout.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        for name in &self.names {
            hasher.update(name.as_bytes());
            hasher.update([0u8]);
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Serializes back to the edge-list format, in node order.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for node in self.nodes() {
            for &p in self.parents(node) {
                out.push_str(self.name(node));
                out.push('\t');
                out.push_str(self.name(p));
                out.push('\n');
            }
        }
        out
    }
}
