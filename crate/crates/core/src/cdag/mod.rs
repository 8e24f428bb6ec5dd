//! The leveled computation DAG.
//!
//! A [`CDag`] has `L` sources at level 0 (one per input position), internal
//! nodes that apply the span processor to their parents in argument order, and
//! an ordered list of sinks consumed by the readout. Node `l:i` sits at level
//! `l` with 1-based index `i`; within a level, indices follow the sort order of
//! each node's parent list (parents listed in argument order).
//!
//! # Invariants
//!
//! [`CDag::new`] only guarantees referential integrity. The remaining rules
//! (level rule, argument positions, index ordering, dead nodes) are reported by
//! [`validate`]; [`CDag::checked`] combines both.

mod builder;
mod dot;
mod iso;
mod json;
mod validate;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use builder::{CDagBuilder, Handle};
pub use dot::{to_dot, DotOptions};
pub use iso::{isomorphic, isomorphic_unordered, LabeledDag};
pub use json::{from_json, to_json};
pub use validate::{validate, Violation};

/// A node `level:index`. Sources are `0:i` for token position `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "(u32, u32)", into = "(u32, u32)")]
pub struct NodeRef {
    pub level: u32,
    pub index: u32,
}

impl NodeRef {
    pub const fn new(level: u32, index: u32) -> Self {
        Self { level, index }
    }

    pub const fn source(index: u32) -> Self {
        Self { level: 0, index }
    }

    pub fn is_source(&self) -> bool {
        self.level == 0
    }
}

impl From<(u32, u32)> for NodeRef {
    fn from((level, index): (u32, u32)) -> Self {
        Self { level, index }
    }
}

impl From<NodeRef> for (u32, u32) {
    fn from(n: NodeRef) -> Self {
        (n.level, n.index)
    }
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.level, self.index)
    }
}

/// `from` is argument number `arg_pos` (1-based) of the span processor at `to`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub from: NodeRef,
    pub to: NodeRef,
    pub arg_pos: u32,
}

impl Edge {
    pub const fn new(from: NodeRef, to: NodeRef, arg_pos: u32) -> Self {
        Self { from, to, arg_pos }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})→({})#{}", self.from, self.to, self.arg_pos)
    }
}

/// Structural summary used by the complexity class `(k, q, m)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuralStats {
    /// Maximum in-degree.
    pub k: usize,
    /// Maximum out-degree.
    pub q: usize,
    /// Number of sinks.
    pub m: usize,
    /// Maximum level.
    pub depth: u32,
}

/// Immutable leveled DAG. See the module docs for the invariants.
#[derive(Clone, Debug)]
pub struct CDag {
    num_tokens: usize,
    nodes: Vec<NodeRef>,
    edges: Vec<Edge>,
    sinks: Vec<NodeRef>,
    position: HashMap<NodeRef, usize>,
    /// Per node: parent positions, ordered by `arg_pos` then by node.
    parents: Vec<Vec<usize>>,
    /// Per node: `(child position, arg_pos)`.
    children: Vec<Vec<(usize, u32)>>,
}

impl PartialEq for CDag {
    fn eq(&self, other: &Self) -> bool {
        self.num_tokens == other.num_tokens
            && self.nodes == other.nodes
            && self.edges == other.edges
            && self.sinks == other.sinks
    }
}

impl Eq for CDag {}

impl CDag {
    /// Assembles a graph, checking only that `L >= 1`, nodes are unique and
    /// every edge and sink refers to an existing node.
    pub fn new(
        num_tokens: usize,
        mut nodes: Vec<NodeRef>,
        mut edges: Vec<Edge>,
        sinks: Vec<NodeRef>,
    ) -> Result<Self> {
        if num_tokens == 0 {
            return Err(Error::Malformed("a cDAG needs at least one token".into()));
        }
        nodes.sort_unstable();
        if let Some(w) = nodes.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Malformed(format!("duplicate node {}", w[0])));
        }
        let position: HashMap<NodeRef, usize> =
            nodes.iter().enumerate().map(|(i, n)| (*n, i)).collect();
        edges.sort_unstable_by_key(|e| (e.to, e.arg_pos, e.from));
        let mut parents = vec![Vec::new(); nodes.len()];
        let mut children = vec![Vec::new(); nodes.len()];
        for e in &edges {
            let (Some(&f), Some(&t)) = (position.get(&e.from), position.get(&e.to)) else {
                return Err(Error::Malformed(format!(
                    "edge {e} refers to a missing node"
                )));
            };
            parents[t].push(f);
            children[f].push((t, e.arg_pos));
        }
        if let Some(s) = sinks.iter().find(|s| !position.contains_key(s)) {
            return Err(Error::Malformed(format!("sink {s} is not a node")));
        }
        Ok(Self {
            num_tokens,
            nodes,
            edges,
            sinks,
            position,
            parents,
            children,
        })
    }

    /// [`CDag::new`] followed by [`validate`]; any violation is an error.
    pub fn checked(
        num_tokens: usize,
        nodes: Vec<NodeRef>,
        edges: Vec<Edge>,
        sinks: Vec<NodeRef>,
    ) -> Result<Self> {
        let dag = Self::new(num_tokens, nodes, edges, sinks)?;
        let violations = validate(&dag);
        if violations.is_empty() {
            Ok(dag)
        } else {
            Err(Error::Invalid(violations))
        }
    }

    pub fn num_tokens(&self) -> usize {
        self.num_tokens
    }

    /// Nodes sorted by `(level, index)`.
    pub fn nodes(&self) -> &[NodeRef] {
        &self.nodes
    }

    /// Edges sorted by `(to, arg_pos, from)`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn sinks(&self) -> &[NodeRef] {
        &self.sinks
    }

    pub fn contains(&self, n: NodeRef) -> bool {
        self.position.contains_key(&n)
    }

    /// Position of `n` in [`CDag::nodes`].
    pub fn position(&self, n: NodeRef) -> Option<usize> {
        self.position.get(&n).copied()
    }

    /// Parents of `n` in argument order.
    pub fn parents(&self, n: NodeRef) -> Vec<NodeRef> {
        self.position(n)
            .map(|p| self.parents[p].iter().map(|&i| self.nodes[i]).collect())
            .unwrap_or_default()
    }

    pub fn children(&self, n: NodeRef) -> Vec<NodeRef> {
        self.position(n)
            .map(|p| {
                self.children[p]
                    .iter()
                    .map(|&(c, _)| self.nodes[c])
                    .collect()
            })
            .unwrap_or_default()
    }

    pub(crate) fn parent_positions(&self, pos: usize) -> &[usize] {
        &self.parents[pos]
    }

    pub(crate) fn child_positions(&self, pos: usize) -> &[(usize, u32)] {
        &self.children[pos]
    }

    pub fn in_degree(&self, n: NodeRef) -> usize {
        self.position(n).map_or(0, |p| self.parents[p].len())
    }

    pub fn out_degree(&self, n: NodeRef) -> usize {
        self.position(n).map_or(0, |p| self.children[p].len())
    }

    pub fn is_sink(&self, n: NodeRef) -> bool {
        self.sinks.contains(&n)
    }

    pub fn depth(&self) -> u32 {
        self.nodes.last().map_or(0, |n| n.level)
    }

    /// Nodes of one level, in index order.
    pub fn level(&self, level: u32) -> impl Iterator<Item = NodeRef> + '_ {
        self.nodes.iter().copied().filter(move |n| n.level == level)
    }

    pub fn sources(&self) -> impl Iterator<Item = NodeRef> + '_ {
        self.level(0)
    }

    /// `(k, q, m, depth)`. Fails with the violation list on an invalid graph.
    pub fn structural_stats(&self) -> Result<StructuralStats> {
        let violations = validate(self);
        if !violations.is_empty() {
            return Err(Error::Invalid(violations));
        }
        Ok(self.stats_unchecked())
    }

    pub(crate) fn stats_unchecked(&self) -> StructuralStats {
        StructuralStats {
            k: self.parents.iter().map(Vec::len).max().unwrap_or(0),
            q: self.children.iter().map(Vec::len).max().unwrap_or(0),
            m: self.sinks.len(),
            depth: self.depth(),
        }
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }

    pub fn to_dot(&self, options: &DotOptions) -> String {
        to_dot(self, options)
    }
}
