use std::collections::BTreeMap;

use super::{CDag, Edge, NodeRef};
use crate::error::{Error, Result};

/// Opaque reference to a node added to a [`CDagBuilder`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Handle(usize);

#[derive(Clone, Debug)]
struct Pending {
    parents: Vec<Handle>,
    /// Keep the given argument order instead of sorting parents by label.
    ordered: bool,
}

/// Assembles a cDAG from parent lists and assigns every node its level and
/// index.
///
/// Levels are `1 + max(parent level)`. Indices within a level follow the sort
/// order of the parents' `(level, index)` labels taken in argument order, so
/// two builders describing the same graph produce identical [`CDag`]s. Nodes
/// that end up with the same parent list are collapsed into one.
#[derive(Clone, Debug)]
pub struct CDagBuilder {
    num_tokens: usize,
    nodes: Vec<Option<Pending>>,
    sinks: Vec<Handle>,
}

impl CDagBuilder {
    pub fn new(num_tokens: usize) -> Self {
        Self {
            num_tokens,
            nodes: vec![None; num_tokens],
            sinks: Vec::new(),
        }
    }

    pub fn num_tokens(&self) -> usize {
        self.num_tokens
    }

    /// Source for token position `position` (1-based).
    pub fn source(&self, position: usize) -> Handle {
        assert!(
            (1..=self.num_tokens).contains(&position),
            "source position {position} out of range 1..={}",
            self.num_tokens
        );
        Handle(position - 1)
    }

    /// Internal node whose span processor receives `parents` in the given
    /// order.
    pub fn node(&mut self, parents: impl IntoIterator<Item = Handle>) -> Handle {
        self.push(parents.into_iter().collect(), true)
    }

    /// Internal node for an order-independent span processor: argument order
    /// is the sorted order of the parents' final labels.
    pub fn node_unordered(&mut self, parents: impl IntoIterator<Item = Handle>) -> Handle {
        self.push(parents.into_iter().collect(), false)
    }

    fn push(&mut self, parents: Vec<Handle>, ordered: bool) -> Handle {
        let h = Handle(self.nodes.len());
        self.nodes.push(Some(Pending { parents, ordered }));
        h
    }

    pub fn sink(&mut self, h: Handle) -> &mut Self {
        self.sinks.push(h);
        self
    }

    pub fn sinks(&mut self, hs: impl IntoIterator<Item = Handle>) -> &mut Self {
        self.sinks.extend(hs);
        self
    }

    pub fn build(self) -> Result<CDag> {
        self.finish(false).map(|(dag, _)| dag)
    }

    /// Like [`CDagBuilder::build`], but first drops internal nodes that have
    /// no path to a sink. Sources are always kept.
    pub fn build_pruned(self) -> Result<CDag> {
        self.finish(true).map(|(dag, _)| dag)
    }

    /// Builds and also returns the final label of every handle (`None` for
    /// pruned nodes).
    pub fn finish(self, prune: bool) -> Result<(CDag, Vec<Option<NodeRef>>)> {
        let total = self.nodes.len();
        for (i, node) in self.nodes.iter().enumerate() {
            let Some(p) = node else { continue };
            if p.parents.is_empty() {
                return Err(Error::Malformed(format!(
                    "internal node #{i} has no parents"
                )));
            }
            for (a, h) in p.parents.iter().enumerate() {
                if h.0 >= i {
                    return Err(Error::Malformed(format!(
                        "node #{i} references a later node #{}",
                        h.0
                    )));
                }
                if p.parents[..a].contains(h) {
                    return Err(Error::Malformed(format!("node #{i} lists a parent twice")));
                }
            }
        }
        if let Some(s) = self.sinks.iter().find(|s| s.0 >= total) {
            return Err(Error::Malformed(format!(
                "sink handle #{} does not exist",
                s.0
            )));
        }

        let mut alive = vec![true; total];
        if prune {
            alive = vec![false; total];
            for s in &self.sinks {
                alive[s.0] = true;
            }
            for i in (0..total).rev() {
                if !alive[i] {
                    continue;
                }
                if let Some(p) = &self.nodes[i] {
                    for h in &p.parents {
                        alive[h.0] = true;
                    }
                }
            }
            for a in alive.iter_mut().take(self.num_tokens) {
                *a = true;
            }
        }

        let mut level = vec![0u32; total];
        for i in 0..total {
            if let Some(p) = &self.nodes[i] {
                level[i] = 1 + p.parents.iter().map(|h| level[h.0]).max().unwrap_or(0);
            }
        }
        let depth = (0..total)
            .filter(|&i| alive[i])
            .map(|i| level[i])
            .max()
            .unwrap_or(0);

        let mut label: Vec<Option<NodeRef>> = vec![None; total];
        for (i, l) in label.iter_mut().enumerate().take(self.num_tokens) {
            *l = Some(NodeRef::source(i as u32 + 1));
        }
        // Final argument lists, as labels.
        let mut args: Vec<Vec<NodeRef>> = vec![Vec::new(); total];
        for lvl in 1..=depth {
            let mut groups: BTreeMap<Vec<NodeRef>, Vec<usize>> = BTreeMap::new();
            for i in 0..total {
                if !alive[i] || level[i] != lvl {
                    continue;
                }
                let p = self.nodes[i].as_ref().expect("internal node");
                let mut key: Vec<NodeRef> = Vec::with_capacity(p.parents.len());
                for h in &p.parents {
                    let l = label[h.0].expect("parent labelled before child");
                    if !key.contains(&l) {
                        key.push(l);
                    }
                }
                if !p.ordered {
                    key.sort_unstable();
                }
                groups.entry(key).or_default().push(i);
            }
            for (idx, (key, members)) in groups.into_iter().enumerate() {
                let me = NodeRef::new(lvl, idx as u32 + 1);
                for &i in &members {
                    label[i] = Some(me);
                }
                args[members[0]] = key;
            }
        }

        let mut nodes: Vec<NodeRef> = label
            .iter()
            .zip(&alive)
            .filter_map(|(l, a)| if *a { *l } else { None })
            .collect();
        nodes.sort_unstable();
        nodes.dedup();
        let mut edges = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for i in self.num_tokens..total {
            if !alive[i] || args[i].is_empty() {
                continue;
            }
            let to = label[i].expect("alive node labelled");
            if !seen.insert(to) {
                continue;
            }
            for (a, from) in args[i].iter().enumerate() {
                edges.push(Edge::new(*from, to, a as u32 + 1));
            }
        }
        let mut sinks: Vec<NodeRef> = Vec::new();
        for s in &self.sinks {
            let l = label[s.0].expect("sink labelled");
            if !sinks.contains(&l) {
                sinks.push(l);
            }
        }
        let dag = CDag::checked(self.num_tokens, nodes, edges, sinks)?;
        Ok((dag, label))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assigns_levels_and_sorted_indices() {
        // Add the right subtree first; labels must not depend on insertion order.
        let mut b = CDagBuilder::new(4);
        let r = b.node([b.source(3), b.source(4)]);
        let l = b.node([b.source(1), b.source(2)]);
        let root = b.node([l, r]);
        b.sink(root);
        let dag = b.build().unwrap();
        assert_eq!(
            dag.parents(NodeRef::new(1, 1)),
            vec![NodeRef::source(1), NodeRef::source(2)]
        );
        assert_eq!(
            dag.parents(NodeRef::new(2, 1)),
            vec![NodeRef::new(1, 1), NodeRef::new(1, 2)]
        );
    }

    #[test]
    fn collapses_nodes_with_identical_arguments() {
        let mut b = CDagBuilder::new(2);
        let x = b.node([b.source(1), b.source(2)]);
        let y = b.node([b.source(1), b.source(2)]);
        let z = b.node([x]);
        let w = b.node([y]);
        b.sinks([z, w]);
        let dag = b.build().unwrap();
        // x and y merge, then z and w merge as well.
        assert_eq!(dag.nodes().len(), 4);
        assert_eq!(dag.sinks(), &[NodeRef::new(2, 1)]);
    }

    #[test]
    fn pruning_drops_dead_internal_nodes_but_keeps_sources() {
        let mut b = CDagBuilder::new(3);
        let _dead = b.node([b.source(1)]);
        let live = b.node([b.source(2), b.source(3)]);
        b.sink(live);
        let dag = b.build_pruned().unwrap();
        assert_eq!(dag.nodes().len(), 4);
        assert_eq!(dag.out_degree(NodeRef::source(1)), 0);
    }

    #[test]
    fn rejects_repeated_parent() {
        let mut b = CDagBuilder::new(1);
        let s = b.source(1);
        let x = b.node([s, s]);
        b.sink(x);
        assert!(matches!(b.build(), Err(Error::Malformed(_))));
    }
}
