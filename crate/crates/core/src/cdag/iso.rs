//! Isomorphism of small labelled DAGs.
//!
//! Colour refinement over both graphs at once (so colour ids are comparable),
//! seeded by node label and degrees, followed by backtracking inside the
//! refined colour classes. Graphs here have at most a few hundred nodes.

use std::collections::BTreeMap;

use super::CDag;

/// A DAG with a `u64` label per node and a `u32` label per edge.
#[derive(Clone, Debug)]
pub struct LabeledDag {
    labels: Vec<u64>,
    parents: Vec<Vec<(usize, u32)>>,
    children: Vec<Vec<(usize, u32)>>,
}

type Signature = (u32, Vec<(u32, u32)>, Vec<(u32, u32)>);

impl LabeledDag {
    /// `edges` are `(from, to, label)` over node positions `0..labels.len()`.
    pub fn new(labels: Vec<u64>, edges: &[(usize, usize, u32)]) -> Self {
        let n = labels.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for &(f, t, l) in edges {
            parents[t].push((f, l));
            children[f].push((t, l));
        }
        for v in parents.iter_mut().chain(children.iter_mut()) {
            v.sort_unstable();
        }
        Self {
            labels,
            parents,
            children,
        }
    }

    /// Node label = (level, source flag, sink slot). With `ordered`, edge
    /// labels are argument positions and sinks keep their readout slot;
    /// otherwise both are ignored.
    pub fn from_cdag(dag: &CDag, ordered: bool) -> Self {
        let labels = dag
            .nodes()
            .iter()
            .map(|&n| {
                let tag: u64 = match dag.sinks().iter().position(|&s| s == n) {
                    Some(p) if ordered => 2 + p as u64,
                    Some(_) => 2,
                    None if n.is_source() => 1,
                    None => 0,
                };
                ((n.level as u64) << 32) | tag
            })
            .collect();
        let edges: Vec<(usize, usize, u32)> = dag
            .edges()
            .iter()
            .map(|e| {
                (
                    dag.position(e.from).expect("edge endpoint"),
                    dag.position(e.to).expect("edge endpoint"),
                    if ordered { e.arg_pos } else { 0 },
                )
            })
            .collect();
        Self::new(labels, &edges)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn isomorphic(&self, other: &LabeledDag) -> bool {
        if self.len() != other.len() {
            return false;
        }
        let edges = |g: &LabeledDag| g.parents.iter().map(Vec::len).sum::<usize>();
        if edges(self) != edges(other) {
            return false;
        }
        let (ca, cb) = refine(self, other);
        let mut ha = ca.clone();
        let mut hb = cb.clone();
        ha.sort_unstable();
        hb.sort_unstable();
        if ha != hb {
            return false;
        }
        Matcher::new(self, other, &ca, &cb).run()
    }
}

fn refine(a: &LabeledDag, b: &LabeledDag) -> (Vec<u32>, Vec<u32>) {
    let seed = |g: &LabeledDag| -> Vec<(u64, usize, usize)> {
        (0..g.len())
            .map(|i| (g.labels[i], g.parents[i].len(), g.children[i].len()))
            .collect()
    };
    let (sa, sb) = (seed(a), seed(b));
    let mut ids: BTreeMap<(u64, usize, usize), u32> = BTreeMap::new();
    for s in sa.iter().chain(&sb) {
        let next = ids.len() as u32;
        ids.entry(*s).or_insert(next);
    }
    let mut ca: Vec<u32> = sa.iter().map(|s| ids[s]).collect();
    let mut cb: Vec<u32> = sb.iter().map(|s| ids[s]).collect();
    let mut classes = ids.len();
    loop {
        let sig = |g: &LabeledDag, c: &[u32], i: usize| -> Signature {
            let mut p: Vec<(u32, u32)> = g.parents[i].iter().map(|&(j, l)| (c[j], l)).collect();
            let mut ch: Vec<(u32, u32)> = g.children[i].iter().map(|&(j, l)| (c[j], l)).collect();
            p.sort_unstable();
            ch.sort_unstable();
            (c[i], p, ch)
        };
        let na: Vec<Signature> = (0..a.len()).map(|i| sig(a, &ca, i)).collect();
        let nb: Vec<Signature> = (0..b.len()).map(|i| sig(b, &cb, i)).collect();
        let mut ids: BTreeMap<&Signature, u32> = BTreeMap::new();
        for s in na.iter().chain(&nb) {
            let next = ids.len() as u32;
            ids.entry(s).or_insert(next);
        }
        let new_a: Vec<u32> = na.iter().map(|s| ids[s]).collect();
        let new_b: Vec<u32> = nb.iter().map(|s| ids[s]).collect();
        let stable = ids.len() == classes;
        classes = ids.len();
        ca = new_a;
        cb = new_b;
        if stable {
            return (ca, cb);
        }
    }
}

struct Matcher<'a> {
    a: &'a LabeledDag,
    b: &'a LabeledDag,
    ca: &'a [u32],
    cb: &'a [u32],
    order: Vec<usize>,
    fwd: Vec<Option<usize>>,
    back: Vec<Option<usize>>,
}

impl<'a> Matcher<'a> {
    fn new(a: &'a LabeledDag, b: &'a LabeledDag, ca: &'a [u32], cb: &'a [u32]) -> Self {
        let mut class_size: BTreeMap<u32, usize> = BTreeMap::new();
        for c in ca {
            *class_size.entry(*c).or_default() += 1;
        }
        // Visit small classes first, then grow along edges so that most
        // candidates are constrained by already-mapped neighbours.
        let n = a.len();
        let mut order = Vec::with_capacity(n);
        let mut placed = vec![false; n];
        let mut frontier_score = vec![0usize; n];
        for _ in 0..n {
            let next = (0..n)
                .filter(|&i| !placed[i])
                .min_by_key(|&i| (usize::MAX - frontier_score[i], class_size[&ca[i]], i))
                .expect("unplaced node");
            placed[next] = true;
            order.push(next);
            for &(j, _) in a.parents[next].iter().chain(&a.children[next]) {
                frontier_score[j] += 1;
            }
        }
        Self {
            a,
            b,
            ca,
            cb,
            order,
            fwd: vec![None; n],
            back: vec![None; n],
        }
    }

    fn run(&mut self) -> bool {
        self.extend(0)
    }

    fn extend(&mut self, depth: usize) -> bool {
        if depth == self.order.len() {
            return true;
        }
        let u = self.order[depth];
        for v in 0..self.b.len() {
            if self.back[v].is_some() || self.cb[v] != self.ca[u] || !self.consistent(u, v) {
                continue;
            }
            self.fwd[u] = Some(v);
            self.back[v] = Some(u);
            if self.extend(depth + 1) {
                return true;
            }
            self.fwd[u] = None;
            self.back[v] = None;
        }
        false
    }

    fn consistent(&self, u: usize, v: usize) -> bool {
        let mapped_edges_match =
            |xs: &[(usize, u32)], ys: &[(usize, u32)], map: &[Option<usize>]| {
                xs.iter().all(|&(x, l)| match map[x] {
                    Some(y) => ys.contains(&(y, l)),
                    None => true,
                })
            };
        mapped_edges_match(&self.a.parents[u], &self.b.parents[v], &self.fwd)
            && mapped_edges_match(&self.a.children[u], &self.b.children[v], &self.fwd)
            && mapped_edges_match(&self.b.parents[v], &self.a.parents[u], &self.back)
            && mapped_edges_match(&self.b.children[v], &self.a.children[u], &self.back)
    }
}

/// Level-, argument-position- and sink-slot-preserving isomorphism.
pub fn isomorphic(a: &CDag, b: &CDag) -> bool {
    a.num_tokens() == b.num_tokens()
        && LabeledDag::from_cdag(a, true).isomorphic(&LabeledDag::from_cdag(b, true))
}

/// Level-preserving isomorphism that ignores argument positions and sink
/// order; the right notion when the span processor is symmetric in its
/// arguments.
pub fn isomorphic_unordered(a: &CDag, b: &CDag) -> bool {
    a.num_tokens() == b.num_tokens()
        && LabeledDag::from_cdag(a, false).isomorphic(&LabeledDag::from_cdag(b, false))
}
