//! Cleanly separable parts in out-degree-one cDAGs.
//!
//! In a graph where every node has a single child and there is one sink, a
//! node `N` with two parents `N_a`, `N_b` splits the input into the tokens
//! under `N_a` (part a), the tokens under `N_b` (part b) and the rest. A
//! dataset covers a test item when some training items share part a, part b,
//! and the remainder together with the graph outside `N`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::cdag::{CDag, LabeledDag, NodeRef};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartsDecomposition {
    pub n: NodeRef,
    pub n_a: NodeRef,
    pub n_b: NodeRef,
    /// 1-based source positions.
    pub part_a: Vec<u32>,
    pub part_b: Vec<u32>,
    pub remainder: Vec<u32>,
}

/// Sources with a path into `n` (including `n` itself if it is a source).
fn leaves(dag: &CDag, n: NodeRef) -> Vec<u32> {
    ancestors(dag, n)
        .into_iter()
        .filter(NodeRef::is_source)
        .map(|s| s.index)
        .collect()
}

fn ancestors(dag: &CDag, n: NodeRef) -> BTreeSet<NodeRef> {
    let mut seen = BTreeSet::from([n]);
    let mut stack = vec![n];
    while let Some(x) = stack.pop() {
        for p in dag.parents(x) {
            if seen.insert(p) {
                stack.push(p);
            }
        }
    }
    seen
}

fn out_degree_one(dag: &CDag) -> Result<bool> {
    let s = dag.structural_stats()?;
    Ok(s.q == 1 && s.m == 1)
}

fn decompose(dag: &CDag, n: NodeRef, n_a: NodeRef, n_b: NodeRef) -> PartsDecomposition {
    let part_a = leaves(dag, n_a);
    let part_b = leaves(dag, n_b);
    assert!(
        part_a.iter().all(|i| !part_b.contains(i)),
        "parts under {n} overlap although every node has one child"
    );
    let remainder = (1..=dag.num_tokens() as u32)
        .filter(|i| !part_a.contains(i) && !part_b.contains(i))
        .collect();
    PartsDecomposition {
        n,
        n_a,
        n_b,
        part_a,
        part_b,
        remainder,
    }
}

/// One decomposition per two-parent node (first argument is part a). Empty
/// unless the cDAG has out-degree one and a single sink.
pub fn enumerate_parts(dag: &CDag) -> Vec<PartsDecomposition> {
    if !out_degree_one(dag).unwrap_or(false) {
        return Vec::new();
    }
    dag.nodes()
        .iter()
        .filter(|n| !n.is_source() && dag.in_degree(**n) == 2)
        .map(|&n| {
            let p = dag.parents(n);
            decompose(dag, n, p[0], p[1])
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartsAnnotation {
    #[serde(rename = "N")]
    pub n: NodeRef,
    #[serde(rename = "N_a")]
    pub n_a: NodeRef,
    #[serde(rename = "N_b")]
    pub n_b: NodeRef,
}

/// Dataset item: `{cdag, tokens, parts: {N, N_a, N_b}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotatedItem {
    pub cdag: CDag,
    pub tokens: Vec<u32>,
    pub parts: PartsAnnotation,
}

impl AnnotatedItem {
    /// Checks the annotation and returns the decomposition it names.
    pub fn decomposition(&self) -> Result<PartsDecomposition> {
        let dag = &self.cdag;
        if self.tokens.len() != dag.num_tokens() {
            return Err(Error::Parts(format!(
                "{} tokens for a cDAG over {}",
                self.tokens.len(),
                dag.num_tokens()
            )));
        }
        if !out_degree_one(dag)? {
            return Err(Error::Parts(
                "coverage needs out-degree 1 and a single sink".into(),
            ));
        }
        let PartsAnnotation { n, n_a, n_b } = self.parts;
        if !dag.contains(n) || dag.parents(n) != vec![n_a, n_b] {
            return Err(Error::Parts(format!(
                "annotated {n} does not have parents ({n_a}, {n_b})"
            )));
        }
        Ok(decompose(dag, n, n_a, n_b))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Witnesses {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub remainder: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CoverageReport {
    pub has_a_match: bool,
    pub has_b_match: bool,
    pub has_remainder_match: bool,
    /// Indices into the training list.
    pub witnesses: Witnesses,
}

fn content(tokens: &[u32], positions: &[u32]) -> Vec<u32> {
    let mut v: Vec<u32> = positions.iter().map(|&i| tokens[i as usize - 1]).collect();
    v.sort_unstable();
    v
}

const PLACEHOLDER: u64 = u64::MAX;
const SINK: u64 = u64::MAX - 1;
const INTERNAL: u64 = u64::MAX - 2;

/// The graph with `n` and everything under it contracted to one placeholder
/// node. Sources keep their token as label, edges keep argument positions.
pub fn outside_graph(dag: &CDag, n: NodeRef, tokens: &[u32]) -> LabeledDag {
    let removed = ancestors(dag, n);
    let kept: Vec<NodeRef> = dag
        .nodes()
        .iter()
        .copied()
        .filter(|x| !removed.contains(x))
        .collect();
    let index = |x: NodeRef| -> usize {
        if removed.contains(&x) {
            kept.len()
        } else {
            kept.binary_search(&x).expect("kept node")
        }
    };
    let mut labels: Vec<u64> = kept
        .iter()
        .map(|x| {
            if x.is_source() {
                tokens[x.index as usize - 1] as u64
            } else if dag.is_sink(*x) {
                SINK
            } else {
                INTERNAL
            }
        })
        .collect();
    labels.push(PLACEHOLDER);
    let mut edges: Vec<(usize, usize, u32)> = dag
        .edges()
        .iter()
        .filter(|e| !removed.contains(&e.to))
        .map(|e| (index(e.from), index(e.to), e.arg_pos))
        .collect();
    edges.sort_unstable();
    edges.dedup();
    LabeledDag::new(labels, &edges)
}

/// Checks whether `train` contains items sharing part a, part b, and the
/// remainder with its outside graph, with the test item.
pub fn check_assumption_coverage(
    test: &AnnotatedItem,
    train: &[AnnotatedItem],
) -> Result<CoverageReport> {
    let d = test.decomposition()?;
    let a = content(&test.tokens, &d.part_a);
    let b = content(&test.tokens, &d.part_b);
    let rest = content(&test.tokens, &d.remainder);
    let outside = outside_graph(&test.cdag, d.n, &test.tokens);
    let mut report = CoverageReport::default();
    for (i, item) in train.iter().enumerate() {
        let di = item.decomposition()?;
        if content(&item.tokens, &di.part_a) == a {
            report.witnesses.a.push(i);
        }
        if content(&item.tokens, &di.part_b) == b {
            report.witnesses.b.push(i);
        }
        if content(&item.tokens, &di.remainder) == rest
            && outside_graph(&item.cdag, di.n, &item.tokens).isomorphic(&outside)
        {
            report.witnesses.remainder.push(i);
        }
    }
    report.has_a_match = !report.witnesses.a.is_empty();
    report.has_b_match = !report.witnesses.b.is_empty();
    report.has_remainder_match = !report.witnesses.remainder.is_empty();
    Ok(report)
}
