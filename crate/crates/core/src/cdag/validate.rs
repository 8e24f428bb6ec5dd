use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::Serialize;

use super::{CDag, Edge, NodeRef};

/// One broken cDAG invariant, with the offending node or edge.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    SourceCount {
        expected: usize,
        found: usize,
    },
    MissingSource {
        index: u32,
    },
    SourceHasParents {
        node: NodeRef,
    },
    EdgeNotUpward {
        edge: Edge,
    },
    DuplicateEdge {
        edge: Edge,
    },
    ArgPositions {
        node: NodeRef,
        found: Vec<u32>,
    },
    NoParents {
        node: NodeRef,
    },
    LevelRule {
        node: NodeRef,
        max_parent_level: u32,
    },
    DeadNode {
        node: NodeRef,
    },
    SinkHasChildren {
        node: NodeRef,
    },
    DuplicateSink {
        node: NodeRef,
    },
    NoSinks,
    IndexGap {
        level: u32,
        expected: u32,
        found: u32,
    },
    IndexOrder {
        earlier: NodeRef,
        later: NodeRef,
    },
    Collapsible {
        a: NodeRef,
        b: NodeRef,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::SourceCount { expected, found } => {
                write!(f, "expected {expected} sources at level 0, found {found}")
            }
            Self::MissingSource { index } => write!(f, "missing source 0:{index}"),
            Self::SourceHasParents { node } => write!(f, "source {node} has incoming edges"),
            Self::EdgeNotUpward { edge } if edge.from.level > edge.to.level => {
                write!(f, "edge decreases level: ({})→({})", edge.from, edge.to)
            }
            Self::EdgeNotUpward { edge } => {
                write!(f, "edge stays on one level: ({})→({})", edge.from, edge.to)
            }
            Self::DuplicateEdge { edge } => {
                write!(f, "duplicate edge ({})→({})", edge.from, edge.to)
            }
            Self::ArgPositions { node, found } => write!(
                f,
                "arg_pos at {node} must be 1..{} without repeats, found {found:?}",
                found.len()
            ),
            Self::NoParents { node } => write!(f, "internal node {node} has no parents"),
            Self::LevelRule { node, max_parent_level } => write!(
                f,
                "level must be 1+max(parent levels): {node} has max parent level {max_parent_level}"
            ),
            Self::DeadNode { node } => {
                write!(f, "internal node {node} is not a sink and has no children")
            }
            Self::SinkHasChildren { node } => write!(f, "sink {node} has outgoing edges"),
            Self::DuplicateSink { node } => write!(f, "sink {node} listed twice"),
            Self::NoSinks => write!(f, "cDAG has no sinks"),
            Self::IndexGap { level, expected, found } => write!(
                f,
                "indices at level {level} must be contiguous: expected {level}:{expected}, found {level}:{found}"
            ),
            Self::IndexOrder { earlier, later } => write!(
                f,
                "index order disagrees with parent order: {earlier} sorts after {later}"
            ),
            Self::Collapsible { a, b } => write!(
                f,
                "{a} and {b} share parents and argument order and should be one node"
            ),
        }
    }
}

/// Checks every cDAG invariant and returns all violations (empty when valid).
///
/// Sources are allowed to have no children: a selective operation such as
/// max-pooling can cut a token off from every sink, and such a source simply
/// has zero influence.
pub fn validate(dag: &CDag) -> Vec<Violation> {
    let mut out = Vec::new();
    let sources: Vec<NodeRef> = dag.sources().collect();
    if sources.len() != dag.num_tokens() {
        out.push(Violation::SourceCount {
            expected: dag.num_tokens(),
            found: sources.len(),
        });
    }
    let present: HashSet<u32> = sources.iter().map(|s| s.index).collect();
    for i in 1..=dag.num_tokens() as u32 {
        if !present.contains(&i) {
            out.push(Violation::MissingSource { index: i });
        }
    }

    let mut seen_pairs = HashSet::new();
    for e in dag.edges() {
        if e.from.level >= e.to.level {
            out.push(Violation::EdgeNotUpward { edge: *e });
        }
        if !seen_pairs.insert((e.from, e.to)) {
            out.push(Violation::DuplicateEdge { edge: *e });
        }
    }

    let sink_set: HashSet<NodeRef> = dag.sinks().iter().copied().collect();
    if dag.sinks().is_empty() {
        out.push(Violation::NoSinks);
    }
    let mut listed = HashSet::new();
    for s in dag.sinks() {
        if !listed.insert(*s) {
            out.push(Violation::DuplicateSink { node: *s });
        }
    }

    for (pos, &node) in dag.nodes().iter().enumerate() {
        let parents = dag.parent_positions(pos);
        if node.is_source() {
            if !parents.is_empty() {
                out.push(Violation::SourceHasParents { node });
            }
        } else {
            if parents.is_empty() {
                out.push(Violation::NoParents { node });
            } else {
                let max_parent_level = parents
                    .iter()
                    .map(|&p| dag.nodes()[p].level)
                    .max()
                    .unwrap_or(0);
                if node.level != max_parent_level + 1 {
                    out.push(Violation::LevelRule {
                        node,
                        max_parent_level,
                    });
                }
            }
            let mut found: Vec<u32> = dag
                .edges()
                .iter()
                .filter(|e| e.to == node)
                .map(|e| e.arg_pos)
                .collect();
            let mut sorted = found.clone();
            sorted.sort_unstable();
            if sorted != (1..=found.len() as u32).collect::<Vec<_>>() {
                found.sort_unstable();
                out.push(Violation::ArgPositions { node, found });
            }
        }
        let out_deg = dag.child_positions(pos).len();
        if sink_set.contains(&node) {
            if out_deg > 0 {
                out.push(Violation::SinkHasChildren { node });
            }
        } else if !node.is_source() && out_deg == 0 {
            out.push(Violation::DeadNode { node });
        }
    }

    let mut by_level: BTreeMap<u32, Vec<NodeRef>> = BTreeMap::new();
    for &n in dag.nodes() {
        by_level.entry(n.level).or_default().push(n);
    }
    for (&level, nodes) in &by_level {
        for (k, n) in nodes.iter().enumerate() {
            let expected = k as u32 + 1;
            if n.index != expected {
                out.push(Violation::IndexGap {
                    level,
                    expected,
                    found: n.index,
                });
                break;
            }
        }
        if level == 0 {
            continue;
        }
        let keys: Vec<(NodeRef, Vec<NodeRef>)> =
            nodes.iter().map(|&n| (n, dag.parents(n))).collect();
        for w in keys.windows(2) {
            match w[0].1.cmp(&w[1].1) {
                std::cmp::Ordering::Less => {}
                std::cmp::Ordering::Equal => out.push(Violation::Collapsible {
                    a: w[0].0,
                    b: w[1].0,
                }),
                std::cmp::Ordering::Greater => out.push(Violation::IndexOrder {
                    earlier: w[0].0,
                    later: w[1].0,
                }),
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(l: u32, i: u32) -> NodeRef {
        NodeRef::new(l, i)
    }

    fn e(a: NodeRef, b: NodeRef, p: u32) -> Edge {
        Edge::new(a, b, p)
    }

    #[test]
    fn flags_downward_edge() {
        // 0:1 -> 1:1 -> 2:1 plus a bogus 2:1 -> 1:1.
        let dag = CDag::new(
            1,
            vec![n(0, 1), n(1, 1), n(2, 1)],
            vec![
                e(n(0, 1), n(1, 1), 1),
                e(n(1, 1), n(2, 1), 1),
                e(n(2, 1), n(1, 1), 2),
            ],
            vec![n(2, 1)],
        )
        .unwrap();
        let v = validate(&dag);
        assert!(v
            .iter()
            .any(|x| x.to_string() == "edge decreases level: (2:1)→(1:1)"));
    }

    #[test]
    fn flags_level_rule() {
        let dag = CDag::new(
            2,
            vec![n(0, 1), n(0, 2), n(2, 1)],
            vec![e(n(0, 1), n(2, 1), 1), e(n(0, 2), n(2, 1), 2)],
            vec![n(2, 1)],
        )
        .unwrap();
        let v = validate(&dag);
        assert_eq!(v.len(), 1);
        assert!(v[0]
            .to_string()
            .starts_with("level must be 1+max(parent levels)"));
    }

    #[test]
    fn flags_bad_arg_positions_and_dead_nodes() {
        let dag = CDag::new(
            2,
            vec![n(0, 1), n(0, 2), n(1, 1), n(1, 2)],
            vec![
                e(n(0, 1), n(1, 1), 1),
                e(n(0, 2), n(1, 1), 3),
                e(n(0, 2), n(1, 2), 1),
            ],
            vec![n(1, 1)],
        )
        .unwrap();
        let v = validate(&dag);
        assert!(v
            .iter()
            .any(|x| matches!(x, Violation::ArgPositions { .. })));
        assert!(v.contains(&Violation::DeadNode { node: n(1, 2) }));
    }

    #[test]
    fn flags_index_order_and_collapsible_nodes() {
        // 1:1 <- 0:2 and 1:2 <- 0:1 : order swapped.
        let dag = CDag::new(
            2,
            vec![n(0, 1), n(0, 2), n(1, 1), n(1, 2)],
            vec![e(n(0, 2), n(1, 1), 1), e(n(0, 1), n(1, 2), 1)],
            vec![n(1, 1), n(1, 2)],
        )
        .unwrap();
        assert!(validate(&dag)
            .iter()
            .any(|x| matches!(x, Violation::IndexOrder { .. })));

        let dag = CDag::new(
            1,
            vec![n(0, 1), n(1, 1), n(1, 2)],
            vec![e(n(0, 1), n(1, 1), 1), e(n(0, 1), n(1, 2), 1)],
            vec![n(1, 1), n(1, 2)],
        )
        .unwrap();
        assert!(validate(&dag)
            .iter()
            .any(|x| matches!(x, Violation::Collapsible { .. })));
    }

    #[test]
    fn flags_missing_sources() {
        let dag = CDag::new(
            3,
            vec![n(0, 1), n(0, 3), n(1, 1)],
            vec![e(n(0, 1), n(1, 1), 1), e(n(0, 3), n(1, 1), 2)],
            vec![n(1, 1)],
        )
        .unwrap();
        let v = validate(&dag);
        assert!(v.contains(&Violation::MissingSource { index: 2 }));
    }
}
