//! Hand-built reference graphs used as golden inputs by tests, the CLI
//! (`example1`, `example2`) and the acceptance checks.

use super::{
    build_parse_tree, build_sparse_transformer, ExplicitPattern, ParseTree, PoolValuation,
    SparsitySource,
};
use crate::cdag::{CDag, CDagBuilder, Handle, NodeRef};

fn tree(s: &str) -> CDag {
    let t: ParseTree = s.parse().expect("static parse tree");
    build_parse_tree(&t).expect("static parse tree builds")
}

/// Five-token parse tree `((1,2),((3,4),5))`.
pub fn example1() -> CDag {
    tree("((1,2),((3,4),5))")
}

/// The same five tokens bracketed as `((1,(2,3)),(4,5))`.
pub fn example1_reshaped() -> CDag {
    tree("((1,(2,3)),(4,5))")
}

/// Seven tokens, in-degree three, two sinks `[4:1, 3:1]`.
pub fn example2() -> CDag {
    let mut b = CDagBuilder::new(7);
    let s: Vec<Handle> = (1..=7).map(|i| b.source(i)).collect();
    let src = |ix: [usize; 3]| ix.map(|i| s[i - 1]);
    let l1 = [
        b.node(src([1, 2, 3])),
        b.node(src([2, 3, 4])),
        b.node(src([3, 5, 7])),
        b.node(src([4, 5, 6])),
        b.node(src([5, 6, 7])),
    ];
    let p1 = |ix: [usize; 3]| ix.map(|i| l1[i - 1]);
    let l2 = [
        b.node(p1([1, 2, 3])),
        b.node(p1([1, 3, 4])),
        b.node(p1([2, 4, 5])),
        b.node(p1([3, 4, 5])),
    ];
    let n31 = b.node([l2[0], l2[1], l2[2]]);
    let n32 = b.node([l2[1], l2[2], l2[3]]);
    let n41 = b.node([n32, l2[2], l2[3]]);
    b.sinks([n41, n31]);
    b.build().expect("static graph builds")
}

/// A q = 1 graph given as `(level-1 token pairs, higher nodes)`. Higher nodes
/// list two parents each, written as `(level, index)` of already-listed nodes
/// (`level` 0 = token). Argument order is the sorted label order.
fn q1_graph(len: usize, pairs: &[[usize; 2]], upper: &[[(u32, u32); 2]]) -> CDag {
    let mut b = CDagBuilder::new(len);
    let mut by_label: Vec<(NodeRef, Handle)> = (1..=len)
        .map(|i| (NodeRef::source(i as u32), b.source(i)))
        .collect();
    for (j, p) in pairs.iter().enumerate() {
        let h = b.node_unordered([b.source(p[0]), b.source(p[1])]);
        by_label.push((NodeRef::new(1, j as u32 + 1), h));
    }
    let find = |by: &[(NodeRef, Handle)], (l, i): (u32, u32)| {
        by.iter()
            .find(|(n, _)| *n == NodeRef::new(l, i))
            .map(|(_, h)| *h)
            .expect("parent listed earlier")
    };
    let mut last = None;
    let mut level_count = std::collections::BTreeMap::<u32, u32>::new();
    for parents in upper {
        let hs = [find(&by_label, parents[0]), find(&by_label, parents[1])];
        let level = 1 + parents[0].0.max(parents[1].0);
        let idx = level_count.entry(level).or_insert(0);
        *idx += 1;
        let h = b.node_unordered(hs);
        by_label.push((NodeRef::new(level, *idx), h));
        last = Some(h);
    }
    b.sink(last.expect("at least one upper node"));
    b.build().expect("static graph builds")
}

/// Chain with side parts: parts `{3,4}` and `{5,6}` meet at `2:1`.
pub fn parts_left() -> CDag {
    q1_graph(
        7,
        &[[1, 2], [3, 4], [5, 6]],
        &[[(1, 2), (1, 3)], [(1, 1), (2, 1)], [(0, 7), (3, 1)]],
    )
}

/// Non-contiguous parts `{2,6}` and `{3,5}` meeting at `2:1`.
pub fn parts_right() -> CDag {
    let mut b = CDagBuilder::new(7);
    let n11 = b.node([b.source(1)]);
    let n12 = b.node_unordered([b.source(2), b.source(6)]);
    let n13 = b.node_unordered([b.source(3), b.source(5)]);
    let n14 = b.node_unordered([b.source(4), b.source(7)]);
    let n21 = b.node_unordered([n12, n13]);
    let n31 = b.node_unordered([n21, n14]);
    let n41 = b.node_unordered([n31, n11]);
    b.sink(n41);
    b.build().expect("static graph builds")
}

/// Coverage quadruple: the test item and three training items.
pub mod coverage {
    use super::*;

    pub const TOKENS_TEST: [u32; 7] = [10, 11, 3, 4, 5, 6, 12];
    /// Shares part a (tokens 3, 4).
    pub const TOKENS_A: [u32; 7] = [20, 3, 4, 21, 7, 8, 22];
    /// Shares part b (tokens 5, 6).
    pub const TOKENS_B: [u32; 7] = [30, 31, 1, 2, 32, 5, 6];
    /// Shares the remainder (tokens 10, 11, 12) and the outside graph.
    pub const TOKENS_REST: [u32; 7] = [10, 11, 40, 41, 42, 43, 12];

    pub fn test_graph() -> CDag {
        parts_left()
    }

    pub fn graph_a() -> CDag {
        q1_graph(
            7,
            &[[2, 3], [4, 7], [5, 6]],
            &[[(1, 1), (1, 3)], [(2, 1), (0, 1)], [(3, 1), (1, 2)]],
        )
    }

    pub fn graph_b() -> CDag {
        q1_graph(
            7,
            &[[1, 2], [3, 4], [6, 7]],
            &[[(1, 2), (1, 3)], [(2, 1), (0, 5)], [(3, 1), (1, 1)]],
        )
    }

    pub fn graph_rest() -> CDag {
        q1_graph(
            7,
            &[[1, 2], [3, 5], [4, 6]],
            &[[(1, 2), (1, 3)], [(1, 1), (2, 1)], [(3, 1), (0, 7)]],
        )
    }

    /// `graph_rest` with `1:1` and `0:7` swapped between `3:1` and `4:1`:
    /// same remainder tokens, different outside graph.
    pub fn graph_rest_mutated() -> CDag {
        q1_graph(
            7,
            &[[1, 2], [3, 5], [4, 6]],
            &[[(1, 2), (1, 3)], [(0, 7), (2, 1)], [(3, 1), (1, 1)]],
        )
    }
}

/// Drawn K = 2 sparse-attention pattern over seven tokens and two blocks,
/// with the sink reading `2:4`, `2:5` and `2:7`.
pub fn sparse_pattern() -> ExplicitPattern {
    let l1 = [[2, 4], [1, 3], [2, 6], [2, 5], [3, 6], [1, 7], [4, 5]];
    let l2 = [[3, 4], [1, 3], [4, 6], [3, 7], [4, 6], [2, 4], [5, 6]];
    ExplicitPattern {
        levels: vec![
            l1.iter().map(|s| s.to_vec()).collect(),
            l2.iter().map(|s| s.to_vec()).collect(),
        ],
        sink_parents: Some(vec![4, 5, 7]),
    }
}

pub fn sparse_example() -> CDag {
    build_sparse_transformer(7, 2, 2, &SparsitySource::Explicit(sparse_pattern()))
        .expect("static pattern builds")
}

/// Window selection for max-pooling at `L=7, w=2, p=2, m=1`: the first
/// window of every level-1 pool, the second window at level 2.
pub fn max_pool_choices() -> PoolValuation {
    PoolValuation::Choices(vec![vec![0, 0, 0], vec![1]])
}

/// Edges that [`max_pool_choices`] switches off, in full-graph labels.
pub fn max_pool_deactivated() -> Vec<(NodeRef, NodeRef)> {
    let n = NodeRef::new;
    vec![
        (n(0, 3), n(1, 1)),
        (n(0, 5), n(1, 2)),
        (n(0, 7), n(1, 3)),
        (n(1, 1), n(2, 1)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_figures_validate() {
        for d in [
            example1(),
            example1_reshaped(),
            example2(),
            parts_left(),
            parts_right(),
            coverage::graph_a(),
            coverage::graph_b(),
            coverage::graph_rest(),
            coverage::graph_rest_mutated(),
            sparse_example(),
        ] {
            assert!(crate::cdag::validate(&d).is_empty());
        }
    }

    #[test]
    fn example2_labels_match_construction() {
        let d = example2();
        let n = NodeRef::new;
        assert_eq!(d.parents(n(4, 1)), vec![n(3, 2), n(2, 3), n(2, 4)]);
        assert_eq!(d.parents(n(1, 3)), vec![n(0, 3), n(0, 5), n(0, 7)]);
        assert_eq!(d.sinks(), &[n(4, 1), n(3, 1)]);
    }

    #[test]
    fn q1_graph_labels_are_as_listed() {
        let d = coverage::graph_a();
        let n = NodeRef::new;
        assert_eq!(d.parents(n(1, 2)), vec![n(0, 4), n(0, 7)]);
        assert_eq!(d.parents(n(4, 1)), vec![n(1, 2), n(3, 1)]);
    }
}
