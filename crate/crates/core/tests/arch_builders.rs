//! Architecture builders against the fixed reference graphs and hand-derived shapes.

use std::collections::BTreeSet;

use cdaglab::arch::{
    build_balanced_tree, build_bi_rnn, build_conv_pool, build_decoder_transformer, build_flat,
    build_parse_tree, build_sparse_transformer, build_transformer, build_uni_rnn, figures,
    ConvPoolSpec, ParseTree, Pooling, SparsitySource,
};
use cdaglab::cdag::{validate, StructuralStats};
use cdaglab::loi::path_histograms;
use cdaglab::{CDag, NodeRef};

fn n(level: u32, index: u32) -> NodeRef {
    NodeRef::new(level, index)
}

fn stats(d: &CDag) -> (usize, usize, usize, u32) {
    let StructuralStats { k, q, m, depth } = d.structural_stats().unwrap();
    (k, q, m, depth)
}

/// Sorted multiset of path lengths from each source (single-path graphs).
fn distances(d: &CDag) -> Vec<u32> {
    path_histograms(d)
        .iter()
        .map(|h| h.max_len().expect("source reaches a sink"))
        .collect()
}

fn lengths(d: &CDag, source: usize) -> BTreeSet<u32> {
    path_histograms(d)[source - 1]
        .counts()
        .keys()
        .copied()
        .collect()
}

#[test]
fn flat() {
    let d = build_flat(4).unwrap();
    assert_eq!((d.nodes().len(), d.edges().len()), (8, 4));
    assert_eq!(stats(&d), (1, 1, 4, 1));
    let one = build_flat(1).unwrap();
    assert_eq!((one.nodes().len(), one.edges().len()), (2, 1));
}

#[test]
fn uni_rnn() {
    let d = build_uni_rnn(4).unwrap();
    assert_eq!(d.sinks(), &[n(3, 1)]);
    assert_eq!(distances(&d), vec![3, 3, 2, 1]);
    assert_eq!(stats(&d), (2, 1, 1, 3));
    let two = build_uni_rnn(2).unwrap();
    assert_eq!(two.level(1).collect::<Vec<_>>(), vec![n(1, 1)]);
    assert_eq!(two.sinks(), &[n(1, 1)]);
}

#[test]
fn bi_rnn() {
    let d = build_bi_rnn(4).unwrap();
    assert_eq!(stats(&d), (2, 2, 2, 3));
    assert_eq!(lengths(&d, 1), BTreeSet::from([1, 3]));
    assert_eq!(lengths(&d, 4), BTreeSet::from([1, 3]));
    assert_eq!(lengths(&d, 2), BTreeSet::from([2, 3]));
    let two = build_bi_rnn(2).unwrap();
    assert_eq!(two.nodes().len() - 2, 2);
    assert_eq!(two.sinks().len(), 2);
}

#[test]
fn balanced_trees() {
    assert_eq!(distances(&build_balanced_tree(4).unwrap()), vec![2; 4]);
    assert_eq!(distances(&build_balanced_tree(8).unwrap()), vec![3; 8]);
    let mut five = distances(&build_balanced_tree(5).unwrap());
    five.sort_unstable();
    assert_eq!(five, vec![2, 2, 2, 3, 3]);
}

#[test]
fn parse_trees_reproduce_example1() {
    let left: ParseTree = "((1,2),((3,4),5))".parse().unwrap();
    assert_eq!(build_parse_tree(&left).unwrap(), figures::example1());
    let right: ParseTree = "((1,(2,3)),(4,5))".parse().unwrap();
    assert_eq!(
        build_parse_tree(&right).unwrap(),
        figures::example1_reshaped()
    );
    assert!(build_parse_tree(&ParseTree::Leaf(1)).is_err());
}

#[test]
fn conv_pool_average() {
    let spec = ConvPoolSpec::new(7, 2, 2, 1, Pooling::Avg);
    let d = build_conv_pool(&spec, None).unwrap().cdag;
    assert_eq!(validate(&d), vec![]);
    assert_eq!(d.children(n(0, 1)), vec![n(1, 1)]);
    assert_eq!(d.children(n(0, 2)), vec![n(1, 1)]);
    assert_eq!(d.children(n(0, 3)), vec![n(1, 1), n(1, 2)]);
    assert_eq!(d.children(n(0, 5)), vec![n(1, 2), n(1, 3)]);
    assert_eq!(d.sinks(), &[n(2, 1)]);
}

#[test]
fn conv_pool_max_deactivation() {
    let spec = ConvPoolSpec::new(7, 2, 2, 1, Pooling::Max);
    let b = build_conv_pool(&spec, Some(&figures::max_pool_choices())).unwrap();
    let mut got = b.deactivated.clone();
    got.sort();
    assert_eq!(got, figures::max_pool_deactivated());
    assert_eq!(validate(&b.cdag), vec![]);
    assert!(build_conv_pool(&spec, None).is_err());
}

#[test]
fn conv_pool_padded() {
    let spec = ConvPoolSpec::new(7, 2, 3, 1, Pooling::Avg).padded(true);
    let d = build_conv_pool(&spec, None).unwrap().cdag;
    assert!(d.children(n(0, 6)).contains(&n(1, 2)));
}

#[test]
fn transformer_shapes() {
    let d = build_transformer(7, 2).unwrap();
    assert_eq!(d.nodes().len(), 7 * 3 + 1);
    assert_eq!(d.in_degree(d.sinks()[0]), 7);
    assert_eq!(stats(&d), (7, 7, 1, 3));
    assert_eq!(build_transformer(1, 1).unwrap().nodes().len(), 3);
}

#[test]
fn sparse_transformer() {
    let adv = build_sparse_transformer(4, 1, 2, &SparsitySource::Adversarial).unwrap();
    assert_eq!(path_histograms(&adv)[0].total(), 4u32.into());
    let seeded = SparsitySource::SeededRandom { seed: 9 };
    assert_eq!(
        build_sparse_transformer(6, 2, 3, &seeded).unwrap(),
        build_sparse_transformer(6, 2, 3, &seeded).unwrap()
    );
    let fixed = figures::sparse_example();
    assert_eq!(validate(&fixed), vec![]);
    // Level-2 nodes outside the sink's reading set are pruned and the
    // survivors renumbered, so the sink reads 2:1..2:3.
    assert_eq!(
        fixed.parents(fixed.sinks()[0]),
        vec![n(2, 1), n(2, 2), n(2, 3)]
    );
    assert_eq!(fixed.level(2).count(), 3);
    assert!(build_sparse_transformer(4, 1, 5, &SparsitySource::Adversarial).is_err());
}

#[test]
fn decoder_transformer() {
    let d = build_decoder_transformer(7, 2).unwrap();
    assert_eq!(validate(&d), vec![]);
    assert_eq!(d.in_degree(n(1, 1)), 1);
    assert_eq!(d.in_degree(n(1, 7)), 7);
    let small = build_decoder_transformer(3, 2).unwrap();
    let h = &path_histograms(&small)[0];
    assert_eq!(h.total(), 6u32.into());
    assert_eq!(h.counts().keys().copied().collect::<Vec<_>>(), vec![3]);
}

#[test]
fn every_builder_validates() {
    use rand::SeedableRng;
    for seed in 0..20 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for family in cdaglab::arch::Family::ALL {
            let (spec, d) = cdaglab::verify::random_cdag(family, &mut rng).unwrap();
            assert_eq!(validate(&d), vec![], "{spec}");
        }
    }
}
