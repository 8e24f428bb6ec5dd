//! Path histograms, LoI values and closed-form comparisons.

use cdaglab::arch::{build_flat, build_transformer, build_uni_rnn, figures, ArchSpec};
use cdaglab::loi::{
    absolute_loi, brute_force_histograms, closed_form, compare_to_closed_form, complexity_profile,
    path_histograms, relative_loi, symbolic_beta, PathHistogram,
};
use cdaglab::rational::{int, parse_rational};
use cdaglab::Error;
use num_bigint::BigUint;
use num_rational::BigRational;

fn q(s: &str) -> BigRational {
    parse_rational(s).unwrap()
}

#[test]
fn example_histograms() {
    let hs = path_histograms(&figures::example1());
    assert_eq!(hs[0], PathHistogram::from_counts([(2, 1)]));
    assert_eq!(hs[2], PathHistogram::from_counts([(3, 1)]));
    let hs = path_histograms(&figures::example2());
    assert_eq!(hs[0], PathHistogram::from_counts([(3, 2), (4, 1)]));
    // The example's node list yields ten length-3 paths from source 5.
    assert_eq!(hs[4], PathHistogram::from_counts([(3, 10), (4, 7)]));
    for h in path_histograms(&build_flat(5).unwrap()) {
        assert_eq!(h, PathHistogram::from_counts([(1, 1)]));
    }
}

#[test]
fn brute_force_agrees_on_figures() {
    for d in [
        figures::example1(),
        figures::example2(),
        figures::sparse_example(),
    ] {
        assert_eq!(
            brute_force_histograms(&d, 1_000_000).unwrap(),
            path_histograms(&d)
        );
    }
}

#[test]
fn transformer_paths_per_source() {
    let hs = path_histograms(&build_transformer(4, 2).unwrap());
    assert_eq!(hs[0].total(), BigUint::from(16u32));
    assert_eq!(hs[0].counts().keys().copied().collect::<Vec<_>>(), vec![3]);
}

#[test]
fn uni_rnn_histograms() {
    let hs = path_histograms(&build_uni_rnn(4).unwrap());
    let want: Vec<PathHistogram> = [3, 3, 2, 1]
        .iter()
        .map(|&l| PathHistogram::from_counts([(l, 1)]))
        .collect();
    assert_eq!(hs, want);
}

#[test]
fn absolute_loi_values() {
    let c = int(2);
    assert_eq!(
        absolute_loi(&PathHistogram::from_counts([(2, 1)]), &c).unwrap(),
        int(4)
    );
    assert_eq!(
        absolute_loi(&PathHistogram::from_counts([(3, 9), (4, 7)]), &c).unwrap(),
        int(184)
    );
    assert_eq!(absolute_loi(&PathHistogram::new(), &c).unwrap(), int(0));
    assert!(matches!(
        absolute_loi(&PathHistogram::new(), &int(0)),
        Err(Error::NonPositiveC(_))
    ));
}

#[test]
fn relative_loi_values() {
    let hs = path_histograms(&figures::example1());
    let b = relative_loi(&hs, &int(2)).unwrap();
    assert_eq!(b[0], q("1/7"));
    assert_eq!(b[2], q("2/7"));
    assert_eq!(symbolic_beta(&hs, 0), "1/(2c + 3)");
    assert_eq!(symbolic_beta(&hs, 2), "c/(2c + 3)");
    assert!(matches!(
        relative_loi(&[PathHistogram::new()], &int(2)),
        Err(Error::AllZeroLoi)
    ));
}

#[test]
fn complexity_profiles() {
    let p = complexity_profile(&figures::example1(), &int(2)).unwrap();
    assert_eq!((p.k, p.q, p.m), (2, 1, 1));
    assert_eq!(p.delta_max, int(8));
    assert_eq!(p.beta_max, q("2/7"));
    let tree = complexity_profile(
        &ArchSpec::BalancedTree { len: 8 }.build().unwrap(),
        &q("3/2"),
    )
    .unwrap();
    assert!(tree.beta.iter().all(|b| *b == q("1/8")));
    let tf = complexity_profile(&build_transformer(5, 2).unwrap(), &int(3)).unwrap();
    assert!(tf.beta.iter().all(|b| *b == q("1/5")));
}

#[test]
fn closed_forms() {
    let uni = closed_form(&ArchSpec::UniRnn { len: 4 }, &int(2)).unwrap();
    assert_eq!(uni.delta_max, int(8));
    assert_eq!(uni.beta_max, Some(q("8/23")));
    let tree = closed_form(&ArchSpec::BalancedTree { len: 8 }, &int(3)).unwrap();
    assert_eq!((tree.delta_max, tree.beta_max), (int(27), Some(q("1/8"))));
}

#[test]
fn comparisons() {
    let tree = compare_to_closed_form(&ArchSpec::BalancedTree { len: 16 }, &int(2)).unwrap();
    assert!(tree.delta.exact_match && tree.beta.exact_match);
    let tf = compare_to_closed_form(&ArchSpec::Transformer { len: 4, blocks: 2 }, &int(2)).unwrap();
    assert!(tf.beta.exact_match);
    assert!(!tf.delta.exact_match);
    assert_eq!(tf.delta.ratio, Some(q("1/4")));
    let uni = compare_to_closed_form(&ArchSpec::UniRnn { len: 4 }, &int(2)).unwrap();
    assert!(uni.delta.exact_match);
    assert_eq!(uni.beta.enumerated, q("8/22"));
    assert_eq!(uni.beta.predicted, Some(q("8/23")));
}
