//! Property tests over randomly generated architectures.

use cdaglab::arch::{Family, ParseTree};
use cdaglab::cdag::{from_json, isomorphic, validate};
use cdaglab::loi::{brute_force_histograms, complexity_profile, path_histograms};
use cdaglab::rational::{int, parse_rational};
use cdaglab::verify::random_cdag;
use cdaglab::{ArchSpec, CDag};
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn family() -> impl Strategy<Value = Family> {
    (0..Family::ALL.len()).prop_map(|i| Family::ALL[i])
}

fn graph(family: Family, seed: u64) -> (ArchSpec, CDag) {
    random_cdag(family, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn c_value() -> impl Strategy<Value = BigRational> {
    (1u64..6, 1u64..4).prop_map(|(n, d)| parse_rational(&format!("{n}/{d}")).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn generated_graphs_validate_and_round_trip(f in family(), seed in any::<u64>()) {
        let (spec, d) = graph(f, seed);
        prop_assert_eq!(validate(&d), vec![], "{}", spec);
        prop_assert_eq!(from_json(&d.to_json()).unwrap(), d);
    }

    #[test]
    fn dp_matches_enumeration(f in family(), seed in any::<u64>()) {
        let (_, d) = graph(f, seed);
        prop_assert_eq!(path_histograms(&d), brute_force_histograms(&d, 10_000_000).unwrap());
    }

    #[test]
    fn relative_loi_is_a_distribution(f in family(), seed in any::<u64>(), c in c_value()) {
        let (_, d) = graph(f, seed);
        let p = complexity_profile(&d, &c).unwrap();
        let sum = p.beta.iter().fold(BigRational::zero(), |a, b| a + b);
        prop_assert!(sum.is_one());
        let l = int(d.num_tokens() as u64);
        prop_assert!(p.beta_max.clone() * l >= BigRational::one());
        for (h, (delta, beta)) in p.histograms.iter().zip(p.delta.iter().zip(&p.beta)) {
            prop_assert_eq!(h.is_empty(), delta.is_zero());
            prop_assert!(*beta <= BigRational::one());
            let non_sources = d.nodes().len() - d.num_tokens();
            prop_assert!(h.max_len().unwrap_or(0) as usize <= non_sources);
        }
    }

    #[test]
    fn absolute_loi_grows_with_c(f in family(), seed in any::<u64>(), c in c_value()) {
        let (_, d) = graph(f, seed);
        let lo = complexity_profile(&d, &c).unwrap();
        let hi = complexity_profile(&d, &(c.clone() + int(1))).unwrap();
        for (a, b) in lo.delta.iter().zip(&hi.delta) {
            prop_assert!(a <= b);
        }
    }

    #[test]
    fn isomorphism_is_an_equivalence(fa in family(), fb in family(), sa in 0u64..50, sb in 0u64..50) {
        let (_, a) = graph(fa, sa);
        let (_, b) = graph(fb, sb);
        let (_, a2) = graph(fa, sa);
        prop_assert!(isomorphic(&a, &a2));
        prop_assert_eq!(isomorphic(&a, &b), isomorphic(&b, &a));
        if isomorphic(&a, &b) {
            prop_assert!(isomorphic(&a2, &b));
        }
    }

    #[test]
    fn parse_trees_have_single_paths(len in 2u32..14, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = random_tree(&mut rng, 1, len);
        let text = tree.to_string();
        prop_assert_eq!(text.parse::<ParseTree>().unwrap(), tree.clone());
        let d = ArchSpec::ParseTree { tree }.build().unwrap();
        prop_assert_eq!(d.structural_stats().unwrap().q, 1);
        for h in path_histograms(&d) {
            prop_assert!(h.total().is_one());
        }
    }
}

fn random_tree(rng: &mut ChaCha8Rng, lo: u32, hi: u32) -> ParseTree {
    use rand::Rng;
    if lo == hi {
        return ParseTree::Leaf(lo);
    }
    let split = rng.gen_range(lo..hi);
    ParseTree::node(random_tree(rng, lo, split), random_tree(rng, split + 1, hi))
}
