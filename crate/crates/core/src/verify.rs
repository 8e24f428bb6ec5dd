//! Acceptance checks shared by the test suite and `cdaglab suite`.
//!
//! Each check returns a [`CheckResult`] with a one-line detail; time budgets
//! and tolerances are constants below so the pass/fail rule is fixed in code.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::arch::{
    build_conv_pool, build_decoder_transformer, build_sparse_transformer, build_transformer,
    figures, ArchSpec, ConvPoolSpec, Family, ParseTree, PoolValuation, Pooling, SparsitySource,
};
use crate::cdag::{CDag, NodeRef};
use crate::error::Result;
use crate::eval::{EncoderSpec, ReadoutSpec, SpanKind, SpanProcessorSpec};
use crate::loi::{
    brute_force_histograms, compare_to_closed_form, complexity_profile, hub_paths_construction,
    hub_paths_stated, path_histograms, paths_from, symbolic_beta, DEFAULT_PATH_BUDGET,
};
use crate::rational::{self, int, pow};
use crate::sensitivity::{run_trials, TrialConfig};
use crate::separability::{
    check_assumption_coverage, enumerate_parts, AnnotatedItem, PartsAnnotation,
};

pub const GOLDEN_BUDGET: Duration = Duration::from_secs(1);
pub const ORACLE_BUDGET: Duration = Duration::from_secs(60);
pub const TRIAL_BUDGET: Duration = Duration::from_secs(120);
pub const ORACLE_SEEDS: u64 = 100;
pub const ORACLE_MIN_GRAPHS: usize = 500;
pub const TRIALS_PER_CASE: usize = 10_000;
pub const VALUATIONS: u64 = 20;

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub id: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed_ms: u128,
}

impl std::fmt::Display for CheckResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} [{}] {} ({} ms): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed_ms,
            self.detail
        )
    }
}

fn timed(
    id: &'static str,
    name: &'static str,
    budget: Option<Duration>,
    body: impl FnOnce() -> Result<(bool, String)>,
) -> CheckResult {
    let start = Instant::now();
    let (ok, mut detail) = body().unwrap_or_else(|e| (false, format!("error: {e}")));
    let elapsed = start.elapsed();
    let in_time = budget.is_none_or(|b| elapsed <= b);
    if !in_time {
        detail.push_str(&format!("; over time budget {budget:?}"));
    }
    CheckResult {
        id,
        name,
        passed: ok && in_time,
        detail,
        elapsed_ms: elapsed.as_millis(),
    }
}

fn frac(n: BigRational, d: BigRational) -> BigRational {
    n / d
}

/// All checks, in order.
pub fn run_all() -> Vec<CheckResult> {
    CHECKS.iter().map(|(_, f)| f()).collect()
}

/// The check with identifier `id`, if any.
pub fn run(id: &str) -> Option<CheckResult> {
    CHECKS.iter().find(|(i, _)| *i == id).map(|(_, f)| f())
}

/// A check: its identifier and the function running it.
pub type Check = (&'static str, fn() -> CheckResult);

pub const CHECKS: [Check; 14] = [
    ("1", golden_example1),
    ("2", golden_example2),
    ("3", oracle_equivalence),
    ("4", balanced_tree),
    ("5", transformer),
    ("6", sparse_hub),
    ("7", decoder_subcounts),
    ("8a", uni_rnn),
    ("8b", bi_rnn),
    ("9", sensitivity_suite),
    ("10a", max_pool_witness),
    ("10b", avg_pool_witness),
    ("11", separability),
    ("12", single_path),
];

pub fn golden_example1() -> CheckResult {
    timed("1", "golden example 1", Some(GOLDEN_BUDGET), || {
        let d = figures::example1();
        let mut bad = Vec::new();
        for c in [2u64, 3, 5] {
            let c = int(c);
            let p = complexity_profile(&d, &c)?;
            let den = int(2) * &c + int(3);
            let want = [
                (0, pow(&c, 2), frac(int(1), den.clone())),
                (2, pow(&c, 3), frac(c.clone(), den.clone())),
            ];
            for (i, dl, bt) in want {
                if p.delta[i] != dl || p.beta[i] != bt {
                    bad.push(format!(
                        "c={c} source {}: δ={} β={}",
                        i + 1,
                        rational::display(&p.delta[i]),
                        rational::display(&p.beta[i])
                    ));
                }
            }
        }
        let hs = path_histograms(&d);
        let sym = (symbolic_beta(&hs, 0), symbolic_beta(&hs, 2));
        let ok = bad.is_empty() && sym.0 == "1/(2c + 3)" && sym.1 == "c/(2c + 3)";
        Ok((
            ok,
            format!("β_1 = {}, β_3 = {}; mismatches {bad:?}", sym.0, sym.1),
        ))
    })
}

pub fn golden_example2() -> CheckResult {
    timed("2", "golden example 2", Some(GOLDEN_BUDGET), || {
        let d = figures::example2();
        let hs = path_histograms(&d);
        let mut bad = Vec::new();
        for c in [2u64, 3] {
            let c = int(c);
            let p = complexity_profile(&d, &c)?;
            let c3 = pow(&c, 3);
            let c4 = pow(&c, 4);
            let den = int(27) * &c + int(39);
            let want = [
                (0, &c4 + int(2) * &c3, frac(&c + int(2), den.clone())),
                (
                    4,
                    int(7) * &c4 + int(9) * &c3,
                    frac(int(7) * &c + int(9), den.clone()),
                ),
            ];
            for (i, dl, bt) in want {
                if p.delta[i] != dl {
                    bad.push(format!("c={c} δ_{}", i + 1));
                }
                if p.beta[i] != bt {
                    bad.push(format!("c={c} β_{}", i + 1));
                }
            }
        }
        let total: std::collections::BTreeMap<u32, BigUint> =
            hs.iter().fold(Default::default(), |mut acc, h| {
                for (l, n) in h.counts() {
                    *acc.entry(*l).or_default() += n;
                }
                acc
            });
        let total: Vec<String> = total
            .iter()
            .rev()
            .map(|(l, n)| format!("{n}c^{l}"))
            .collect();
        Ok((
            bad.is_empty(),
            format!(
                "enumerated δ_1 = {}, δ_5 = {}, Σδ = {}, β_1 = {}; mismatches {bad:?}",
                hs[0].polynomial(),
                hs[4].polynomial(),
                total.join(" + "),
                symbolic_beta(&hs, 0)
            ),
        ))
    })
}

fn random_tree(rng: &mut ChaCha8Rng, lo: u32, hi: u32) -> ParseTree {
    if lo == hi {
        return ParseTree::Leaf(lo);
    }
    let split = rng.gen_range(lo..hi);
    ParseTree::node(random_tree(rng, lo, split), random_tree(rng, split + 1, hi))
}

/// A random member of `family` with `L ≤ 8`, `M ≤ 3`, `K ≤ 4`, built with a
/// random valuation where the family needs one.
pub fn random_cdag(family: Family, rng: &mut ChaCha8Rng) -> Result<(ArchSpec, CDag)> {
    let len = rng.gen_range(3..=8usize);
    let blocks = rng.gen_range(1..=3usize);
    let spec = match family {
        Family::Flat => ArchSpec::Flat { len },
        Family::UniRnn => ArchSpec::UniRnn { len },
        Family::BiRnn => ArchSpec::BiRnn { len },
        Family::BalancedTree => ArchSpec::BalancedTree { len },
        Family::ParseTree => ArchSpec::ParseTree {
            tree: random_tree(rng, 1, len as u32),
        },
        Family::ConvPool => {
            let pooling =
                [Pooling::Avg, Pooling::Sum, Pooling::Max, Pooling::Min][rng.gen_range(0..4)];
            ArchSpec::ConvPool(
                ConvPoolSpec::new(len, rng.gen_range(2..=3), rng.gen_range(2..=3), 1, pooling)
                    .padded(rng.gen_bool(0.5)),
            )
        }
        Family::Transformer => ArchSpec::Transformer { len, blocks },
        Family::SparseTransformer => ArchSpec::SparseTransformer {
            len,
            blocks,
            k: rng.gen_range(1..=len.min(4)),
            sparsity: SparsitySource::SeededRandom { seed: rng.gen() },
        },
        Family::DecoderTransformer => ArchSpec::DecoderTransformer { len, blocks },
    };
    let valuation = PoolValuation::Scalars((0..len).map(|_| rng.gen_range(-1.0..1.0)).collect());
    let dag = spec.build_with(Some(&valuation))?;
    Ok((spec, dag))
}

pub fn oracle_equivalence() -> CheckResult {
    timed(
        "3",
        "DP vs brute-force path histograms",
        Some(ORACLE_BUDGET),
        || {
            let mut graphs = 0;
            let mut mismatches = Vec::new();
            for seed in 0..ORACLE_SEEDS {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for family in Family::ALL {
                    let (spec, dag) = random_cdag(family, &mut rng)?;
                    graphs += 1;
                    if path_histograms(&dag) != brute_force_histograms(&dag, DEFAULT_PATH_BUDGET)? {
                        mismatches.push(format!("seed {seed}: {spec}"));
                    }
                }
            }
            Ok((
                mismatches.is_empty() && graphs >= ORACLE_MIN_GRAPHS,
                format!(
                    "{graphs} graphs, {} mismatches {mismatches:?}",
                    mismatches.len()
                ),
            ))
        },
    )
}

pub fn balanced_tree() -> CheckResult {
    timed("4", "balanced tree LoI", None, || {
        let mut bad = Vec::new();
        for len in [2usize, 4, 8, 16] {
            let d = ArchSpec::BalancedTree { len }.build()?;
            for c in [2u64, 3] {
                let c = int(c);
                let p = complexity_profile(&d, &c)?;
                let want = pow(&c, len.trailing_zeros());
                let uniform = frac(int(1), int(len as u64));
                if p.delta_max != want || p.beta.iter().any(|b| *b != uniform) {
                    bad.push(format!(
                        "L={len} c={c}: δ_max={}",
                        rational::display(&p.delta_max)
                    ));
                }
            }
        }
        Ok((
            bad.is_empty(),
            format!("L ∈ {{2,4,8,16}}, c ∈ {{2,3}}; mismatches {bad:?}"),
        ))
    })
}

pub fn transformer() -> CheckResult {
    timed("5", "full transformer LoI", None, || {
        let mut bad = Vec::new();
        let mut realized = BTreeSet::new();
        let mut sample = String::new();
        for len in 2..=6usize {
            for blocks in 1..=3usize {
                let d = build_transformer(len, blocks)?;
                let p = complexity_profile(&d, &int(2))?;
                let uniform = frac(int(1), int(len as u64));
                if p.beta.iter().any(|b| *b != uniform) {
                    bad.push(format!("L={len} M={blocks}: β not uniform"));
                }
                let per_source = p.histograms[0].total();
                let lm = BigUint::from(len).pow(blocks as u32);
                if per_source == lm {
                    realized.insert("L^M");
                } else if per_source == &lm * len {
                    realized.insert("L^(M+1)");
                } else {
                    bad.push(format!("L={len} M={blocks}: {per_source} paths per source"));
                }
                if p.histograms.iter().any(|h| h.total() != per_source) {
                    bad.push(format!("L={len} M={blocks}: path counts differ by source"));
                }
                if len == 4 && blocks == 2 {
                    let cmp =
                        compare_to_closed_form(&ArchSpec::Transformer { len, blocks }, &int(2))?;
                    sample = format!(
                        "L=4 M=2: enumerated δ_max {} vs stated {}",
                        cmp.delta_enumerated_symbolic, cmp.delta_predicted_symbolic
                    );
                }
            }
        }
        Ok((
            bad.is_empty(),
            format!("paths per source realized as {realized:?}; {sample}; mismatches {bad:?}"),
        ))
    })
}

pub fn sparse_hub() -> CheckResult {
    timed("6", "adversarial sparse hub path count", None, || {
        let mut rows = Vec::new();
        let mut ok = true;
        for (len, k, blocks) in [(4usize, 2usize, 1usize), (6, 2, 2), (8, 3, 2)] {
            let d = build_sparse_transformer(len, blocks, k, &SparsitySource::Adversarial)?;
            let got = path_histograms(&d)[0].total();
            let stated = hub_paths_stated(len, k, blocks);
            let construction = hub_paths_construction(len, k, blocks);
            ok &= got == stated;
            rows.push(format!(
                "(L,K,M)=({len},{k},{blocks}): enumerated {got}, stated {stated}, construction count {construction}"
            ));
        }
        Ok((ok, rows.join("; ")))
    })
}

pub fn decoder_subcounts() -> CheckResult {
    timed("7", "decoder per-level path counts", None, || {
        let mut bad = Vec::new();
        for len in 2..=8usize {
            let d = build_decoder_transformer(len, 3)?;
            let from = paths_from(&d, NodeRef::source(1));
            for l in 1..=len as u32 {
                let at = |lvl| from.get(&NodeRef::new(lvl, l)).cloned().unwrap_or_default();
                if at(2) != BigUint::from(l) || at(3) != BigUint::from(l * (l + 1) / 2) {
                    bad.push(format!("L={len} l={l}: {} / {}", at(2), at(3)));
                }
            }
        }
        Ok((
            bad.is_empty(),
            format!("L ∈ 2..=8, M=3; mismatches {bad:?}"),
        ))
    })
}

fn rnn_check(
    id: &'static str,
    name: &'static str,
    build: fn(usize) -> ArchSpec,
    want: fn(&BigRational, u32) -> BigRational,
) -> CheckResult {
    timed(id, name, None, || {
        let mut bad = Vec::new();
        let mut betas = Vec::new();
        for len in 3..=12usize {
            let spec = build(len);
            for c in [2u64, 3] {
                let c = int(c);
                let p = complexity_profile(&spec.build()?, &c)?;
                if p.delta_max != want(&c, len as u32) {
                    bad.push(format!(
                        "L={len} c={c}: δ_max={} at source {:?}",
                        rational::display(&p.delta_max),
                        p.argmax_delta()
                    ));
                }
            }
            if len == 4 {
                let cmp = compare_to_closed_form(&spec, &int(2))?;
                betas.push(format!(
                    "L=4 c=2 β_max enumerated {} vs stated {}",
                    rational::display(&cmp.beta.enumerated),
                    cmp.beta
                        .predicted
                        .as_ref()
                        .map_or("undefined".into(), rational::display)
                ));
            }
        }
        let shown: Vec<&String> = bad.iter().take(3).collect();
        Ok((
            bad.is_empty(),
            format!(
                "{}; {} mismatches, first {shown:?}",
                betas.join("; "),
                bad.len()
            ),
        ))
    })
}

pub fn uni_rnn() -> CheckResult {
    rnn_check(
        "8a",
        "uni-RNN δ_max",
        |len| ArchSpec::UniRnn { len },
        |c, l| pow(c, l - 1),
    )
}

pub fn bi_rnn() -> CheckResult {
    rnn_check(
        "8b",
        "bi-RNN δ_max",
        |len| ArchSpec::BiRnn { len },
        |c, l| pow(c, l - 1) + c,
    )
}

fn trial_cases() -> Vec<ArchSpec> {
    vec![
        ArchSpec::UniRnn { len: 6 },
        ArchSpec::BiRnn { len: 6 },
        ArchSpec::BalancedTree { len: 6 },
        ArchSpec::ConvPool(ConvPoolSpec::new(6, 2, 2, 1, Pooling::Avg)),
        ArchSpec::Transformer { len: 6, blocks: 2 },
    ]
}

pub fn sensitivity_suite() -> CheckResult {
    timed(
        "9",
        "perturbation trials vs LoI bound",
        Some(TRIAL_BUDGET),
        || {
            let kinds = [
                (SpanKind::LinearMean, int(2)),
                (SpanKind::TanhLinear, frac(int(3), int(2))),
            ];
            let mut rows = Vec::new();
            let mut violations = 0;
            for arch in trial_cases() {
                for (kind, c) in &kinds {
                    let cfg = TrialConfig {
                        arch: arch.clone(),
                        encoder: EncoderSpec::new(32, 8, 11),
                        span: SpanProcessorSpec::new(*kind, c.clone(), 1, 12),
                        readout: ReadoutSpec::new(int(1), 1, 13),
                        trials: TRIALS_PER_CASE,
                        seed: 2024,
                        evaluate_changed: false,
                    };
                    let r = run_trials(&cfg)?;
                    violations += r.summary.violations;
                    rows.push(format!(
                        "{} {kind:?}: max ratio {:.3}",
                        arch.family(),
                        r.summary.max_ratio
                    ));
                }
            }
            Ok((
                violations == 0,
                format!("{violations} violations; {}", rows.join(", ")),
            ))
        },
    )
}

fn random_valuations(len: usize) -> impl Iterator<Item = PoolValuation> {
    (0..VALUATIONS).map(move |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PoolValuation::Scalars((0..len).map(|_| rng.gen_range(-1.0..1.0)).collect())
    })
}

fn distinct_graphs(pooling: Pooling) -> Result<usize> {
    let spec = ConvPoolSpec::new(7, 2, 2, 1, pooling);
    let mut seen = BTreeSet::new();
    for v in random_valuations(7) {
        seen.insert(build_conv_pool(&spec, Some(&v))?.cdag.to_json());
    }
    Ok(seen.len())
}

pub fn max_pool_witness() -> CheckResult {
    timed("10a", "max-pool cDAG depends on the input", None, || {
        let n = distinct_graphs(Pooling::Max)?;
        let spec = ConvPoolSpec::new(7, 2, 2, 1, Pooling::Max);
        let b = build_conv_pool(&spec, Some(&figures::max_pool_choices()))?;
        let mut got = b.deactivated.clone();
        got.sort();
        let mut want = figures::max_pool_deactivated();
        want.sort();
        let shown: Vec<String> = got.iter().map(|(a, b)| format!("{a}→{b}")).collect();
        Ok((
            n >= 2 && got == want,
            format!(
                "{n} distinct cDAGs over {VALUATIONS} valuations; drawn selection deactivates {}",
                shown.join(", ")
            ),
        ))
    })
}

pub fn avg_pool_witness() -> CheckResult {
    timed("10b", "avg-pool cDAG is input-agnostic", None, || {
        let n = distinct_graphs(Pooling::Avg)?;
        Ok((
            n == 1,
            format!("{n} distinct cDAGs over {VALUATIONS} valuations"),
        ))
    })
}

fn annotated(cdag: CDag, tokens: [u32; 7]) -> AnnotatedItem {
    let n = NodeRef::new(2, 1);
    let p = cdag.parents(n);
    AnnotatedItem {
        parts: PartsAnnotation {
            n,
            n_a: p[0],
            n_b: p[1],
        },
        cdag,
        tokens: tokens.to_vec(),
    }
}

pub fn separability() -> CheckResult {
    timed("11", "separable parts and coverage", None, || {
        use figures::coverage::*;
        let has = |d: &CDag, a: &[u32], b: &[u32]| {
            enumerate_parts(d)
                .iter()
                .any(|p| p.part_a == a && p.part_b == b)
        };
        let left = has(&figures::parts_left(), &[3, 4], &[5, 6]);
        let right = has(&figures::parts_right(), &[2, 6], &[3, 5]);
        let none = enumerate_parts(&build_transformer(4, 2)?).is_empty();
        let test = annotated(test_graph(), TOKENS_TEST);
        let train = [
            annotated(graph_a(), TOKENS_A),
            annotated(graph_b(), TOKENS_B),
            annotated(graph_rest(), TOKENS_REST),
        ];
        let full = check_assumption_coverage(&test, &train)?;
        let covered = full.has_a_match && full.has_b_match && full.has_remainder_match;
        let mut mutated = train.clone();
        mutated[2] = annotated(graph_rest_mutated(), TOKENS_REST);
        let broken = check_assumption_coverage(&test, &mutated)?;
        let rejected = !broken.has_remainder_match;
        Ok((
            left && right && none && covered && rejected,
            format!(
                "left parts {left}, right parts {right}, transformer none {none}, \
                 coverage {covered}, mutated outside graph rejected {rejected}"
            ),
        ))
    })
}

/// Every out-degree-one graph the crate builds or that the tests generate.
pub fn q1_corpus() -> Result<Vec<CDag>> {
    let mut out = vec![
        figures::example1(),
        figures::example1_reshaped(),
        figures::parts_left(),
        figures::parts_right(),
        figures::coverage::graph_a(),
        figures::coverage::graph_b(),
        figures::coverage::graph_rest(),
        figures::coverage::graph_rest_mutated(),
    ];
    for len in 2..=12 {
        out.push(ArchSpec::Flat { len }.build()?);
        out.push(ArchSpec::UniRnn { len }.build()?);
        out.push(ArchSpec::BalancedTree { len }.build()?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..100 {
        let len = rng.gen_range(2..=12);
        out.push(
            ArchSpec::ParseTree {
                tree: random_tree(&mut rng, 1, len),
            }
            .build()?,
        );
    }
    Ok(out)
}

pub fn single_path() -> CheckResult {
    timed("12", "out-degree one gives single paths", None, || {
        let corpus = q1_corpus()?;
        let mut bad = 0;
        for d in &corpus {
            let q1 = d.structural_stats()?.q == 1;
            let single = path_histograms(d).iter().all(|h| h.total().is_one());
            bad += usize::from(!(q1 && single));
        }
        Ok((
            bad == 0,
            format!("{} graphs, {bad} with a non-single path", corpus.len()),
        ))
    })
}

/// Sum of a profile's `β`, exposed for quick sanity checks.
pub fn beta_sum(dag: &CDag, c: &BigRational) -> Result<BigRational> {
    Ok(complexity_profile(dag, c)?
        .beta
        .iter()
        .fold(BigRational::zero(), |a, b| a + b))
}
