//! Perturbation trials against the LoI sensitivity bound.

use cdaglab::arch::ArchSpec;
use cdaglab::eval::{EncoderSpec, ReadoutSpec, SpanKind, SpanProcessorSpec};
use cdaglab::rational::int;
use cdaglab::sensitivity::{class_bound_check, run_trials, TrialConfig};

fn cfg(arch: ArchSpec, kind: SpanKind, trials: usize) -> TrialConfig {
    TrialConfig {
        arch,
        encoder: EncoderSpec::new(24, 8, 1),
        span: SpanProcessorSpec::new(kind, int(2), 1, 2),
        readout: ReadoutSpec::new(int(1), 1, 3),
        trials,
        seed: 7,
        evaluate_changed: false,
    }
}

#[test]
fn uni_rnn_has_no_violations() {
    let r = run_trials(&cfg(
        ArchSpec::UniRnn { len: 6 },
        SpanKind::LinearMean,
        10_000,
    ))
    .unwrap();
    assert_eq!(r.summary.trials, 10_000);
    assert_eq!(r.summary.violations, 0);
}

#[test]
fn flat_ratio_approaches_its_ceiling() {
    let r = run_trials(&cfg(ArchSpec::Flat { len: 4 }, SpanKind::LinearMean, 2_000)).unwrap();
    assert_eq!(r.summary.violations, 0);
    assert!(r.summary.max_ratio > 0.5, "{}", r.summary.max_ratio);
}

#[test]
fn unchanged_token_gives_zero() {
    let r = run_trials(&cfg(
        ArchSpec::BalancedTree { len: 4 },
        SpanKind::TanhLinear,
        500,
    ))
    .unwrap();
    let same: Vec<_> = r
        .trials
        .iter()
        .filter(|t| t.tokens[t.j - 1] == t.replacement)
        .collect();
    assert!(!same.is_empty());
    assert!(same.iter().all(|t| t.lhs == 0.0 && t.ratio == 0.0));
}

#[test]
fn csv_log_is_reproducible() {
    let c = cfg(ArchSpec::BiRnn { len: 5 }, SpanKind::TanhLinear, 300);
    let a = run_trials(&c).unwrap().to_csv();
    assert_eq!(a, run_trials(&c).unwrap().to_csv());
    assert_eq!(a.lines().count(), 301);
}

#[test]
fn selective_pooling_discards_changed_graphs() {
    use cdaglab::arch::{ConvPoolSpec, Pooling};
    let arch = ArchSpec::ConvPool(ConvPoolSpec::new(7, 2, 2, 1, Pooling::Max));
    let r = run_trials(&cfg(arch, SpanKind::LinearMean, 500)).unwrap();
    assert!(r.summary.discarded > 0);
    assert_eq!(r.summary.violations, 0);
}

#[test]
fn class_bounds() {
    let tree = class_bound_check(&cfg(
        ArchSpec::BalancedTree { len: 8 },
        SpanKind::TanhLinear,
        300,
    ))
    .unwrap();
    assert_eq!(tree.delta_max, 8.0);
    assert!(tree.holds, "{tree:?}");
    let tf = class_bound_check(&cfg(
        ArchSpec::Transformer { len: 4, blocks: 1 },
        SpanKind::LinearMean,
        300,
    ))
    .unwrap();
    assert!(tf.holds, "{tf:?}");
    let mut zero = cfg(ArchSpec::UniRnn { len: 4 }, SpanKind::LinearMean, 50);
    zero.readout.gamma = int(0);
    assert_eq!(class_bound_check(&zero).unwrap().max_observed, 0.0);
}
