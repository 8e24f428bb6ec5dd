//! Numerical evaluation of compositional functions over cDAGs.

use cdaglab::arch::{build_flat, build_uni_rnn, figures};
use cdaglab::eval::{
    effective_lipschitz, EncoderSpec, Model, ReadoutSpec, SpanKind, SpanProcessorSpec,
};
use cdaglab::rational::int;

fn model(kind: SpanKind, c: u64, k: usize, m: usize) -> Model {
    Model::new(
        &EncoderSpec::new(16, 6, 3),
        &SpanProcessorSpec::new(kind, int(c), k, 4),
        &ReadoutSpec::new(int(1), m, 5),
    )
    .unwrap()
}

#[test]
fn flat_evaluation_is_deterministic() {
    let d = build_flat(4).unwrap();
    let a = model(SpanKind::LinearMean, 2, 1, 4)
        .evaluate(&d, &[1, 2, 3, 4])
        .unwrap();
    let b = model(SpanKind::LinearMean, 2, 1, 4)
        .evaluate(&d, &[1, 2, 3, 4])
        .unwrap();
    assert_eq!(a.output.to_bits(), b.output.to_bits());
}

#[test]
fn example1_matches_direct_expression() {
    let m = model(SpanKind::LinearMean, 2, 2, 1);
    let tokens = [7u32, 1, 9, 4, 12];
    let e: Vec<_> = tokens
        .iter()
        .enumerate()
        .map(|(i, &t)| m.encoder.embed(t, i + 1).unwrap())
        .collect();
    let g = |level, a: &_, b: &_| m.span.apply(level, &[a, b]).unwrap();
    let left = g(1, &e[0], &e[1]);
    let inner = g(1, &e[2], &e[3]);
    let right = g(2, &inner, &e[4]);
    let top = g(3, &left, &right);
    let want = m.readout.apply(&[&top]).unwrap();
    let got = m.evaluate(&figures::example1(), &tokens).unwrap().output;
    assert!(
        (got - want).abs() <= 1e-12 * want.abs().max(1.0),
        "{got} vs {want}"
    );
}

#[test]
fn uni_rnn_is_linear_in_its_embeddings() {
    // With the linear span processor and linear readout, f is linear in the
    // embeddings: f(x) − f(x') equals the sum of single-position changes.
    let m = model(SpanKind::LinearMean, 2, 2, 1);
    let d = build_uni_rnn(3).unwrap();
    let x = [1u32, 2, 3];
    let y = [4u32, 5, 6];
    let f = |t: &[u32]| m.evaluate(&d, t).unwrap().output;
    let mut parts = 0.0;
    for i in 0..3 {
        let mut t = x;
        t[i] = y[i];
        parts += f(&t) - f(&x);
    }
    let whole = f(&y) - f(&x);
    assert!((whole - parts).abs() <= 1e-12 * whole.abs().max(1.0));
}

#[test]
fn arity_overflow_is_an_error() {
    let m = model(SpanKind::TanhLinear, 1, 1, 1);
    assert!(m.evaluate(&figures::example1(), &[1, 2, 3, 4, 5]).is_err());
}

#[test]
fn lipschitz_probes() {
    let lm = SpanProcessorSpec::new(SpanKind::LinearMean, int(2), 2, 1);
    assert!(effective_lipschitz(&lm, 6, 10_000, 2).unwrap() <= 2.0 + 1e-9);
    let th = SpanProcessorSpec::new(SpanKind::TanhLinear, int(1), 2, 1);
    assert!(effective_lipschitz(&th, 6, 10_000, 2).unwrap() <= 1.0 + 1e-9);
    let zero = SpanProcessorSpec::new(SpanKind::PaddedFixedArity, int(0), 3, 1);
    assert_eq!(effective_lipschitz(&zero, 6, 1_000, 2).unwrap(), 0.0);
}
