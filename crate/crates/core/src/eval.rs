//! Numerical execution of a compositional function over a cDAG.
//!
//! `f(X) = h(g over D(X) applied to e(x_1,1), ..., e(x_L,L))`: sources take
//! the token embeddings, every internal node applies the span processor `g`
//! to its parents in argument order, and the readout `h` combines the sinks
//! in sink order. All maps are seeded and built so that their Lipschitz
//! constants are known by construction.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cdag::{CDag, NodeRef};
use crate::error::{Error, Result};
use crate::rational;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Positional {
    #[default]
    None,
    /// `e(x, i) = (E[x] + P(i)) / 2` with a unit-norm sinusoidal `P(i)`.
    Additive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderSpec {
    pub vocab_size: usize,
    pub dim: usize,
    pub seed: u64,
    #[serde(default)]
    pub positional: Positional,
}

impl EncoderSpec {
    pub fn new(vocab_size: usize, dim: usize, seed: u64) -> Self {
        Self {
            vocab_size,
            dim,
            seed,
            positional: Positional::None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpanKind {
    /// `Σ_j (c/k) A_j v_j`: per-argument Lipschitz exactly `c/k`.
    LinearMean,
    /// `tanh(Σ_j c A_j v_j + b)`: per-argument Lipschitz at most `c`.
    TanhLinear,
    /// `Σ_j c A_j v_j + b` over all `k` slots, missing ones padded with zero:
    /// per-argument Lipschitz exactly `c`.
    PaddedFixedArity,
}

impl std::str::FromStr for SpanKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "linearmean" | "linear" => Ok(SpanKind::LinearMean),
            "tanhlinear" | "tanh" => Ok(SpanKind::TanhLinear),
            "paddedfixedarity" | "padded" => Ok(SpanKind::PaddedFixedArity),
            _ => Err(Error::Parse(format!("unknown span processor kind {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpanProcessorSpec {
    pub kind: SpanKind,
    /// Target per-argument Lipschitz constant. Zero gives the zero map.
    #[serde(with = "rational::serde_str")]
    pub c: BigRational,
    /// `k`: arity after padding; in-degrees above it are an error.
    pub max_arity: usize,
    pub seed: u64,
    /// Add a seeded per-level bias, making `g` level-dependent.
    #[serde(default)]
    pub level_bias: bool,
}

impl SpanProcessorSpec {
    pub fn new(kind: SpanKind, c: BigRational, max_arity: usize, seed: u64) -> Self {
        Self {
            kind,
            c,
            max_arity,
            seed,
            level_bias: false,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutKind {
    /// `h(u_1..u_m) = Σ_n w_n · u_n` with `‖w_n‖ = γ`.
    #[default]
    LinearSum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutSpec {
    #[serde(default)]
    pub kind: ReadoutKind,
    #[serde(with = "rational::serde_str")]
    pub gamma: BigRational,
    pub m: usize,
    pub seed: u64,
}

impl ReadoutSpec {
    pub fn new(gamma: BigRational, m: usize, seed: u64) -> Self {
        Self {
            kind: ReadoutKind::LinearSum,
            gamma,
            m,
            seed,
        }
    }
}

fn uniform_vector(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0))
}

fn unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
    loop {
        let v = uniform_vector(rng, dim);
        let n = v.norm();
        if n > 1e-8 {
            return v / n;
        }
    }
}

/// Random matrix rescaled to spectral norm 1.
fn spectral_unit(rng: &mut ChaCha8Rng, dim: usize) -> DMatrix<f64> {
    loop {
        let a = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
        let sigma = a.clone().svd(false, false).singular_values.max();
        if sigma > 1e-8 {
            return a / sigma;
        }
    }
}

fn non_negative(r: &BigRational, what: &str) -> Result<f64> {
    if r.is_negative() {
        return Err(Error::Eval(format!(
            "{what} must be >= 0, got {}",
            rational::display(r)
        )));
    }
    Ok(rational::to_f64(r))
}

#[derive(Clone, Debug)]
pub struct Encoder {
    table: Vec<DVector<f64>>,
    dim: usize,
    positional: Positional,
}

impl Encoder {
    pub fn new(spec: &EncoderSpec) -> Result<Self> {
        if spec.vocab_size == 0 || spec.dim == 0 {
            return Err(Error::Eval(
                "vocabulary and dimension must be positive".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let table = (0..spec.vocab_size)
            .map(|_| unit_vector(&mut rng, spec.dim))
            .collect();
        Ok(Self {
            table,
            dim: spec.dim,
            positional: spec.positional,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocab_size(&self) -> usize {
        self.table.len()
    }

    fn position(&self, pos: usize) -> DVector<f64> {
        let d = self.dim as f64;
        let p = DVector::from_fn(self.dim, |r, _| {
            let k = (r / 2) as f64;
            let angle = pos as f64 / 10_000f64.powf(2.0 * k / d);
            if r % 2 == 0 {
                angle.sin()
            } else {
                angle.cos()
            }
        });
        let n = p.norm();
        if n > 0.0 {
            p / n
        } else {
            p
        }
    }

    /// `e(token, pos)` with `pos` 1-based. Norm at most 1.
    pub fn embed(&self, token: u32, pos: usize) -> Result<DVector<f64>> {
        let row = self.table.get(token as usize).ok_or_else(|| {
            Error::Eval(format!(
                "token {token} outside vocabulary of {}",
                self.table.len()
            ))
        })?;
        Ok(match self.positional {
            Positional::None => row.clone(),
            Positional::Additive => (row + self.position(pos)) * 0.5,
        })
    }

    /// `C = max ‖e(x, i) − e(x', i)‖` over token pairs; the positional term
    /// cancels, so this does not depend on `i`.
    pub fn max_pairwise_distance(&self) -> f64 {
        let scale = match self.positional {
            Positional::None => 1.0,
            Positional::Additive => 0.5,
        };
        let mut best = 0.0f64;
        for (a, ra) in self.table.iter().enumerate() {
            for rb in &self.table[a + 1..] {
                best = best.max((ra - rb).norm() * scale);
            }
        }
        best
    }
}

#[derive(Clone, Debug)]
pub struct SpanProcessor {
    kind: SpanKind,
    c: f64,
    maps: Vec<DMatrix<f64>>,
    bias: DVector<f64>,
    level_bias: Option<u64>,
    dim: usize,
}

impl SpanProcessor {
    pub fn new(spec: &SpanProcessorSpec, dim: usize) -> Result<Self> {
        let c = non_negative(&spec.c, "c")?;
        if spec.max_arity == 0 {
            return Err(Error::Eval("max_arity must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let maps = (0..spec.max_arity)
            .map(|_| spectral_unit(&mut rng, dim))
            .collect();
        let bias = uniform_vector(&mut rng, dim) * 0.1;
        Ok(Self {
            kind: spec.kind,
            c,
            maps,
            bias,
            level_bias: spec.level_bias.then_some(spec.seed),
            dim,
        })
    }

    pub fn max_arity(&self) -> usize {
        self.maps.len()
    }

    fn level_term(&self, level: u32) -> Option<DVector<f64>> {
        self.level_bias.map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
            rng.set_stream(level as u64);
            uniform_vector(&mut rng, self.dim) * 0.1
        })
    }

    /// Applies `g` at a node of `level` to `args` in argument order.
    pub fn apply(&self, level: u32, args: &[&DVector<f64>]) -> Result<DVector<f64>> {
        if args.len() > self.maps.len() {
            return Err(Error::Eval(format!(
                "node has {} arguments but the span processor takes at most {}",
                args.len(),
                self.maps.len()
            )));
        }
        let weight = match self.kind {
            SpanKind::LinearMean => self.c / self.maps.len() as f64,
            SpanKind::TanhLinear | SpanKind::PaddedFixedArity => self.c,
        };
        // Slots past `args.len()` hold the zero PAD vector and contribute nothing.
        let mut acc = DVector::zeros(self.dim);
        for (a, v) in self.maps.iter().zip(args) {
            acc.gemv(weight, a, v, 1.0);
        }
        if let Some(b) = self.level_term(level) {
            acc += b;
        }
        Ok(match self.kind {
            SpanKind::LinearMean => acc,
            SpanKind::TanhLinear => (acc + &self.bias).map(f64::tanh),
            SpanKind::PaddedFixedArity => acc + &self.bias,
        })
    }
}

#[derive(Clone, Debug)]
pub struct Readout {
    weights: Vec<DVector<f64>>,
}

impl Readout {
    pub fn new(spec: &ReadoutSpec, dim: usize) -> Result<Self> {
        let gamma = non_negative(&spec.gamma, "gamma")?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let weights = (0..spec.m)
            .map(|_| unit_vector(&mut rng, dim) * gamma)
            .collect();
        Ok(Self { weights })
    }

    pub fn arity(&self) -> usize {
        self.weights.len()
    }

    pub fn apply(&self, sinks: &[&DVector<f64>]) -> Result<f64> {
        if sinks.len() != self.weights.len() {
            return Err(Error::Eval(format!(
                "readout takes {} sink values, got {}",
                self.weights.len(),
                sinks.len()
            )));
        }
        Ok(self.weights.iter().zip(sinks).map(|(w, u)| w.dot(u)).sum())
    }
}

/// Node values and the output of one evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct Valuation {
    nodes: Vec<NodeRef>,
    values: Vec<DVector<f64>>,
    index: HashMap<NodeRef, usize>,
    pub output: f64,
}

impl Valuation {
    pub fn get(&self, n: NodeRef) -> Option<&DVector<f64>> {
        self.index.get(&n).map(|&i| &self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeRef, &DVector<f64>)> {
        self.nodes.iter().copied().zip(&self.values)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

impl Serialize for Valuation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Entry<'a> {
            node: NodeRef,
            value: &'a [f64],
        }
        #[derive(Serialize)]
        struct Wire<'a> {
            values: Vec<Entry<'a>>,
            output: f64,
        }
        Wire {
            values: self
                .iter()
                .map(|(node, v)| Entry {
                    node,
                    value: v.as_slice(),
                })
                .collect(),
            output: self.output,
        }
        .serialize(s)
    }
}

/// Encoder, span processor and readout, built once and reused.
#[derive(Clone, Debug)]
pub struct Model {
    pub encoder: Encoder,
    pub span: SpanProcessor,
    pub readout: Readout,
}

impl Model {
    pub fn new(enc: &EncoderSpec, sp: &SpanProcessorSpec, ro: &ReadoutSpec) -> Result<Self> {
        let encoder = Encoder::new(enc)?;
        let span = SpanProcessor::new(sp, enc.dim)?;
        let readout = Readout::new(ro, enc.dim)?;
        Ok(Self {
            encoder,
            span,
            readout,
        })
    }

    pub fn evaluate(&self, dag: &CDag, tokens: &[u32]) -> Result<Valuation> {
        if tokens.len() != dag.num_tokens() {
            return Err(Error::Eval(format!(
                "cDAG has {} sources but {} tokens were given",
                dag.num_tokens(),
                tokens.len()
            )));
        }
        let nodes = dag.nodes().to_vec();
        let mut values: Vec<DVector<f64>> = Vec::with_capacity(nodes.len());
        for (pos, n) in nodes.iter().enumerate() {
            let v = if n.is_source() {
                let i = n.index as usize;
                self.encoder.embed(tokens[i - 1], i)?
            } else {
                let args: Vec<&DVector<f64>> = dag
                    .parent_positions(pos)
                    .iter()
                    .map(|&p| &values[p])
                    .collect();
                self.span.apply(n.level, &args)?
            };
            values.push(v);
        }
        let index: HashMap<NodeRef, usize> =
            nodes.iter().enumerate().map(|(i, n)| (*n, i)).collect();
        let sinks: Vec<&DVector<f64>> = dag.sinks().iter().map(|s| &values[index[s]]).collect();
        let output = self.readout.apply(&sinks)?;
        Ok(Valuation {
            nodes,
            values,
            index,
            output,
        })
    }
}

/// One-shot convenience wrapper around [`Model::evaluate`].
pub fn evaluate(
    dag: &CDag,
    tokens: &[u32],
    enc: &EncoderSpec,
    sp: &SpanProcessorSpec,
    ro: &ReadoutSpec,
) -> Result<Valuation> {
    Model::new(enc, sp, ro)?.evaluate(dag, tokens)
}

fn random_ball(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
    unit_vector(rng, dim) * rng.gen_range(0.0..1.0)
}

/// Monte Carlo lower bound on the per-argument Lipschitz constant of `g`:
/// the largest `‖g(.., v_j + ε, ..) − g(.., v_j, ..)‖ / ‖ε‖` seen.
pub fn effective_lipschitz(
    sp: &SpanProcessorSpec,
    dim: usize,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let g = SpanProcessor::new(sp, dim)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for _ in 0..samples {
        let arity = rng.gen_range(1..=g.max_arity());
        let args: Vec<DVector<f64>> = (0..arity).map(|_| random_ball(&mut rng, dim)).collect();
        let slot = rng.gen_range(0..arity);
        let eps = unit_vector(&mut rng, dim) * 10f64.powf(rng.gen_range(-3.0..0.0));
        let level = rng.gen_range(1..8);
        let base = g.apply(level, &args.iter().collect::<Vec<_>>())?;
        let mut moved = args.clone();
        moved[slot] += &eps;
        let out = g.apply(level, &moved.iter().collect::<Vec<_>>())?;
        best = best.max((out - base).norm() / eps.norm());
    }
    Ok(best)
}

/// Monte Carlo estimate of `max |Δh| / Σ_n ‖Δu_n‖` for the readout.
pub fn effective_readout_lipschitz(
    ro: &ReadoutSpec,
    dim: usize,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let h = Readout::new(ro, dim)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for _ in 0..samples {
        let u: Vec<DVector<f64>> = (0..ro.m).map(|_| random_ball(&mut rng, dim)).collect();
        let v: Vec<DVector<f64>> = (0..ro.m).map(|_| random_ball(&mut rng, dim)).collect();
        let dh = (h.apply(&u.iter().collect::<Vec<_>>())?
            - h.apply(&v.iter().collect::<Vec<_>>())?)
        .abs();
        let du: f64 = u.iter().zip(&v).map(|(a, b)| (a - b).norm()).sum();
        if du > 0.0 {
            best = best.max(dh / du);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::{build_flat, build_uni_rnn};
    use crate::rational::int;

    fn specs(
        kind: SpanKind,
        c: u64,
        k: usize,
        m: usize,
    ) -> (EncoderSpec, SpanProcessorSpec, ReadoutSpec) {
        (
            EncoderSpec::new(12, 8, 1),
            SpanProcessorSpec::new(kind, int(c), k, 2),
            ReadoutSpec::new(int(1), m, 3),
        )
    }

    #[test]
    fn deterministic_evaluation() {
        let d = build_flat(3).unwrap();
        let (e, s, r) = specs(SpanKind::LinearMean, 2, 1, 3);
        let a = evaluate(&d, &[1, 2, 3], &e, &s, &r).unwrap();
        let b = evaluate(&d, &[1, 2, 3], &e, &s, &r).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn arity_and_vocab_errors() {
        let d = build_uni_rnn(3).unwrap();
        let (e, s, r) = specs(SpanKind::LinearMean, 2, 1, 1);
        assert!(matches!(
            evaluate(&d, &[1, 2, 3], &e, &s, &r),
            Err(Error::Eval(_))
        ));
        let (e, s, r) = specs(SpanKind::LinearMean, 2, 2, 1);
        assert!(evaluate(&d, &[1, 2, 99], &e, &s, &r).is_err());
        assert!(evaluate(&d, &[1, 2], &e, &s, &r).is_err());
    }

    #[test]
    fn embeddings_have_norm_at_most_one() {
        let mut spec = EncoderSpec::new(20, 6, 4);
        spec.positional = Positional::Additive;
        let enc = Encoder::new(&spec).unwrap();
        for t in 0..20 {
            for p in 1..10 {
                assert!(enc.embed(t, p).unwrap().norm() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn zero_span_processor_has_zero_lipschitz() {
        let s = SpanProcessorSpec::new(SpanKind::LinearMean, int(0), 3, 1);
        assert_eq!(effective_lipschitz(&s, 4, 200, 5).unwrap(), 0.0);
    }
}
