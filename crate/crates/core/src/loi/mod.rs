//! Locus of influence.
//!
//! For every source we count source-to-sink paths by length. The absolute LoI
//! at weight `c` is `δ_i = Σ_ℓ count_ℓ · c^ℓ`; the relative LoI is
//! `β_i = δ_i / Σ_j δ_j`. Counts are unbounded integers and `c` is an exact
//! rational, so every reported value is exact.

mod closed_form;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::cdag::{CDag, NodeRef};
use crate::error::{Error, Result};
use crate::rational;

pub use closed_form::{
    closed_form, compare_to_closed_form, hub_paths_construction, hub_paths_stated, ClosedForm,
    Comparison, Exactness, ValueComparison,
};

/// Default cap on the number of paths the brute-force oracle will walk.
pub const DEFAULT_PATH_BUDGET: u64 = 10_000_000;

/// Path length → number of paths, zero counts omitted.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathHistogram {
    counts: BTreeMap<u32, BigUint>,
}

impl PathHistogram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_counts(pairs: impl IntoIterator<Item = (u32, u64)>) -> Self {
        let mut h = Self::new();
        for (len, n) in pairs {
            h.add(len, &BigUint::from(n));
        }
        h
    }

    pub fn counts(&self) -> &BTreeMap<u32, BigUint> {
        &self.counts
    }

    pub fn get(&self, len: u32) -> BigUint {
        self.counts.get(&len).cloned().unwrap_or_default()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Total number of paths.
    pub fn total(&self) -> BigUint {
        self.counts.values().sum()
    }

    pub fn max_len(&self) -> Option<u32> {
        self.counts.keys().next_back().copied()
    }

    pub fn add(&mut self, len: u32, n: &BigUint) {
        if n.is_zero() {
            return;
        }
        *self.counts.entry(len).or_default() += n;
    }

    fn add_shifted(&mut self, other: &PathHistogram, shift: u32) {
        for (len, n) in &other.counts {
            self.add(len + shift, n);
        }
    }

    /// Every count multiplied by `k`.
    pub fn scaled(&self, k: &BigUint) -> Self {
        let mut h = Self::new();
        for (len, n) in &self.counts {
            h.add(*len, &(n * k));
        }
        h
    }

    /// `Σ count_ℓ · c^ℓ`.
    pub fn evaluate(&self, c: &BigRational) -> BigRational {
        self.counts
            .iter()
            .map(|(len, n)| rational::from_biguint(n) * rational::pow(c, *len))
            .sum()
    }

    /// `δ` as a polynomial in `c`, highest power first, e.g. `7c^4 + 9c^3`.
    pub fn polynomial(&self) -> String {
        polynomial_string(&self.counts)
    }
}

impl fmt::Display for PathHistogram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .counts
            .iter()
            .map(|(l, n)| format!("{l}:{n}"))
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

fn polynomial_string(coeffs: &BTreeMap<u32, BigUint>) -> String {
    let terms: Vec<String> = coeffs
        .iter()
        .rev()
        .filter(|(_, n)| !n.is_zero())
        .map(|(p, n)| {
            let coef = if n.is_one() && *p > 0 {
                String::new()
            } else {
                n.to_string()
            };
            match p {
                0 => coef,
                1 => format!("{coef}c"),
                _ => format!("{coef}c^{p}"),
            }
        })
        .collect();
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join(" + ")
    }
}

/// Per-source histograms (index `i-1` for source `0:i`) by one backward pass
/// from the sinks.
pub fn path_histograms(dag: &CDag) -> Vec<PathHistogram> {
    let nodes = dag.nodes();
    let mut to_sink: Vec<PathHistogram> = vec![PathHistogram::new(); nodes.len()];
    // Nodes are sorted by level, so children come later in the slice.
    for pos in (0..nodes.len()).rev() {
        let mut h = PathHistogram::new();
        if dag.is_sink(nodes[pos]) {
            h.add(0, &BigUint::one());
        }
        for &(child, _) in dag.child_positions(pos) {
            h.add_shifted(&to_sink[child], 1);
        }
        to_sink[pos] = h;
    }
    dag.sources()
        .map(|s| to_sink[dag.position(s).expect("source present")].clone())
        .collect()
}

/// Independent oracle: enumerates every path depth-first. Fails once more
/// than `budget` complete paths have been seen.
pub fn brute_force_histograms(dag: &CDag, budget: u64) -> Result<Vec<PathHistogram>> {
    let mut seen = 0u64;
    let mut out = Vec::with_capacity(dag.num_tokens());
    for s in dag.sources() {
        let mut h = PathHistogram::new();
        let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
        let mut stack: Vec<(NodeRef, u32)> = vec![(s, 0)];
        while let Some((n, len)) = stack.pop() {
            if dag.is_sink(n) {
                seen += 1;
                if seen > budget {
                    return Err(Error::PathBudget { budget });
                }
                *counts.entry(len).or_default() += 1;
            }
            for c in dag.children(n) {
                stack.push((c, len + 1));
            }
        }
        for (len, n) in counts {
            h.add(len, &BigUint::from(n));
        }
        out.push(h);
    }
    Ok(out)
}

/// Number of paths from `source` to every node reachable from it (forward
/// pass; the source itself counts one empty path).
pub fn paths_from(dag: &CDag, source: NodeRef) -> HashMap<NodeRef, BigUint> {
    let mut count: Vec<BigUint> = vec![BigUint::zero(); dag.nodes().len()];
    let Some(start) = dag.position(source) else {
        return HashMap::new();
    };
    count[start] = BigUint::one();
    for pos in start..dag.nodes().len() {
        if count[pos].is_zero() {
            continue;
        }
        let here = count[pos].clone();
        for &(child, _) in dag.child_positions(pos) {
            count[child] += &here;
        }
    }
    dag.nodes()
        .iter()
        .zip(count)
        .filter(|(_, n)| !n.is_zero())
        .map(|(node, n)| (*node, n))
        .collect()
}

fn check_c(c: &BigRational) -> Result<()> {
    if c.is_positive() {
        Ok(())
    } else {
        Err(Error::NonPositiveC(rational::display(c)))
    }
}

/// `δ_i` for one histogram.
pub fn absolute_loi(hist: &PathHistogram, c: &BigRational) -> Result<BigRational> {
    check_c(c)?;
    Ok(hist.evaluate(c))
}

/// `β_i = δ_i / Σ_j δ_j` for every source.
pub fn relative_loi(hists: &[PathHistogram], c: &BigRational) -> Result<Vec<BigRational>> {
    check_c(c)?;
    let deltas: Vec<BigRational> = hists.iter().map(|h| h.evaluate(c)).collect();
    normalise(&deltas)
}

fn normalise(deltas: &[BigRational]) -> Result<Vec<BigRational>> {
    let total: BigRational = deltas.iter().sum();
    if total.is_zero() {
        return Err(Error::AllZeroLoi);
    }
    Ok(deltas.iter().map(|d| d / &total).collect())
}

/// Structural class plus exact per-source LoI at one value of `c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexityProfile {
    pub k: usize,
    pub q: usize,
    pub m: usize,
    pub depth: u32,
    #[serde(with = "rational::serde_str")]
    pub c: BigRational,
    #[serde(with = "rational::serde_str_vec")]
    pub delta: Vec<BigRational>,
    #[serde(with = "rational::serde_str_vec")]
    pub beta: Vec<BigRational>,
    #[serde(with = "rational::serde_str")]
    pub delta_max: BigRational,
    #[serde(with = "rational::serde_str")]
    pub beta_max: BigRational,
    pub histograms: Vec<PathHistogram>,
}

impl ComplexityProfile {
    /// Sources attaining `δ_max`, 1-based.
    pub fn argmax_delta(&self) -> Vec<usize> {
        (0..self.delta.len())
            .filter(|&i| self.delta[i] == self.delta_max)
            .map(|i| i + 1)
            .collect()
    }

    /// Total number of source-to-sink paths over all sources.
    pub fn total_paths(&self) -> BigUint {
        self.histograms.iter().map(PathHistogram::total).sum()
    }
}

pub fn complexity_profile(dag: &CDag, c: &BigRational) -> Result<ComplexityProfile> {
    check_c(c)?;
    let stats = dag.structural_stats()?;
    let histograms = path_histograms(dag);
    let delta: Vec<BigRational> = histograms.iter().map(|h| h.evaluate(c)).collect();
    let beta = normalise(&delta)?;
    let delta_max = delta
        .iter()
        .max()
        .cloned()
        .unwrap_or_else(BigRational::zero);
    let beta_max = beta.iter().max().cloned().unwrap_or_else(BigRational::zero);
    Ok(ComplexityProfile {
        k: stats.k,
        q: stats.q,
        m: stats.m,
        depth: stats.depth,
        c: c.clone(),
        delta,
        beta,
        delta_max,
        beta_max,
        histograms,
    })
}

/// `β_i` as a reduced ratio of polynomials in `c`: common powers of `c` and
/// common integer factors are cancelled, e.g. `(c + 2)/(27c + 39)`.
pub fn symbolic_beta(hists: &[PathHistogram], i: usize) -> String {
    let mut den: BTreeMap<u32, BigUint> = BTreeMap::new();
    for h in hists {
        for (l, n) in h.counts() {
            *den.entry(*l).or_default() += n;
        }
    }
    let mut num = hists[i].counts().clone();
    if num.is_empty() {
        return "0".into();
    }
    let shift = num.keys().chain(den.keys()).min().copied().unwrap_or(0);
    let g = num
        .values()
        .chain(den.values())
        .fold(BigUint::zero(), |acc, n| acc.gcd(n));
    let reduce = |m: &mut BTreeMap<u32, BigUint>| {
        *m = m.iter().map(|(l, n)| (l - shift, n / &g)).collect();
    };
    reduce(&mut num);
    reduce(&mut den);
    let wrap = |m: &BTreeMap<u32, BigUint>| {
        let s = polynomial_string(m);
        if m.len() > 1 {
            format!("({s})")
        } else {
            s
        }
    };
    if den.len() == 1 && den.get(&0).is_some_and(|n| n.is_one()) {
        return polynomial_string(&num);
    }
    format!("{}/{}", wrap(&num), wrap(&den))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::{build_flat, build_uni_rnn, figures};
    use crate::rational::int;

    #[test]
    fn evaluates_histograms() {
        let h = PathHistogram::from_counts([(3, 9), (4, 7)]);
        assert_eq!(absolute_loi(&h, &int(2)).unwrap(), int(184));
        assert_eq!(
            absolute_loi(&PathHistogram::new(), &int(2)).unwrap(),
            int(0)
        );
        assert!(matches!(
            absolute_loi(&h, &int(0)),
            Err(Error::NonPositiveC(_))
        ));
        assert_eq!(h.polynomial(), "7c^4 + 9c^3");
        assert_eq!(PathHistogram::from_counts([(1, 1)]).polynomial(), "c");
    }

    #[test]
    fn flat_histograms() {
        let hs = path_histograms(&build_flat(3).unwrap());
        assert!(hs
            .iter()
            .all(|h| *h == PathHistogram::from_counts([(1, 1)])));
    }

    #[test]
    fn uni_rnn_histograms_match_oracle() {
        let d = build_uni_rnn(4).unwrap();
        let hs = path_histograms(&d);
        let expect: Vec<PathHistogram> = [3, 3, 2, 1]
            .iter()
            .map(|&l| PathHistogram::from_counts([(l, 1)]))
            .collect();
        assert_eq!(hs, expect);
        assert_eq!(brute_force_histograms(&d, 100).unwrap(), expect);
    }

    #[test]
    fn budget_is_enforced() {
        let d = figures::example2();
        assert!(matches!(
            brute_force_histograms(&d, 3),
            Err(Error::PathBudget { budget: 3 })
        ));
    }

    #[test]
    fn symbolic_relative_loi() {
        let hs = path_histograms(&figures::example1());
        assert_eq!(symbolic_beta(&hs, 0), "1/(2c + 3)");
        assert_eq!(symbolic_beta(&hs, 2), "c/(2c + 3)");
        let hs = path_histograms(&figures::example2());
        // Enumerated by hand as well: source 5 has ten length-3 paths.
        assert_eq!(hs[4].polynomial(), "7c^4 + 10c^3");
        assert_eq!(symbolic_beta(&hs, 0), "(c + 2)/(27c + 45)");
    }

    #[test]
    fn forward_counts() {
        let d = figures::example2();
        let from1 = paths_from(&d, NodeRef::source(1));
        assert_eq!(from1[&NodeRef::new(4, 1)], BigUint::from(1u32));
        assert_eq!(from1[&NodeRef::new(3, 1)], BigUint::from(2u32));
    }
}
