//! Repeated convolution + pooling.
//!
//! Each reduction step slides a stride-1 window of `w` positions over the
//! current level (left-padded when `padding` is set, so the number of
//! windows equals the width), then pools `p` consecutive windows into one
//! node of the next level. Only the condensed graph is materialised: a pooled
//! node's parents are the union of its windows, or, for selective pooling,
//! the single window that won.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::require;
use crate::cdag::{CDag, CDagBuilder, Handle, NodeRef};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    Avg,
    Sum,
    Max,
    Min,
}

impl Pooling {
    /// Max/min pooling keep one window per pool and so deactivate edges.
    pub fn is_selective(self) -> bool {
        matches!(self, Pooling::Max | Pooling::Min)
    }
}

impl fmt::Display for Pooling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pooling::Avg => "avg",
            Pooling::Sum => "sum",
            Pooling::Max => "max",
            Pooling::Min => "min",
        })
    }
}

impl FromStr for Pooling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "avg" | "mean" | "average" => Pooling::Avg,
            "sum" => Pooling::Sum,
            "max" => Pooling::Max,
            "min" => Pooling::Min,
            _ => return Err(Error::Parse(format!("unknown pooling mode {s:?}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvPoolSpec {
    pub len: usize,
    /// Convolution window `w`.
    pub conv: usize,
    /// Pooling window `p`.
    pub pool: usize,
    /// Requested number of sinks `m`.
    pub m_target: usize,
    pub pooling: Pooling,
    #[serde(default)]
    pub padding: bool,
    /// Error instead of clamping when a window exceeds the level width or a
    /// step undershoots `m_target`.
    #[serde(default)]
    pub strict: bool,
}

impl ConvPoolSpec {
    pub fn new(len: usize, conv: usize, pool: usize, m_target: usize, pooling: Pooling) -> Self {
        Self {
            len,
            conv,
            pool,
            m_target,
            pooling,
            padding: false,
            strict: false,
        }
    }

    pub fn padded(mut self, padding: bool) -> Self {
        self.padding = padding;
        self
    }

    pub fn strict(mut self, strict: bool) -> Self {
        self.strict = strict;
        self
    }
}

/// What decides the winning window of each pool under max/min pooling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolValuation {
    /// `choices[level][pool]` = offset of the winning window inside the pool.
    Choices(Vec<Vec<usize>>),
    /// One scalar per token. A window's value is the mean of its inputs
    /// (padding counts as zero); the pool keeps the max/min window, first
    /// one on ties, and passes its value up.
    Scalars(Vec<f64>),
}

#[derive(Clone, Debug)]
pub struct ConvPoolBuild {
    pub cdag: CDag,
    /// Edges of the full (non-selective) condensed graph that the pooling
    /// switched off, in that graph's labels. Empty for avg/sum pooling.
    pub deactivated: Vec<(NodeRef, NodeRef)>,
    /// Node count per level, sources first, before pruning.
    pub widths: Vec<usize>,
}

struct Step {
    /// Windows over the previous level, 0-based.
    windows: Vec<Vec<usize>>,
    /// Consecutive window indices pooled into each next-level node.
    pools: Vec<Vec<usize>>,
}

fn plan(spec: &ConvPoolSpec) -> Result<Vec<Step>> {
    require(spec.len >= 1, || "conv+pool needs L >= 1".into())?;
    require(spec.conv > 1 && spec.pool > 1, || {
        format!(
            "conv+pool needs w, p > 1, got w={}, p={}",
            spec.conv, spec.pool
        )
    })?;
    require(spec.m_target >= 1, || "m_target must be at least 1".into())?;
    require(spec.m_target < spec.len, || {
        format!(
            "m_target={} leaves nothing to reduce at L={}",
            spec.m_target, spec.len
        )
    })?;
    let mut width = spec.len;
    let mut steps = Vec::new();
    while width > spec.m_target {
        let mut w = spec.conv;
        if w > width {
            require(!spec.strict, || {
                format!(
                    "conv window {w} exceeds level width {width} at level {}",
                    steps.len()
                )
            })?;
            w = width;
        }
        let windows: Vec<Vec<usize>> = if spec.padding {
            (0..width)
                .map(|j| ((j + 1).saturating_sub(w)..=j).collect())
                .collect()
        } else {
            (0..=width - w).map(|j| (j..j + w).collect()).collect()
        };
        let mut p = spec.pool;
        if p > windows.len() {
            require(!spec.strict, || {
                format!(
                    "pool window {p} exceeds the {} convolution outputs at level {}",
                    windows.len(),
                    steps.len()
                )
            })?;
            p = windows.len();
        }
        let pools: Vec<Vec<usize>> = (0..windows.len())
            .collect::<Vec<_>>()
            .chunks(p)
            .map(<[usize]>::to_vec)
            .collect();
        let next = pools.len();
        require(!(spec.strict && next < spec.m_target), || {
            format!(
                "reduction from {width} to {next} nodes undershoots m_target={}",
                spec.m_target
            )
        })?;
        steps.push(Step { windows, pools });
        width = next;
    }
    Ok(steps)
}

fn selections(
    spec: &ConvPoolSpec,
    steps: &[Step],
    valuation: Option<&PoolValuation>,
) -> Result<Option<Vec<Vec<usize>>>> {
    if !spec.pooling.is_selective() {
        return Ok(None);
    }
    let Some(valuation) = valuation else {
        return Err(Error::Arch(format!(
            "{} pooling selects edges per input; a pool valuation is required",
            spec.pooling
        )));
    };
    match valuation {
        PoolValuation::Choices(choices) => {
            require(choices.len() == steps.len(), || {
                format!(
                    "expected choices for {} levels, got {}",
                    steps.len(),
                    choices.len()
                )
            })?;
            for (l, (c, s)) in choices.iter().zip(steps).enumerate() {
                require(c.len() == s.pools.len(), || {
                    format!(
                        "level {}: expected {} choices, got {}",
                        l + 1,
                        s.pools.len(),
                        c.len()
                    )
                })?;
                for (pool, &k) in s.pools.iter().zip(c) {
                    require(k < pool.len(), || {
                        format!(
                            "level {}: choice {k} outside a pool of {}",
                            l + 1,
                            pool.len()
                        )
                    })?;
                }
            }
            Ok(Some(choices.clone()))
        }
        PoolValuation::Scalars(values) => {
            require(values.len() == spec.len, || {
                format!("expected {} scalars, got {}", spec.len, values.len())
            })?;
            let mut vals = values.clone();
            let mut out = Vec::with_capacity(steps.len());
            for s in steps {
                let w = s.windows.iter().map(Vec::len).max().unwrap_or(1).max(1) as f64;
                let conv: Vec<f64> = s
                    .windows
                    .iter()
                    .map(|win| win.iter().map(|&i| vals[i]).sum::<f64>() / w)
                    .collect();
                let mut level = Vec::with_capacity(s.pools.len());
                let mut next = Vec::with_capacity(s.pools.len());
                for pool in &s.pools {
                    let mut best = 0;
                    for (k, &j) in pool.iter().enumerate().skip(1) {
                        let better = match spec.pooling {
                            Pooling::Max => conv[j] > conv[pool[best]],
                            _ => conv[j] < conv[pool[best]],
                        };
                        if better {
                            best = k;
                        }
                    }
                    level.push(best);
                    next.push(conv[pool[best]]);
                }
                out.push(level);
                vals = next;
            }
            Ok(Some(out))
        }
    }
}

/// Builds the condensed conv+pool cDAG. Max/min pooling requires a
/// valuation; nodes left without a path to a sink are pruned and the
/// remaining ones renumbered.
pub fn build_conv_pool(
    spec: &ConvPoolSpec,
    valuation: Option<&PoolValuation>,
) -> Result<ConvPoolBuild> {
    let steps = plan(spec)?;
    let chosen = selections(spec, &steps, valuation)?;

    let mut b = CDagBuilder::new(spec.len);
    let mut prev: Vec<Handle> = (1..=spec.len).map(|i| b.source(i)).collect();
    let mut widths = vec![spec.len];
    let mut deactivated = Vec::new();
    for (l, s) in steps.iter().enumerate() {
        let level = l as u32 + 1;
        let mut cur = Vec::with_capacity(s.pools.len());
        for (j, pool) in s.pools.iter().enumerate() {
            let mut union: Vec<usize> = pool.iter().flat_map(|&c| s.windows[c].clone()).collect();
            union.sort_unstable();
            union.dedup();
            let parents = match &chosen {
                None => union,
                Some(ch) => {
                    let keep = &s.windows[pool[ch[l][j]]];
                    for &u in union.iter().filter(|u| !keep.contains(u)) {
                        deactivated.push((
                            NodeRef::new(level - 1, u as u32 + 1),
                            NodeRef::new(level, j as u32 + 1),
                        ));
                    }
                    keep.clone()
                }
            };
            cur.push(b.node_unordered(parents.iter().map(|&i| prev[i])));
        }
        widths.push(cur.len());
        prev = cur;
    }
    b.sinks(prev);
    let (cdag, _) = b.finish(chosen.is_some())?;
    Ok(ConvPoolBuild {
        cdag,
        deactivated,
        widths,
    })
}
