//! Dense, decoder-only and K-sparse transformer cDAGs.
//!
//! Node `l:j` is token `j` after block `l`. Its first argument is always its
//! own previous value `l-1:j` (the residual stream), followed by the other
//! attended nodes in index order. A single sink at level `M+1` reads every
//! level-`M` node in index order.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::require;
use crate::cdag::{CDag, CDagBuilder, Handle};
use crate::error::Result;

/// Where the attended K-subsets of a sparse transformer come from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SparsitySource {
    Explicit(ExplicitPattern),
    /// Every node attends to `{1..K}`, so token 1 sits in every top-K set.
    Adversarial,
    SeededRandom {
        seed: u64,
    },
}

impl fmt::Display for SparsitySource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SparsitySource::Explicit(_) => f.write_str("explicit"),
            SparsitySource::Adversarial => f.write_str("adversarial"),
            SparsitySource::SeededRandom { seed } => write!(f, "random(seed={seed})"),
        }
    }
}

/// Attended sets given by hand: `levels[l][j]` lists the (1-based) level-`l`
/// nodes that node `l+1:j+1` attends to, besides itself.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitPattern {
    pub levels: Vec<Vec<Vec<u32>>>,
    /// Level-`M` nodes read by the sink; all of them when absent. Nodes
    /// that then lose every path to the sink are pruned.
    #[serde(default)]
    pub sink_parents: Option<Vec<u32>>,
}

fn attention_level(b: &mut CDagBuilder, prev: &[Handle], attended: &[Vec<u32>]) -> Vec<Handle> {
    attended
        .iter()
        .enumerate()
        .map(|(j, set)| {
            let mut others: Vec<u32> = set
                .iter()
                .copied()
                .filter(|&i| i as usize != j + 1)
                .collect();
            others.sort_unstable();
            let parents =
                std::iter::once(prev[j]).chain(others.iter().map(|&i| prev[i as usize - 1]));
            b.node(parents.collect::<Vec<_>>())
        })
        .collect()
}

fn assemble(len: usize, levels: &[Vec<Vec<u32>>], sink_parents: Option<&[u32]>) -> Result<CDag> {
    let mut b = CDagBuilder::new(len);
    let mut prev: Vec<Handle> = (1..=len).map(|i| b.source(i)).collect();
    for attended in levels {
        prev = attention_level(&mut b, &prev, attended);
    }
    let readers: Vec<Handle> = match sink_parents {
        Some(ix) => ix.iter().map(|&i| prev[i as usize - 1]).collect(),
        None => prev,
    };
    let sink = b.node(readers);
    b.sink(sink);
    b.build_pruned()
}

fn check_blocks(len: usize, blocks: usize) -> Result<()> {
    require(len >= 1, || "transformer needs L >= 1".into())?;
    require(blocks >= 1, || "transformer needs M >= 1".into())
}

/// Full attention: every `l:i` feeds every `l+1:j`.
pub fn build_transformer(len: usize, blocks: usize) -> Result<CDag> {
    check_blocks(len, blocks)?;
    let all: Vec<u32> = (1..=len as u32).collect();
    let levels = vec![vec![all; len]; blocks];
    assemble(len, &levels, None)
}

/// Causal attention: `l:i` feeds `l+1:j` only when `j >= i`.
pub fn build_decoder_transformer(len: usize, blocks: usize) -> Result<CDag> {
    check_blocks(len, blocks)?;
    let level: Vec<Vec<u32>> = (1..=len as u32).map(|j| (1..=j).collect()).collect();
    assemble(len, &vec![level; blocks], None)
}

/// Each node keeps its residual parent and attends to a K-subset of the
/// previous level chosen by `source`.
pub fn build_sparse_transformer(
    len: usize,
    blocks: usize,
    k: usize,
    source: &SparsitySource,
) -> Result<CDag> {
    check_blocks(len, blocks)?;
    require((1..=len).contains(&k), || {
        format!("sparsity K={k} must lie in 1..={len}")
    })?;
    match source {
        SparsitySource::Adversarial => {
            let mu: Vec<u32> = (1..=k as u32).collect();
            assemble(len, &vec![vec![mu; len]; blocks], None)
        }
        SparsitySource::SeededRandom { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let levels: Vec<Vec<Vec<u32>>> = (0..blocks)
                .map(|_| {
                    (0..len)
                        .map(|_| {
                            let mut s: Vec<u32> = rand::seq::index::sample(&mut rng, len, k)
                                .into_iter()
                                .map(|i| i as u32 + 1)
                                .collect();
                            s.sort_unstable();
                            s
                        })
                        .collect()
                })
                .collect();
            assemble(len, &levels, None)
        }
        SparsitySource::Explicit(p) => {
            require(p.levels.len() == blocks, || {
                format!("pattern has {} levels, expected M={blocks}", p.levels.len())
            })?;
            for (l, level) in p.levels.iter().enumerate() {
                require(level.len() == len, || {
                    format!(
                        "pattern level {} has {} nodes, expected L={len}",
                        l + 1,
                        level.len()
                    )
                })?;
                for (j, set) in level.iter().enumerate() {
                    let mut s = set.clone();
                    s.sort_unstable();
                    s.dedup();
                    require(s.len() == k && set.len() == k, || {
                        format!(
                            "node {}:{} attends to {set:?}, expected {k} distinct nodes",
                            l + 1,
                            j + 1
                        )
                    })?;
                    require(s.iter().all(|&i| (1..=len as u32).contains(&i)), || {
                        format!("node {}:{} attends outside 1..={len}", l + 1, j + 1)
                    })?;
                }
            }
            if let Some(sp) = &p.sink_parents {
                require(
                    !sp.is_empty() && sp.iter().all(|&i| (1..=len as u32).contains(&i)),
                    || format!("sink parents {sp:?} must be non-empty and within 1..={len}"),
                )?;
            }
            assemble(len, &p.levels, p.sink_parents.as_deref())
        }
    }
}
