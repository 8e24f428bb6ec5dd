//! Architecture compilers: one builder per family, plus [`ArchSpec`] which
//! names a family together with its parameters.
//!
//! Every builder returns a validated [`CDag`]. Families whose graph depends on
//! the input (selective pooling, sparse attention patterns, parse trees) take
//! the input-specific information explicitly.

mod convpool;
pub mod figures;
mod recurrent;
mod transformer;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cdag::CDag;
use crate::error::{Error, Result};

pub use convpool::{build_conv_pool, ConvPoolBuild, ConvPoolSpec, PoolValuation, Pooling};
pub use recurrent::{build_bi_rnn, build_flat, build_uni_rnn};
pub use transformer::{
    build_decoder_transformer, build_sparse_transformer, build_transformer, ExplicitPattern,
    SparsitySource,
};
pub use tree::{build_balanced_tree, build_parse_tree, ParseTree};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Flat,
    UniRnn,
    BiRnn,
    BalancedTree,
    ParseTree,
    ConvPool,
    Transformer,
    SparseTransformer,
    DecoderTransformer,
}

impl Family {
    pub const ALL: [Family; 9] = [
        Family::Flat,
        Family::UniRnn,
        Family::BiRnn,
        Family::BalancedTree,
        Family::ParseTree,
        Family::ConvPool,
        Family::Transformer,
        Family::SparseTransformer,
        Family::DecoderTransformer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Flat => "flat",
            Family::UniRnn => "unirnn",
            Family::BiRnn => "birnn",
            Family::BalancedTree => "balancedtree",
            Family::ParseTree => "parsetree",
            Family::ConvPool => "convpool",
            Family::Transformer => "transformer",
            Family::SparseTransformer => "sparse",
            Family::DecoderTransformer => "decoder",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Ok(match key.as_str() {
            "flat" => Family::Flat,
            "unirnn" | "rnn" => Family::UniRnn,
            "birnn" => Family::BiRnn,
            "balancedtree" | "tree" => Family::BalancedTree,
            "parsetree" => Family::ParseTree,
            "convpool" | "conv" => Family::ConvPool,
            "transformer" => Family::Transformer,
            "sparse" | "sparsetransformer" => Family::SparseTransformer,
            "decoder" | "decodertransformer" => Family::DecoderTransformer,
            _ => return Err(Error::Parse(format!("unknown architecture family {s:?}"))),
        })
    }
}

/// An architecture family with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ArchSpec {
    Flat {
        len: usize,
    },
    UniRnn {
        len: usize,
    },
    BiRnn {
        len: usize,
    },
    BalancedTree {
        len: usize,
    },
    ParseTree {
        tree: ParseTree,
    },
    ConvPool(ConvPoolSpec),
    Transformer {
        len: usize,
        blocks: usize,
    },
    SparseTransformer {
        len: usize,
        blocks: usize,
        k: usize,
        sparsity: SparsitySource,
    },
    DecoderTransformer {
        len: usize,
        blocks: usize,
    },
}

impl ArchSpec {
    pub fn family(&self) -> Family {
        match self {
            ArchSpec::Flat { .. } => Family::Flat,
            ArchSpec::UniRnn { .. } => Family::UniRnn,
            ArchSpec::BiRnn { .. } => Family::BiRnn,
            ArchSpec::BalancedTree { .. } => Family::BalancedTree,
            ArchSpec::ParseTree { .. } => Family::ParseTree,
            ArchSpec::ConvPool(_) => Family::ConvPool,
            ArchSpec::Transformer { .. } => Family::Transformer,
            ArchSpec::SparseTransformer { .. } => Family::SparseTransformer,
            ArchSpec::DecoderTransformer { .. } => Family::DecoderTransformer,
        }
    }

    /// Sequence length `L`.
    pub fn len(&self) -> usize {
        match self {
            ArchSpec::Flat { len }
            | ArchSpec::UniRnn { len }
            | ArchSpec::BiRnn { len }
            | ArchSpec::BalancedTree { len }
            | ArchSpec::Transformer { len, .. }
            | ArchSpec::SparseTransformer { len, .. }
            | ArchSpec::DecoderTransformer { len, .. } => *len,
            ArchSpec::ParseTree { tree } => tree.leaves().len(),
            ArchSpec::ConvPool(s) => s.len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of transformer blocks `M`, where applicable.
    pub fn blocks(&self) -> Option<usize> {
        match self {
            ArchSpec::Transformer { blocks, .. }
            | ArchSpec::SparseTransformer { blocks, .. }
            | ArchSpec::DecoderTransformer { blocks, .. } => Some(*blocks),
            _ => None,
        }
    }

    /// Whether the cDAG is fixed for every input of a given length.
    pub fn is_input_agnostic(&self) -> bool {
        match self {
            ArchSpec::ParseTree { .. } => false,
            ArchSpec::ConvPool(s) => !s.pooling.is_selective(),
            ArchSpec::SparseTransformer { sparsity, .. } => {
                matches!(sparsity, SparsitySource::Adversarial)
            }
            _ => true,
        }
    }

    /// Same family and parameters at a different length. Parse trees and
    /// explicit sparsity patterns are tied to one length.
    pub fn with_len(&self, len: usize) -> Result<ArchSpec> {
        let mut out = self.clone();
        match &mut out {
            ArchSpec::Flat { len: l }
            | ArchSpec::UniRnn { len: l }
            | ArchSpec::BiRnn { len: l }
            | ArchSpec::BalancedTree { len: l }
            | ArchSpec::Transformer { len: l, .. }
            | ArchSpec::DecoderTransformer { len: l, .. } => *l = len,
            ArchSpec::SparseTransformer {
                len: l, sparsity, ..
            } => {
                if matches!(sparsity, SparsitySource::Explicit(_)) {
                    return Err(Error::Arch("an explicit sparsity pattern fixes L".into()));
                }
                *l = len;
            }
            ArchSpec::ConvPool(s) => s.len = len,
            ArchSpec::ParseTree { .. } => {
                return Err(Error::Arch("a parse tree fixes L".into()));
            }
        }
        Ok(out)
    }

    /// Builds the cDAG. Selective pooling needs a valuation; use
    /// [`ArchSpec::build_with`] for it.
    pub fn build(&self) -> Result<CDag> {
        self.build_with(None)
    }

    pub fn build_with(&self, valuation: Option<&PoolValuation>) -> Result<CDag> {
        match self {
            ArchSpec::Flat { len } => build_flat(*len),
            ArchSpec::UniRnn { len } => build_uni_rnn(*len),
            ArchSpec::BiRnn { len } => build_bi_rnn(*len),
            ArchSpec::BalancedTree { len } => build_balanced_tree(*len),
            ArchSpec::ParseTree { tree } => build_parse_tree(tree),
            ArchSpec::ConvPool(s) => build_conv_pool(s, valuation).map(|b| b.cdag),
            ArchSpec::Transformer { len, blocks } => build_transformer(*len, *blocks),
            ArchSpec::SparseTransformer {
                len,
                blocks,
                k,
                sparsity,
            } => build_sparse_transformer(*len, *blocks, *k, sparsity),
            ArchSpec::DecoderTransformer { len, blocks } => {
                build_decoder_transformer(*len, *blocks)
            }
        }
    }
}

impl fmt::Display for ArchSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArchSpec::Flat { len }
            | ArchSpec::UniRnn { len }
            | ArchSpec::BiRnn { len }
            | ArchSpec::BalancedTree { len } => write!(f, "{}(L={len})", self.family()),
            ArchSpec::ParseTree { tree } => write!(f, "parsetree({tree})"),
            ArchSpec::ConvPool(s) => write!(
                f,
                "convpool(L={}, w={}, p={}, m={}, {:?}{})",
                s.len,
                s.conv,
                s.pool,
                s.m_target,
                s.pooling,
                if s.padding { ", padded" } else { "" }
            ),
            ArchSpec::Transformer { len, blocks }
            | ArchSpec::DecoderTransformer { len, blocks } => {
                write!(f, "{}(L={len}, M={blocks})", self.family())
            }
            ArchSpec::SparseTransformer {
                len,
                blocks,
                k,
                sparsity,
            } => {
                write!(f, "sparse(L={len}, M={blocks}, K={k}, {sparsity})")
            }
        }
    }
}

pub(crate) fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Arch(msg()))
    }
}
