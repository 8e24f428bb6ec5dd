use thiserror::Error;

use crate::cdag::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Structural problem detected while assembling a graph (dangling edge,
    /// duplicate node, zero tokens).
    #[error("malformed cDAG: {0}")]
    Malformed(String),

    #[error("cDAG violates {} invariant(s): {}", .0.len(), join_violations(.0))]
    Invalid(Vec<Violation>),

    #[error("schema error: {0}")]
    Schema(#[from] serde_json::Error),

    #[error("invalid architecture: {0}")]
    Arch(String),

    #[error("path budget of {budget} exceeded")]
    PathBudget { budget: u64 },

    #[error("c must be a positive rational, got {0}")]
    NonPositiveC(String),

    #[error("no source reaches a sink; relative LoI is undefined")]
    AllZeroLoi,

    #[error("unsupported family for closed form: {0}")]
    Unsupported(String),

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("separability: {0}")]
    Parts(String),

    #[error("parse error: {0}")]
    Parse(String),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
