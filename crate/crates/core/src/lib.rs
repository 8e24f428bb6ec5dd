//! Computation DAGs (cDAGs) for sequence models.
//!
//! The crate builds the leveled DAGs induced by recurrent, tree, conv+pool and
//! transformer architectures, counts source-to-sink paths exactly, and turns
//! those counts into the absolute and relative locus of influence (LoI) of
//! every input position. A small numerical evaluator executes compositional
//! functions over a cDAG so the LoI sensitivity bound can be checked
//! empirically.
//!
//! Module map:
//!
//! - [`cdag`]: the graph type, validation, JSON/DOT and isomorphism.
//! - [`arch`]: builders for each architecture family.
//! - [`loi`]: path histograms, LoI, complexity profiles and closed forms.
//! - [`eval`]: encoder / span processor / readout and cDAG evaluation.
//! - [`sensitivity`]: perturbation trials against the LoI bound.
//! - [`separability`]: cleanly-separable parts and dataset coverage checks.
//! - [`verify`]: the acceptance checks shared by tests and the CLI.

pub mod arch;
pub mod cdag;
pub mod error;
pub mod eval;
pub mod loi;
pub mod rational;
pub mod sensitivity;
pub mod separability;
pub mod verify;

pub use arch::ArchSpec;
pub use cdag::{CDag, Edge, NodeRef};
pub use error::{Error, Result};
pub use loi::{ComplexityProfile, PathHistogram};

/// Builds the rayon pool used for sweeps and trials.
///
/// `CDAGLAB_THREADS` caps the number of worker threads; unset or `0` lets
/// rayon pick.
pub fn thread_pool() -> rayon::ThreadPool {
    let threads = std::env::var("CDAGLAB_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("failed to build thread pool")
}
