//! Hidden nonlocality toolkit.
//!
//! Small dense linear algebra for bipartite density matrices, constructors
//! for the entangled state families studied here, executable local hidden
//! variable (LHV) models, local filtering and the CHSH / Horodecki machinery
//! used to certify nonlocality that only appears after filtering.
//!
//! Subsystem ordering is fixed throughout: the basis index of `|a, b>` is
//! `a * dim_b + b`.

pub mod bell;
pub mod cli;
pub mod error;
pub mod filtering;
pub mod lhv;
pub mod qcore;
pub mod random;
pub mod rng;
pub mod states;

pub use error::{Error, Result};
pub use qcore::{BipartiteState, CMatrix, SpectralDecomposition, Subsystem};
