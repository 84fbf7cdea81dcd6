//! Dense complex linear algebra for small bipartite Hilbert spaces.

mod bipartite;
mod eigen;
mod matrix;

pub use bipartite::{BipartiteState, Subsystem, PSD_TOL, TRACE_TOL};
pub use eigen::{hermitian_eigen, SpectralDecomposition, HERMITIAN_TOL};
pub use matrix::{CMatrix, MAX_DIM};

use crate::error::Result;

/// Smallest eigenvalue of the partial transpose. Negative values certify
/// entanglement; for 2x2 and 2x3 systems a non-negative value implies
/// separability.
pub fn min_eig_partial_transpose(s: &BipartiteState) -> Result<f64> {
    let pt = s.partial_transpose();
    Ok(hermitian_eigen(&pt)?.min_eigenvalue())
}

/// Trace distance `½‖A − B‖₁` between Hermitian matrices.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    let diff = a - b;
    let dec = hermitian_eigen(&diff)?;
    Ok(0.5 * dec.eigenvalues.iter().map(|x| x.abs()).sum::<f64>())
}
