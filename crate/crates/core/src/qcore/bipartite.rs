use num_complex::Complex64;

use super::{hermitian_eigen, CMatrix};
use crate::error::{Error, Result};

/// Hermiticity and unit-trace slack for a valid state.
pub const TRACE_TOL: f64 = 1e-12;
/// Negative-eigenvalue slack for positive semidefiniteness.
pub const PSD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Density matrix on `C^dim_a ⊗ C^dim_b`, basis index `a * dim_b + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteState {
    dim_a: usize,
    dim_b: usize,
    rho: CMatrix,
}

impl BipartiteState {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(dim_a: usize, dim_b: usize, rho: CMatrix) -> Result<Self> {
        let s = Self::new_unchecked(dim_a, dim_b, rho)?;
        s.validate()?;
        Ok(s)
    }

    /// Checks shapes only.
    pub fn new_unchecked(dim_a: usize, dim_b: usize, rho: CMatrix) -> Result<Self> {
        if dim_a == 0 || dim_b == 0 {
            return Err(Error::DimensionMismatch(
                "local dimensions must be positive".into(),
            ));
        }
        if rho.rows() != dim_a * dim_b || !rho.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix for local dimensions {dim_a}x{dim_b}",
                rho.rows(),
                rho.cols()
            )));
        }
        Ok(BipartiteState { dim_a, dim_b, rho })
    }

    /// Product state `rho_a ⊗ rho_b`.
    pub fn product(rho_a: &CMatrix, rho_b: &CMatrix) -> Result<Self> {
        let rho = rho_a.tensor(rho_b)?;
        Self::new(rho_a.rows(), rho_b.rows(), rho)
    }

    pub fn validate(&self) -> Result<()> {
        let herm = self.rho.hermiticity_error();
        if herm > TRACE_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (deviation {herm:e})"
            )));
        }
        let tr = self.rho.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min = hermitian_eigen(&self.rho)?.min_eigenvalue();
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.dim_a, self.dim_b)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn into_matrix(self) -> CMatrix {
        self.rho
    }

    /// `Tr(O ρ)`.
    pub fn expectation(&self, op: &CMatrix) -> Complex64 {
        op.trace_product(&self.rho)
    }

    /// Reduced state of the kept subsystem.
    pub fn partial_trace(&self, keep: Subsystem) -> CMatrix {
        let (da, db) = (self.dim_a, self.dim_b);
        match keep {
            Subsystem::A => {
                let mut out = CMatrix::zeros(da, da);
                for i in 0..da {
                    for j in 0..da {
                        out[(i, j)] = (0..db).map(|b| self.rho[(i * db + b, j * db + b)]).sum();
                    }
                }
                out
            }
            Subsystem::B => {
                let mut out = CMatrix::zeros(db, db);
                for i in 0..db {
                    for j in 0..db {
                        out[(i, j)] = (0..da).map(|a| self.rho[(a * db + i, a * db + j)]).sum();
                    }
                }
                out
            }
        }
    }

    /// Transpose on subsystem B: `<a b|ρ^{T_B}|a' b'> = <a b'|ρ|a' b>`.
    pub fn partial_transpose(&self) -> CMatrix {
        let (da, db) = (self.dim_a, self.dim_b);
        let mut out = CMatrix::zeros(da * db, da * db);
        for a in 0..da {
            for b in 0..db {
                for a2 in 0..da {
                    for b2 in 0..db {
                        out[(a * db + b, a2 * db + b2)] = self.rho[(a * db + b2, a2 * db + b)];
                    }
                }
            }
        }
        out
    }

    /// Convex combination `t·self + (1−t)·other`.
    pub fn mix(&self, other: &BipartiteState, t: f64) -> Result<BipartiteState> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch(
                "mixing states of different dimensions".into(),
            ));
        }
        let rho = &self.rho.scale(t) + &other.rho.scale(1.0 - t);
        Ok(BipartiteState { rho, ..*self })
    }
}
