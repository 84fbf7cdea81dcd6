//! State families and the maps that turn a state that is local for
//! dichotomic projective measurements into one that is local for POVMs.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qcore::{BipartiteState, CMatrix, Subsystem};

/// Named state families. All are parametrized by a mixing weight `q ∈ [0, 1]`
/// (ignored by the singlet).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateFamily {
    Singlet,
    StateQ,
    RhoG,
    Erasure,
    RhoGM,
}

impl StateFamily {
    pub const ALL: [StateFamily; 5] = [
        StateFamily::Singlet,
        StateFamily::StateQ,
        StateFamily::RhoG,
        StateFamily::Erasure,
        StateFamily::RhoGM,
    ];

    pub fn build(self, q: f64) -> Result<BipartiteState> {
        match self {
            StateFamily::Singlet => Ok(singlet(2, 2)),
            StateFamily::StateQ => state_q(q),
            StateFamily::RhoG => state_rho_g(q),
            StateFamily::Erasure => erasure_state_checked(q),
            StateFamily::RhoGM => state_rho_gm(q),
        }
    }

    pub fn dims(self) -> (usize, usize) {
        match self {
            StateFamily::Singlet | StateFamily::StateQ | StateFamily::RhoG => (2, 2),
            StateFamily::Erasure | StateFamily::RhoGM => (3, 3),
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            StateFamily::Singlet => "singlet",
            StateFamily::StateQ => "state_q",
            StateFamily::RhoG => "rho_G",
            StateFamily::Erasure => "erasure",
            StateFamily::RhoGM => "rho_GM",
        }
    }
}

impl fmt::Display for StateFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

impl FromStr for StateFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StateFamily::ALL
            .into_iter()
            .find(|f| f.keyword().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown state family '{s}'")))
    }
}

fn check_q(q: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidParameter(format!("q = {q} outside [0, 1]")));
    }
    Ok(())
}

fn ket(d: usize, k: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); d];
    v[k] = Complex64::new(1.0, 0.0);
    v
}

/// Qubit identity `|0><0| + |1><1|` embedded in dimension `d`.
fn qubit_identity(d: usize) -> CMatrix {
    let mut diag = vec![0.0; d];
    diag[0] = 1.0;
    diag[1] = 1.0;
    CMatrix::from_diag(&diag)
}

fn singlet_matrix(dim_a: usize, dim_b: usize) -> CMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = vec![Complex64::new(0.0, 0.0); dim_a * dim_b];
    v[dim_b] = Complex64::new(-h, 0.0); // |1,0>
    v[1] = Complex64::new(h, 0.0); // |0,1>
    CMatrix::projector(&v)
}

/// Singlet `(|01> − |10>)/√2` embedded in the qubit block of `C^dim_a ⊗ C^dim_b`.
pub fn singlet(dim_a: usize, dim_b: usize) -> BipartiteState {
    assert!(
        dim_a >= 2 && dim_b >= 2,
        "singlet needs local dimension >= 2"
    );
    BipartiteState::new_unchecked(dim_a, dim_b, singlet_matrix(dim_a, dim_b))
        .expect("consistent dimensions")
}

/// `q Ψ₋ + (1−q) |0><0| ⊗ 𝟙/2` on two qubits.
pub fn state_q(q: f64) -> Result<BipartiteState> {
    check_q(q)?;
    let noise = CMatrix::basis_projector(2, 0).kron(&CMatrix::identity(2).scale(0.5));
    let rho = &singlet_matrix(2, 2).scale(q) + &noise.scale(1.0 - q);
    BipartiteState::new_unchecked(2, 2, rho)
}

/// Erasure state `q Ψ₋ + (1−q) |2><2| ⊗ 𝟙₂/2` on `C^3 ⊗ C^3`; Bob's `|2>`
/// level is never populated.
///
/// Panics if `q ∉ [0, 1]`; see [`erasure_state_checked`].
pub fn erasure_state(q: f64) -> BipartiteState {
    erasure_state_checked(q).expect("q in [0, 1]")
}

pub fn erasure_state_checked(q: f64) -> Result<BipartiteState> {
    check_q(q)?;
    let noise = CMatrix::basis_projector(3, 2).kron(&qubit_identity(3).scale(0.5));
    let rho = &singlet_matrix(3, 3).scale(q) + &noise.scale(1.0 - q);
    BipartiteState::new_unchecked(3, 3, rho)
}

fn check_local_state(sigma: &CMatrix, d: usize, who: &str) -> Result<()> {
    if sigma.rows() != d || !sigma.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "{who} is {}x{}, expected {d}x{d}",
            sigma.rows(),
            sigma.cols()
        )));
    }
    BipartiteState::new(d, 1, sigma.clone())
        .map(|_| ())
        .map_err(|e| Error::InvalidState(format!("{who}: {e}")))
}

fn equal_local_dim(rho0: &BipartiteState) -> Result<usize> {
    let (da, db) = rho0.dims();
    if da != db {
        return Err(Error::DimensionMismatch(format!(
            "map needs equal local dimensions, got {da}x{db}"
        )));
    }
    Ok(da)
}

/// `(1/d²)[ρ₀ + (d−1)(ρ_A ⊗ σ_B + σ_A ⊗ ρ_B) + (d−1)² σ_A ⊗ σ_B]`, the state
/// whose POVM statistics are simulated by running a dichotomic LHV model for
/// `ρ₀` inside the rank-one POVM protocol.
pub fn protocol2_map(
    rho0: &BipartiteState,
    sigma_a: &CMatrix,
    sigma_b: &CMatrix,
) -> Result<BipartiteState> {
    let d = equal_local_dim(rho0)?;
    check_local_state(sigma_a, d, "sigma_A")?;
    check_local_state(sigma_b, d, "sigma_B")?;
    let rho_a = rho0.partial_trace(Subsystem::A);
    let rho_b = rho0.partial_trace(Subsystem::B);
    let k = (d - 1) as f64;
    let cross = &rho_a.kron(sigma_b) + &sigma_a.kron(&rho_b);
    let sum = &(rho0.matrix() + &cross.scale(k)) + &sigma_a.kron(sigma_b).scale(k * k);
    BipartiteState::new_unchecked(d, d, sum.scale(1.0 / (d * d) as f64))
}

/// Alice-only variant `(1/d)[ρ₀ + (d−1) σ_A ⊗ ρ_B]`.
pub fn protocol2_map_one_sided(rho0: &BipartiteState, sigma_a: &CMatrix) -> Result<BipartiteState> {
    let d = rho0.dim_a();
    check_local_state(sigma_a, d, "sigma_A")?;
    let rho_b = rho0.partial_trace(Subsystem::B);
    let sum = rho0.matrix() + &sigma_a.kron(&rho_b).scale((d - 1) as f64);
    BipartiteState::new_unchecked(d, rho0.dim_b(), sum.scale(1.0 / d as f64))
}

/// `¼[q Ψ₋ + (2−q)|0><0|⊗𝟙/2 + q 𝟙/2⊗|0><0| + (2−q)|00><00|]`, assembled
/// directly from its closed form.
pub fn state_rho_g(q: f64) -> Result<BipartiteState> {
    check_q(q)?;
    let half_id = CMatrix::identity(2).scale(0.5);
    let p0 = CMatrix::basis_projector(2, 0);
    let p00 = CMatrix::projector(&ket(4, 0));
    let terms = [
        singlet_matrix(2, 2).scale(q),
        p0.kron(&half_id).scale(2.0 - q),
        half_id.kron(&p0).scale(q),
        p00.scale(2.0 - q),
    ];
    let sum = terms.iter().fold(CMatrix::zeros(4, 4), |acc, t| &acc + t);
    BipartiteState::new_unchecked(2, 2, sum.scale(0.25))
}

/// `(1/9)[q Ψ₋ + (3−q)|2><2|⊗𝟙₂/2 + 2q 𝟙₂/2⊗|2><2| + (6−2q)|22><22|]` on
/// `C^3 ⊗ C^3`, assembled directly from its closed form.
pub fn state_rho_gm(q: f64) -> Result<BipartiteState> {
    check_q(q)?;
    let half_id2 = qubit_identity(3).scale(0.5);
    let p2 = CMatrix::basis_projector(3, 2);
    let p22 = CMatrix::projector(&ket(9, 8));
    let terms = [
        singlet_matrix(3, 3).scale(q),
        p2.kron(&half_id2).scale(3.0 - q),
        half_id2.kron(&p2).scale(2.0 * q),
        p22.scale(6.0 - 2.0 * q),
    ];
    let sum = terms.iter().fold(CMatrix::zeros(9, 9), |acc, t| &acc + t);
    BipartiteState::new_unchecked(3, 3, sum.scale(1.0 / 9.0))
}
