//! Born-rule statistics, CHSH values and the Horodecki criterion.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::lhv::Povm;
use crate::qcore::{hermitian_eigen, BipartiteState, CMatrix};

const UNIT_TOL: f64 = 1e-12;

/// Real unit 3-vector used as a qubit measurement direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector([f64; 3]);

impl BlochVector {
    pub const X: BlochVector = BlochVector([1.0, 0.0, 0.0]);
    pub const Y: BlochVector = BlochVector([0.0, 1.0, 0.0]);
    pub const Z: BlochVector = BlochVector([0.0, 0.0, 1.0]);

    /// Checks unit norm within `1e-12`.
    pub fn new(v: [f64; 3]) -> Result<Self> {
        let n = norm(v);
        if (n - 1.0).abs() > UNIT_TOL {
            return Err(Error::NonUnitVector(n));
        }
        Ok(BlochVector(v))
    }

    /// Rescales a non-zero vector to unit length.
    pub fn normalized(v: [f64; 3]) -> Result<Self> {
        let n = norm(v);
        if n < 1e-300 || !n.is_finite() {
            return Err(Error::NonUnitVector(n));
        }
        Ok(BlochVector([v[0] / n, v[1] / n, v[2] / n]))
    }

    pub fn components(self) -> [f64; 3] {
        self.0
    }

    pub fn dot(self, other: BlochVector) -> f64 {
        dot(self.0, other.0)
    }

    pub fn observable(self) -> CMatrix {
        CMatrix::bloch_observable(self.0)
    }
}

impl std::ops::Neg for BlochVector {
    type Output = BlochVector;

    fn neg(self) -> BlochVector {
        BlochVector(self.0.map(|c| -c))
    }
}

pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(v: [f64; 3]) -> f64 {
    dot(v, v).sqrt()
}

/// Alice's and Bob's two CHSH directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshSettings {
    pub a1: BlochVector,
    pub a2: BlochVector,
    pub b1: BlochVector,
    pub b2: BlochVector,
}

impl ChshSettings {
    /// `a = ẑ, x̂`, `b = −(ẑ ± x̂)/√2`; reaches `S = 2√2` on the singlet.
    pub fn canonical() -> Self {
        let h = FRAC_1_SQRT_2;
        ChshSettings {
            a1: BlochVector::Z,
            a2: BlochVector::X,
            b1: BlochVector([-h, 0.0, -h]),
            b2: BlochVector([h, 0.0, -h]),
        }
    }

    /// Setting pairs in CHSH order `(1,1), (1,2), (2,1), (2,2)`.
    pub fn pairs(&self) -> [(BlochVector, BlochVector); 4] {
        [
            (self.a1, self.b1),
            (self.a1, self.b2),
            (self.a2, self.b1),
            (self.a2, self.b2),
        ]
    }
}

/// CHSH signs matching [`ChshSettings::pairs`].
pub const CHSH_SIGNS: [f64; 4] = [1.0, 1.0, 1.0, -1.0];

/// `p(a, b)` for one pair of measurements, row-major in Alice's outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    pub outcomes_a: usize,
    pub outcomes_b: usize,
    pub probs: Vec<f64>,
}

impl JointDistribution {
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.probs[a * self.outcomes_b + b]
    }

    pub fn marginal_a(&self) -> Vec<f64> {
        (0..self.outcomes_a)
            .map(|a| (0..self.outcomes_b).map(|b| self.get(a, b)).sum())
            .collect()
    }

    pub fn marginal_b(&self) -> Vec<f64> {
        (0..self.outcomes_b)
            .map(|b| (0..self.outcomes_a).map(|a| self.get(a, b)).sum())
            .collect()
    }

    /// `Σ ab p(a,b)` with outcome 0 read as `+1` and outcome 1 as `−1`.
    pub fn correlator(&self) -> Result<f64> {
        if self.outcomes_a != 2 || self.outcomes_b != 2 {
            return Err(Error::InvalidParameter(
                "correlator needs two outcomes per party".into(),
            ));
        }
        Ok(self.get(0, 0) + self.get(1, 1) - self.get(0, 1) - self.get(1, 0))
    }
}

/// Born rule `p(a, b) = Tr(M_a ⊗ M_b ρ)`.
pub fn born_joint(s: &BipartiteState, povm_a: &Povm, povm_b: &Povm) -> Result<JointDistribution> {
    if povm_a.dim() != s.dim_a() || povm_b.dim() != s.dim_b() {
        return Err(Error::DimensionMismatch(format!(
            "POVMs on {}x{} for a {}x{} state",
            povm_a.dim(),
            povm_b.dim(),
            s.dim_a(),
            s.dim_b()
        )));
    }
    let mut probs = Vec::with_capacity(povm_a.len() * povm_b.len());
    for ma in povm_a.elements() {
        for mb in povm_b.elements() {
            probs.push(s.expectation(&ma.kron(mb)).re);
        }
    }
    Ok(JointDistribution {
        outcomes_a: povm_a.len(),
        outcomes_b: povm_b.len(),
        probs,
    })
}

/// `{(𝟙 + x·σ)/2, (𝟙 − x·σ)/2}`.
pub fn projectors_from_bloch(x: [f64; 3]) -> Result<Povm> {
    let x = BlochVector::new(x)?;
    let id = CMatrix::identity(2);
    let o = x.observable();
    Povm::new(vec![(&id + &o).scale(0.5), (&id - &o).scale(0.5)])
}

fn require_two_qubits(s: &BipartiteState) -> Result<()> {
    if s.dims() != (2, 2) {
        return Err(Error::DimensionMismatch(format!(
            "CHSH machinery needs a 2x2 state, got {}x{}; filter or project onto the qubit block first",
            s.dim_a(),
            s.dim_b()
        )));
    }
    Ok(())
}

/// `E(x, y) = Σ ab p(ab|xy)` from projective Born statistics.
pub fn correlator(s: &BipartiteState, x: BlochVector, y: BlochVector) -> Result<f64> {
    require_two_qubits(s)?;
    let pa = projectors_from_bloch(x.0)?;
    let pb = projectors_from_bloch(y.0)?;
    born_joint(s, &pa, &pb)?.correlator()
}

/// `S = E(a1,b1) + E(a1,b2) + E(a2,b1) − E(a2,b2)`.
pub fn chsh_value(s: &BipartiteState, c: &ChshSettings) -> Result<f64> {
    let mut total = 0.0;
    for ((x, y), sign) in c.pairs().into_iter().zip(CHSH_SIGNS) {
        total += sign * correlator(s, x, y)?;
    }
    Ok(total)
}

/// `T_ij = Tr(ρ σ_i ⊗ σ_j)`.
pub fn correlation_matrix(s: &BipartiteState) -> Result<[[f64; 3]; 3]> {
    require_two_qubits(s)?;
    let paulis = CMatrix::paulis();
    let mut t = [[0.0; 3]; 3];
    for (i, si) in paulis.iter().enumerate() {
        for (j, sj) in paulis.iter().enumerate() {
            t[i][j] = s.expectation(&si.kron(sj)).re;
        }
    }
    Ok(t)
}

/// Eigen-pairs of `TᵀT`, descending.
fn principal_directions(t: &[[f64; 3]; 3]) -> Result<([f64; 3], [[f64; 3]; 3])> {
    let mut m = [0.0; 9];
    for i in 0..3 {
        for j in 0..3 {
            m[3 * i + j] = (0..3).map(|k| t[k][i] * t[k][j]).sum();
        }
    }
    let dec = hermitian_eigen(&CMatrix::from_real(3, 3, &m))?;
    let mut vals = [0.0; 3];
    let mut vecs = [[0.0; 3]; 3];
    for k in 0..3 {
        vals[k] = dec.eigenvalues[k].max(0.0);
        let v = dec.eigenvector(k);
        // real symmetric input keeps the Jacobi rotations real
        vecs[k] = [v[0].re, v[1].re, v[2].re];
    }
    Ok((vals, vecs))
}

/// Maximal CHSH value over projective settings, `2√(t₁ + t₂)` with `t₁ ≥ t₂`
/// the two largest eigenvalues of `TᵀT`.
pub fn horodecki_s(s: &BipartiteState) -> Result<f64> {
    let t = correlation_matrix(s)?;
    let (vals, _) = principal_directions(&t)?;
    Ok(2.0 * (vals[0] + vals[1]).sqrt())
}

fn apply(t: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [dot(t[0], v), dot(t[1], v), dot(t[2], v)]
}

fn orthogonal_unit(v: [f64; 3]) -> [f64; 3] {
    // cross with the axis least aligned with v
    let axis = if v[0].abs() <= v[1].abs() && v[0].abs() <= v[2].abs() {
        [1.0, 0.0, 0.0]
    } else if v[1].abs() <= v[2].abs() {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let c = [
        v[1] * axis[2] - v[2] * axis[1],
        v[2] * axis[0] - v[0] * axis[2],
        v[0] * axis[1] - v[1] * axis[0],
    ];
    let n = norm(c);
    [c[0] / n, c[1] / n, c[2] / n]
}

/// Settings attaining [`horodecki_s`]. Bob measures `cos θ u₁ ± sin θ u₂`
/// with `u₁, u₂` the principal eigenvectors of `TᵀT` and `tan θ = √(t₂/t₁)`;
/// Alice measures along `T u₁/√t₁` and `T u₂/√t₂`. Returns the canonical
/// settings when `T` vanishes.
pub fn optimal_chsh_settings(s: &BipartiteState) -> Result<ChshSettings> {
    let t = correlation_matrix(s)?;
    let (vals, vecs) = principal_directions(&t)?;
    let (t1, t2) = (vals[0], vals[1]);
    if t1 < 1e-12 {
        return Ok(ChshSettings::canonical());
    }
    let (u1, u2) = (vecs[0], vecs[1]);
    let w1 = apply(&t, u1).map(|x| x / t1.sqrt());
    let w2 = if t2 > 1e-24 {
        apply(&t, u2).map(|x| x / t2.sqrt())
    } else {
        orthogonal_unit(w1)
    };
    let r = (t1 + t2).sqrt();
    let (c, sn) = (t1.sqrt() / r, t2.sqrt() / r);
    let b1 = [0, 1, 2].map(|i| c * u1[i] + sn * u2[i]);
    let b2 = [0, 1, 2].map(|i| c * u1[i] - sn * u2[i]);
    Ok(ChshSettings {
        a1: BlochVector::normalized(w1)?,
        a2: BlochVector::normalized(w2)?,
        b1: BlochVector::normalized(b1)?,
        b2: BlochVector::normalized(b2)?,
    })
}
