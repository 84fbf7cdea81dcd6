//! Random test objects: directions, states, observables and POVMs.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::lhv::Povm;
use crate::qcore::{hermitian_eigen, BipartiteState, CMatrix};

pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-12 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

fn gaussian_c<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random unit vector in `C^d`.
pub fn random_ket<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..d).map(|_| gaussian_c(rng)).collect();
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|z| z / n).collect();
        }
    }
}

pub fn random_ginibre<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let data = (0..d * d).map(|_| gaussian_c(rng)).collect();
    CMatrix::from_vec(d, d, data).expect("finite gaussian entries")
}

pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = random_ginibre(d, rng);
    (&g + &g.adjoint()).scale(0.5)
}

/// Full-rank random density matrix `G G† / Tr(G G†)`.
pub fn random_density<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = random_ginibre(d, rng);
    let m = g.matmul(&g.adjoint());
    let tr = m.trace().re;
    m.scale(1.0 / tr)
}

pub fn random_bipartite<R: Rng + ?Sized>(
    dim_a: usize,
    dim_b: usize,
    rng: &mut R,
) -> BipartiteState {
    BipartiteState::new(dim_a, dim_b, random_density(dim_a * dim_b, rng))
        .expect("random density matrix is a valid state")
}

/// Random two-qubit state, alternating between full-rank and pure draws so
/// that both interior and boundary points of state space are exercised.
pub fn random_two_qubit_state<R: Rng + ?Sized>(rng: &mut R) -> BipartiteState {
    if rng.random::<bool>() {
        random_bipartite(2, 2, rng)
    } else {
        let v = random_ket(4, rng);
        BipartiteState::new(2, 2, CMatrix::projector(&v)).expect("pure state is valid")
    }
}

/// Dichotomic observable `2P − 𝟙` for a Haar-random rank-`rank` projector.
pub fn random_dichotomic_observable<R: Rng + ?Sized>(
    d: usize,
    rank: usize,
    rng: &mut R,
) -> CMatrix {
    let basis = hermitian_eigen(&random_hermitian(d, rng))
        .expect("Hermitian by construction")
        .eigenvectors;
    let mut p = CMatrix::zeros(d, d);
    for k in 0..rank {
        p = &p + &CMatrix::projector(&basis.column(k));
    }
    &p.scale(2.0) - &CMatrix::identity(d)
}

/// `S^{-1/2}` for a positive definite `S`.
fn inverse_sqrt(s: &CMatrix) -> CMatrix {
    hermitian_eigen(s)
        .expect("Hermitian by construction")
        .reconstruct_with(|x| 1.0 / x.sqrt())
}

fn normalize_effects(effects: Vec<CMatrix>) -> Povm {
    let d = effects[0].rows();
    let total = effects.iter().fold(CMatrix::zeros(d, d), |acc, e| &acc + e);
    let w = inverse_sqrt(&total);
    let elements = effects
        .iter()
        .map(|e| {
            let m = w.matmul(e).matmul(&w);
            // remove rounding anti-Hermitian parts
            (&m + &m.adjoint()).scale(0.5)
        })
        .collect();
    Povm::new(elements).expect("normalized effects form a POVM")
}

/// POVM with `outcomes` rank-one effects on `C^d` (`outcomes ≥ d`).
pub fn random_rank_one_povm<R: Rng + ?Sized>(d: usize, outcomes: usize, rng: &mut R) -> Povm {
    assert!(
        outcomes >= d,
        "need at least d rank-one effects to span the identity"
    );
    let effects = (0..outcomes)
        .map(|_| CMatrix::projector(&random_ket(d, rng)))
        .collect();
    normalize_effects(effects)
}

/// POVM with `outcomes` full-rank random effects on `C^d`.
pub fn random_povm<R: Rng + ?Sized>(d: usize, outcomes: usize, rng: &mut R) -> Povm {
    let effects = (0..outcomes)
        .map(|_| {
            let g = random_ginibre(d, rng);
            g.matmul(&g.adjoint())
        })
        .collect();
    normalize_effects(effects)
}
