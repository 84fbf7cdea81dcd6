use rand::Rng;
use serde::Serialize;

use super::sphere::{sample_sphere, HiddenVariable};
use crate::bell::{dot, BlochVector};
use crate::error::{Error, Result};
use crate::qcore::{hermitian_eigen, CMatrix};

const DICHOTOMIC_TOL: f64 = 1e-9;
const SPECTRUM_TOL: f64 = 1e-9;

/// `O` restricted to the qubit block as `c0 x·σ + c1 𝟙₂`, plus the flag
/// diagonal `trR = <2|O|2>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObservableDecomposition {
    pub c0: f64,
    pub c1: f64,
    pub x: [f64; 3],
    pub tr_r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecomposeMode {
    /// Requires `O² = 𝟙`.
    Strict,
    /// Accepts any Hermitian `O` with spectrum in `[−1, 1]`.
    Relaxed,
}

/// Pauli coefficients of the top-left 2x2 block of `o`.
fn qubit_block_coefficients(o: &CMatrix) -> (f64, [f64; 3]) {
    let block = o.principal_submatrix(&[0, 1]);
    let c1 = 0.5 * block.trace().re;
    let v = CMatrix::paulis().map(|p| 0.5 * p.trace_product(&block).re);
    (c1, v)
}

fn split_bloch(v: [f64; 3]) -> (f64, [f64; 3]) {
    let c0 = dot(v, v).sqrt();
    if c0 < 1e-12 {
        (0.0, [0.0, 0.0, 1.0])
    } else {
        (c0, v.map(|x| x / c0))
    }
}

/// Writes a qutrit observable as `c0 x·σ ⊕ ... + c1 𝟙₂ + R` with `trR = <2|O|2>`.
pub fn decompose_observable(
    o: &CMatrix,
    d: usize,
    mode: DecomposeMode,
) -> Result<ObservableDecomposition> {
    if d != 3 || o.rows() != 3 || !o.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "qutrit observable expected, got {}x{} with d = {d}",
            o.rows(),
            o.cols()
        )));
    }
    let herm = o.hermiticity_error();
    if herm > DICHOTOMIC_TOL {
        return Err(Error::NotHermitian(herm));
    }
    match mode {
        DecomposeMode::Strict => {
            let dev = o.matmul(o).max_abs_diff(&CMatrix::identity(3));
            if dev > DICHOTOMIC_TOL {
                return Err(Error::NotDichotomic(dev));
            }
        }
        DecomposeMode::Relaxed => {
            let dec = hermitian_eigen(o)?;
            if dec.max_eigenvalue() > 1.0 + SPECTRUM_TOL
                || dec.min_eigenvalue() < -1.0 - SPECTRUM_TOL
            {
                return Err(Error::InvalidParameter(
                    "observable spectrum outside [-1, 1]".into(),
                ));
            }
        }
    }
    let (c1, v) = qubit_block_coefficients(o);
    let (c0, x) = split_bloch(v);
    Ok(ObservableDecomposition {
        c0,
        c1,
        x,
        tr_r: o[(2, 2)].re,
    })
}

/// Local response parameters of one party for one dichotomic measurement.
///
/// On a shared `λ` from the correlated branch, Alice accepts with probability
/// `|x·λ|`; accepted, she outputs `−sign(x·λ)` with probability `c0` and
/// otherwise a bit with bias `mu = c1/(1 − c0)`; rejected, a bit with bias
/// `flag_bias`. Bob outputs `sign(x·λ)` with probability `c0`, otherwise a bit
/// with bias `mu`. In the uncorrelated branch Alice uses `flag_bias` and Bob
/// uses `c1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DichotomicRule {
    pub c0: f64,
    pub c1: f64,
    pub mu: f64,
    pub x: [f64; 3],
    pub flag_bias: f64,
}

impl DichotomicRule {
    fn from_parts(c0: f64, c1: f64, x: [f64; 3], flag_bias: f64) -> Self {
        let c0 = c0.min(1.0);
        let mu = if c0 >= 1.0 - 1e-12 {
            0.0
        } else {
            (c1 / (1.0 - c0)).clamp(-1.0, 1.0)
        };
        DichotomicRule {
            c0,
            c1,
            mu,
            x,
            flag_bias: flag_bias.clamp(-1.0, 1.0),
        }
    }

    /// Rule for the qubit observable `x·σ` under the singlet-plus-`|0>` model.
    pub fn qubit(x: BlochVector) -> Self {
        let v = x.components();
        Self::from_parts(1.0, 0.0, v, v[2])
    }

    pub fn from_decomposition(d: &ObservableDecomposition) -> Self {
        Self::from_parts(d.c0, d.c1, d.x, d.tr_r)
    }

    /// Rule for a dichotomic observable whose qubit block carries the
    /// correlations and whose `flag` diagonal entry answers for the flag state.
    pub fn from_observable(o: &CMatrix, flag: usize) -> Self {
        let (c1, v) = qubit_block_coefficients(o);
        let (c0, x) = split_bloch(v);
        Self::from_parts(c0, c1, x, o[(flag, flag)].re)
    }
}

impl From<&ObservableDecomposition> for DichotomicRule {
    fn from(d: &ObservableDecomposition) -> Self {
        DichotomicRule::from_decomposition(d)
    }
}

/// Shared randomness of one round: which branch of the mixture is active and,
/// for the correlated branch, the sphere point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SharedRandomness {
    pub correlated: bool,
    pub hidden: HiddenVariable,
}

fn signed_bit<R: Rng + ?Sized>(bias: f64, rng: &mut R) -> i8 {
    if rng.random::<f64>() < 0.5 * (1.0 + bias) {
        1
    } else {
        -1
    }
}

fn sign(x: f64) -> i8 {
    if x >= 0.0 {
        1
    } else {
        -1
    }
}

/// Alice's response. Sees only her rule, the shared variable and her own
/// randomness. Returns the outcome and whether `λ` was accepted.
pub fn alice_response<R: Rng + ?Sized>(
    rule: &DichotomicRule,
    shared: &SharedRandomness,
    rng: &mut R,
) -> (i8, bool) {
    if !shared.correlated {
        return (signed_bit(rule.flag_bias, rng), false);
    }
    let proj = dot(rule.x, shared.hidden.lambda);
    if rng.random::<f64>() < proj.abs() {
        let a = if rng.random::<f64>() < rule.c0 {
            -sign(proj)
        } else {
            signed_bit(rule.mu, rng)
        };
        (a, true)
    } else {
        (signed_bit(rule.flag_bias, rng), false)
    }
}

/// Bob's response. Sees only his rule, the shared variable and his own
/// randomness.
pub fn bob_response<R: Rng + ?Sized>(
    rule: &DichotomicRule,
    shared: &SharedRandomness,
    rng: &mut R,
) -> i8 {
    if !shared.correlated {
        return signed_bit(rule.c1, rng);
    }
    if rng.random::<f64>() < rule.c0 {
        sign(dot(rule.x, shared.hidden.lambda))
    } else {
        signed_bit(rule.mu, rng)
    }
}

/// Which dichotomic LHV model to run and at what mixing weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaseModel {
    /// Singlet plus `|0><0| ⊗ 𝟙/2` on two qubits.
    Protocol1 { q: f64 },
    /// Singlet plus `|2><2| ⊗ 𝟙₂/2` on `C^3 ⊗ C^3`.
    Erasure { q: f64 },
}

impl BaseModel {
    pub fn new_protocol1(q: f64) -> Result<Self> {
        check_model_q(q)?;
        Ok(BaseModel::Protocol1 { q })
    }

    pub fn new_erasure(q: f64) -> Result<Self> {
        check_model_q(q)?;
        Ok(BaseModel::Erasure { q })
    }

    pub fn q(self) -> f64 {
        match self {
            BaseModel::Protocol1 { q } | BaseModel::Erasure { q } => q,
        }
    }

    pub fn dim(self) -> usize {
        match self {
            BaseModel::Protocol1 { .. } => 2,
            BaseModel::Erasure { .. } => 3,
        }
    }

    /// Basis index of the flag state held by Alice in the noise component.
    pub fn flag(self) -> usize {
        match self {
            BaseModel::Protocol1 { .. } => 0,
            BaseModel::Erasure { .. } => 2,
        }
    }

    /// Response rule for the dichotomic observable `o`.
    pub fn rule(self, o: &CMatrix) -> DichotomicRule {
        DichotomicRule::from_observable(o, self.flag())
    }

    /// Correlated branch with probability `2q`, else the product branch.
    pub fn sample_shared<R: Rng + ?Sized>(self, rng: &mut R) -> SharedRandomness {
        let correlated = rng.random::<f64>() < 2.0 * self.q();
        let hidden = if correlated {
            sample_sphere(rng)
        } else {
            HiddenVariable { lambda: [0.0; 3] }
        };
        SharedRandomness { correlated, hidden }
    }
}

fn check_model_q(q: f64) -> Result<()> {
    if !(0.0..=0.5).contains(&q) {
        return Err(Error::InvalidParameter(format!(
            "local model requires 0 <= q <= 1/2, got {q}"
        )));
    }
    Ok(())
}

/// Outcome of one LHV round for a pair of dichotomic measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundOutcome {
    pub a: i8,
    pub b: i8,
    /// `Some(accepted)` in the correlated branch, `None` otherwise.
    pub accepted: Option<bool>,
}

fn dichotomic_round<R: Rng + ?Sized>(
    model: BaseModel,
    rule_a: &DichotomicRule,
    rule_b: &DichotomicRule,
    rng: &mut R,
) -> RoundOutcome {
    let shared = model.sample_shared(rng);
    let (a, accepted) = alice_response(rule_a, &shared, rng);
    let b = bob_response(rule_b, &shared, rng);
    RoundOutcome {
        a,
        b,
        accepted: shared.correlated.then_some(accepted),
    }
}

/// One round of the LHV model for `x·σ ⊗ y·σ` on `q Ψ₋ + (1−q)|0><0|⊗𝟙/2`.
pub fn protocol1_round<R: Rng + ?Sized>(
    x: BlochVector,
    y: BlochVector,
    q: f64,
    rng: &mut R,
) -> Result<RoundOutcome> {
    let model = BaseModel::new_protocol1(q)?;
    Ok(dichotomic_round(
        model,
        &DichotomicRule::qubit(x),
        &DichotomicRule::qubit(y),
        rng,
    ))
}

/// One round of the erasure-state model for two decomposed observables.
pub fn erasure_round<R: Rng + ?Sized>(
    dec_a: &ObservableDecomposition,
    dec_b: &ObservableDecomposition,
    q: f64,
    rng: &mut R,
) -> Result<RoundOutcome> {
    let model = BaseModel::new_erasure(q)?;
    Ok(dichotomic_round(model, &dec_a.into(), &dec_b.into(), rng))
}

pub(crate) fn run_dichotomic_round<R: Rng + ?Sized>(
    model: BaseModel,
    rule_a: &DichotomicRule,
    rule_b: &DichotomicRule,
    rng: &mut R,
) -> RoundOutcome {
    dichotomic_round(model, rule_a, rule_b, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_dichotomic_observable, random_ket, random_unit_vector};
    use crate::rng::stream;
    use num_complex::Complex64;

    fn bv(v: [f64; 3]) -> BlochVector {
        BlochVector::normalized(v).unwrap()
    }

    fn sigma_z_block(flag: f64) -> CMatrix {
        CMatrix::from_diag(&[1.0, -1.0, flag])
    }

    #[test]
    fn decompose_basic_observables() {
        let d = decompose_observable(&sigma_z_block(1.0), 3, DecomposeMode::Strict).unwrap();
        assert_eq!((d.c0, d.c1, d.x, d.tr_r), (1.0, 0.0, [0.0, 0.0, 1.0], 1.0));
        let d = decompose_observable(&CMatrix::identity(3), 3, DecomposeMode::Strict).unwrap();
        assert_eq!((d.c0, d.c1, d.tr_r), (0.0, 1.0, 1.0));
        let d = decompose_observable(&CMatrix::identity(3).scale(-1.0), 3, DecomposeMode::Strict)
            .unwrap();
        assert_eq!(d.c1, -1.0);
    }

    #[test]
    fn decompose_errors() {
        let half = CMatrix::from_diag(&[0.5, -1.0, 1.0]);
        assert!(matches!(
            decompose_observable(&half, 3, DecomposeMode::Strict),
            Err(Error::NotDichotomic(_))
        ));
        assert!(decompose_observable(&half, 3, DecomposeMode::Relaxed).is_ok());
        let big = CMatrix::from_diag(&[2.0, -1.0, 1.0]);
        assert!(decompose_observable(&big, 3, DecomposeMode::Relaxed).is_err());
        let skew = CMatrix::from_real(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            decompose_observable(&skew, 3, DecomposeMode::Relaxed),
            Err(Error::NotHermitian(_))
        ));
        assert!(decompose_observable(&CMatrix::identity(2), 2, DecomposeMode::Strict).is_err());
    }

    #[test]
    fn decomposition_reconstructs_qubit_block() {
        let mut rng = stream(71, 0);
        for i in 0..100 {
            let o = random_dichotomic_observable(3, 1 + i % 2, &mut rng);
            let d = decompose_observable(&o, 3, DecomposeMode::Strict).unwrap();
            let rebuilt =
                &CMatrix::bloch_observable(d.x).scale(d.c0) + &CMatrix::identity(2).scale(d.c1);
            assert!(rebuilt.max_abs_diff(&o.principal_submatrix(&[0, 1])) <= 1e-10);
            assert!(d.c0 + d.c1.abs() <= 1.0 + 1e-9);
            assert!((d.tr_r - o[(2, 2)].re).abs() < 1e-15);
        }
    }

    #[test]
    fn pauli_coefficients_of_rank_one_projector() {
        // O = 2|v><v| − 𝟙: qubit block 2ΠvΠ − 𝟙₂, Bloch part 2 Re/Im of v0 v1*
        let mut rng = stream(72, 0);
        for _ in 0..20 {
            let v = random_ket(3, &mut rng);
            let o = &CMatrix::projector(&v).scale(2.0) - &CMatrix::identity(3);
            let d = decompose_observable(&o, 3, DecomposeMode::Strict).unwrap();
            let cross: Complex64 = v[0] * v[1].conj();
            let bloch = [
                2.0 * cross.re,
                -2.0 * cross.im,
                v[0].norm_sqr() - v[1].norm_sqr(),
            ];
            let norm = dot(bloch, bloch).sqrt();
            assert!((d.c0 - norm).abs() < 1e-12);
            assert!((d.c1 - (v[0].norm_sqr() + v[1].norm_sqr() - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn protocol1_requires_valid_q() {
        let mut rng = stream(73, 0);
        let z = BlochVector::Z;
        assert!(matches!(
            protocol1_round(z, z, 0.6, &mut rng),
            Err(Error::InvalidParameter(_))
        ));
        assert!(protocol1_round(z, z, 0.5, &mut rng).is_ok());
        let d = decompose_observable(&sigma_z_block(1.0), 3, DecomposeMode::Strict).unwrap();
        assert!(erasure_round(&d, &d, 0.7, &mut rng).is_err());
    }

    #[test]
    fn protocol1_statistics_at_half() {
        let mut rng = stream(74, 0);
        let x = bv(random_unit_vector(&mut rng));
        let y = bv(random_unit_vector(&mut rng));
        let n = 400_000;
        let (mut ab, mut a, mut b, mut acc, mut core) = (0i64, 0i64, 0i64, 0u64, 0u64);
        for _ in 0..n {
            let r = protocol1_round(x, y, 0.5, &mut rng).unwrap();
            ab += (r.a * r.b) as i64;
            a += r.a as i64;
            b += r.b as i64;
            if let Some(accepted) = r.accepted {
                core += 1;
                acc += accepted as u64;
            }
        }
        let nf = n as f64;
        let tol = 5.0 / nf.sqrt();
        assert_eq!(core, n);
        assert!((ab as f64 / nf + x.dot(y) / 2.0).abs() < tol);
        assert!((a as f64 / nf - x.components()[2] / 2.0).abs() < tol);
        assert!((b as f64 / nf).abs() < tol);
        assert!((acc as f64 / nf - 0.5).abs() < tol);
    }

    #[test]
    fn protocol1_product_endpoint() {
        let mut rng = stream(75, 0);
        let x = bv([0.6, 0.0, 0.8]);
        let n = 200_000;
        let (mut ab, mut a) = (0i64, 0i64);
        for _ in 0..n {
            let r = protocol1_round(x, BlochVector::Z, 0.0, &mut rng).unwrap();
            assert!(r.accepted.is_none());
            ab += (r.a * r.b) as i64;
            a += r.a as i64;
        }
        let tol = 5.0 / (n as f64).sqrt();
        assert!((ab as f64 / n as f64).abs() < tol);
        assert!((a as f64 / n as f64 - 0.8).abs() < tol);
    }

    #[test]
    fn deterministic_alice_observable() {
        let mut rng = stream(76, 0);
        let id = decompose_observable(&CMatrix::identity(3), 3, DecomposeMode::Strict).unwrap();
        let bob = decompose_observable(&sigma_z_block(1.0), 3, DecomposeMode::Strict).unwrap();
        let n = 100_000;
        let mut b_sum = 0i64;
        for _ in 0..n {
            let r = erasure_round(&id, &bob, 0.5, &mut rng).unwrap();
            assert_eq!(r.a, 1);
            b_sum += r.b as i64;
        }
        assert!((b_sum as f64 / n as f64).abs() < 5.0 / (n as f64).sqrt());
    }
}
