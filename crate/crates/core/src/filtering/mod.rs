//! Local filtering: filtered states, the filter families that expose hidden
//! nonlocality, and a Monte Carlo run of the filter-then-measure experiment.

mod sequential;

pub use sequential::{sequential_mc, SequentialReport};

use crate::bell::horodecki_s;
use crate::error::{Error, Result};
use crate::qcore::{hermitian_eigen, BipartiteState, CMatrix, PSD_TOL};
use crate::states::StateFamily;

const NORM_TOL: f64 = 1e-12;
const MIN_SUCCESS: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Party {
    Alice,
    Bob,
}

/// Positive local operator `F` with `‖F‖ ≤ 1`, so that `{F, √(𝟙 − F†F)}`
/// is a valid two-outcome instrument.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFilter {
    op: CMatrix,
    party: Party,
}

impl LocalFilter {
    pub fn new(op: CMatrix, party: Party) -> Result<Self> {
        let dec = hermitian_eigen(&op).map_err(|e| Error::InvalidFilter(e.to_string()))?;
        if dec.min_eigenvalue() < -PSD_TOL {
            return Err(Error::InvalidFilter(format!(
                "negative eigenvalue {:e}",
                dec.min_eigenvalue()
            )));
        }
        if dec.max_eigenvalue() > 1.0 + NORM_TOL {
            return Err(Error::InvalidFilter(format!(
                "operator norm {} exceeds 1",
                dec.max_eigenvalue()
            )));
        }
        Ok(LocalFilter { op, party })
    }

    pub fn identity(d: usize, party: Party) -> Self {
        LocalFilter {
            op: CMatrix::identity(d),
            party,
        }
    }

    pub fn op(&self) -> &CMatrix {
        &self.op
    }

    pub fn party(&self) -> Party {
        self.party
    }

    pub fn dim(&self) -> usize {
        self.op.rows()
    }

    /// Success effect `F†F`.
    pub fn success_effect(&self) -> CMatrix {
        self.op.adjoint().matmul(&self.op)
    }
}

/// Post-selected state after both filters succeed, with the success
/// probability `N`.
#[derive(Debug, Clone)]
pub struct FilterOutcome {
    pub filtered: BipartiteState,
    pub success_prob: f64,
}

/// `ρ̃ = (F_A ⊗ F_B) ρ (F_A ⊗ F_B)† / N`.
pub fn apply_filters(
    s: &BipartiteState,
    f_a: &LocalFilter,
    f_b: &LocalFilter,
) -> Result<FilterOutcome> {
    if f_a.dim() != s.dim_a() || f_b.dim() != s.dim_b() {
        return Err(Error::DimensionMismatch(format!(
            "filters on {}x{} for a {}x{} state",
            f_a.dim(),
            f_b.dim(),
            s.dim_a(),
            s.dim_b()
        )));
    }
    let k = f_a.op.kron(&f_b.op);
    let unnormalized = k.matmul(s.matrix()).matmul(&k.adjoint());
    let n = unnormalized.trace().re;
    if n.is_nan() || n <= MIN_SUCCESS {
        return Err(Error::ZeroSuccessProbability(n));
    }
    let filtered =
        BipartiteState::new_unchecked(s.dim_a(), s.dim_b(), unnormalized.scale(1.0 / n))?;
    Ok(FilterOutcome {
        filtered,
        success_prob: n,
    })
}

/// `F_A = ε|0><0| + |1><1|`, `F_B = (ε/√q)|0><0| + |1><1|`.
pub fn epsilon_filters(eps: f64, q: f64) -> Result<(LocalFilter, LocalFilter)> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "eps = {eps} outside (0, 1]"
        )));
    }
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidParameter(format!("q = {q} outside (0, 1]")));
    }
    let delta = eps / q.sqrt();
    if delta > 1.0 + NORM_TOL {
        return Err(Error::InvalidParameter(format!(
            "delta = eps/sqrt(q) = {delta} exceeds 1"
        )));
    }
    let delta = delta.min(1.0);
    Ok((
        LocalFilter::new(CMatrix::from_diag(&[eps, 1.0]), Party::Alice)?,
        LocalFilter::new(CMatrix::from_diag(&[delta, 1.0]), Party::Bob)?,
    ))
}

/// Projector onto `span{|0>, |1>}` in dimension `d ≥ 3`.
pub fn qubit_subspace_filter(d: usize, party: Party) -> Result<LocalFilter> {
    if d < 3 {
        return Err(Error::InvalidParameter(format!(
            "qubit subspace filter needs d >= 3, got {d}"
        )));
    }
    let mut diag = vec![0.0; d];
    diag[0] = 1.0;
    diag[1] = 1.0;
    LocalFilter::new(CMatrix::from_diag(&diag), party)
}

/// Restricts a state supported on `span{|0>,|1>}^{⊗2}` to a two-qubit state.
/// Fails if more than `1e-12` of the weight lies outside that block.
pub fn project_to_qubits(s: &BipartiteState) -> Result<BipartiteState> {
    if s.dims() == (2, 2) {
        return Ok(s.clone());
    }
    let db = s.dim_b();
    if s.dim_a() < 2 || db < 2 {
        return Err(Error::DimensionMismatch("local dimensions below 2".into()));
    }
    let idx = [0, 1, db, db + 1];
    let block = s.matrix().principal_submatrix(&idx);
    let weight = block.trace().re;
    if (weight - 1.0).abs() > NORM_TOL {
        return Err(Error::DimensionMismatch(format!(
            "state has weight {:e} outside the qubit block",
            1.0 - weight
        )));
    }
    BipartiteState::new(2, 2, block)
}

/// Closed-form `ε → 0` CHSH value for the filtered families.
pub fn filtered_s_limit(family: StateFamily, q: f64) -> Result<f64> {
    match family {
        StateFamily::StateQ => Ok(2.0 * (1.0 + q).sqrt()),
        StateFamily::RhoG => Ok(2.0 * (1.0 + q / 4.0).sqrt()),
        other => Err(Error::InvalidParameter(format!(
            "no ε-filter family for {other}"
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub eps: f64,
    pub s: f64,
    pub success_prob: f64,
    pub closed_form: f64,
}

/// Horodecki value and success probability of the ε-filtered state for each
/// `eps`.
pub fn filter_scan(family: StateFamily, q: f64, eps_list: &[f64]) -> Result<Vec<ScanRow>> {
    let closed_form = filtered_s_limit(family, q)?;
    let state = family.build(q)?;
    eps_list
        .iter()
        .map(|&eps| {
            let (fa, fb) = epsilon_filters(eps, q)?;
            let out = apply_filters(&state, &fa, &fb)?;
            Ok(ScanRow {
                eps,
                s: horodecki_s(&out.filtered)?,
                success_prob: out.success_prob,
                closed_form,
            })
        })
        .collect()
}

/// Two-point Richardson extrapolation of `S(ε) = S₀ + C ε²` to `ε = 0`.
pub fn richardson_limit(a: &ScanRow, b: &ScanRow) -> f64 {
    let (ea, eb) = (a.eps * a.eps, b.eps * b.eps);
    (ea * b.s - eb * a.s) / (ea - eb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{chsh_value, optimal_chsh_settings};
    use crate::qcore::trace_distance;
    use crate::random::random_bipartite;
    use crate::rng::stream;
    use crate::states::{erasure_state, singlet, state_q, state_rho_g, state_rho_gm};

    fn qubit_filters(d: usize) -> (LocalFilter, LocalFilter) {
        (
            qubit_subspace_filter(d, Party::Alice).unwrap(),
            qubit_subspace_filter(d, Party::Bob).unwrap(),
        )
    }

    #[test]
    fn identity_filters_do_nothing() {
        let mut rng = stream(51, 0);
        let s = random_bipartite(2, 3, &mut rng);
        let out = apply_filters(
            &s,
            &LocalFilter::identity(2, Party::Alice),
            &LocalFilter::identity(3, Party::Bob),
        )
        .unwrap();
        assert!((out.success_prob - 1.0).abs() < 1e-14);
        assert!(out.filtered.matrix().max_abs_diff(s.matrix()) < 1e-14);
    }

    #[test]
    fn filter_validation() {
        assert!(LocalFilter::new(CMatrix::from_diag(&[1.5, 1.0]), Party::Alice).is_err());
        assert!(LocalFilter::new(CMatrix::from_diag(&[-0.5, 1.0]), Party::Alice).is_err());
        assert!(epsilon_filters(0.8, 0.25).is_err());
        assert!(epsilon_filters(0.0, 0.5).is_err());
        assert!(qubit_subspace_filter(2, Party::Bob).is_err());
        let s = state_q(0.5).unwrap();
        let (fa, _) = qubit_filters(3);
        assert!(matches!(
            apply_filters(&s, &fa, &LocalFilter::identity(2, Party::Bob)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn epsilon_filter_boundaries() {
        let (fa, fb) = epsilon_filters(1.0, 1.0).unwrap();
        assert_eq!(fa.op(), &CMatrix::identity(2));
        assert_eq!(fb.op(), &CMatrix::identity(2));
        let (_, fb) = epsilon_filters(0.5, 0.25).unwrap();
        assert_eq!(fb.op(), &CMatrix::identity(2));
    }

    #[test]
    fn zero_success_is_an_error() {
        // |2><2| ⊗ |2><2| filtered onto the qubit block
        let s = BipartiteState::product(
            &CMatrix::basis_projector(3, 2),
            &CMatrix::basis_projector(3, 2),
        )
        .unwrap();
        let (fa, fb) = qubit_filters(3);
        assert!(matches!(
            apply_filters(&s, &fa, &fb),
            Err(Error::ZeroSuccessProbability(_))
        ));
    }

    #[test]
    fn erasure_filters_to_singlet() {
        let (fa, fb) = qubit_filters(3);
        for q in [0.1, 0.5, 1.0] {
            let out = apply_filters(&erasure_state(q), &fa, &fb).unwrap();
            assert!((out.success_prob - q).abs() < 1e-15);
            let td = trace_distance(out.filtered.matrix(), singlet(3, 3).matrix()).unwrap();
            assert!(td <= 1e-12);
        }
    }

    #[test]
    fn rho_gm_filters_to_singlet() {
        let (fa, fb) = qubit_filters(3);
        let out = apply_filters(&state_rho_gm(0.5).unwrap(), &fa, &fb).unwrap();
        assert!((out.success_prob - 0.5 / 9.0).abs() < 1e-12);
        let two = project_to_qubits(&out.filtered).unwrap();
        let s = horodecki_s(&two).unwrap();
        assert!((s - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-9);
        let c = optimal_chsh_settings(&two).unwrap();
        assert!((chsh_value(&two, &c).unwrap() - s).abs() < 1e-9);
    }

    #[test]
    fn project_to_qubits_rejects_leakage() {
        assert!(project_to_qubits(&erasure_state(0.5)).is_err());
        assert!(project_to_qubits(&singlet(3, 3)).is_ok());
    }

    #[test]
    fn eps_filtered_state_q_approaches_closed_form() {
        let q: f64 = 0.5;
        let (fa, fb) = epsilon_filters(1e-4, q).unwrap();
        let out = apply_filters(&state_q(q).unwrap(), &fa, &fb).unwrap();
        let p = q.sqrt();
        let target = &singlet(2, 2).matrix().scale(p)
            + &CMatrix::from_diag(&[0.0, 0.5, 0.5, 0.0]).scale(1.0 - p);
        assert!(trace_distance(out.filtered.matrix(), &target).unwrap() <= 1e-7);
        let s = horodecki_s(&out.filtered).unwrap();
        assert!((s - 2.0 * 1.5f64.sqrt()).abs() <= 1e-6);
    }

    #[test]
    fn filtering_is_idempotent_under_identity() {
        let (fa, fb) = epsilon_filters(0.3, 0.5).unwrap();
        let once = apply_filters(&state_rho_g(0.5).unwrap(), &fa, &fb).unwrap();
        let twice = apply_filters(
            &once.filtered,
            &LocalFilter::identity(2, Party::Alice),
            &LocalFilter::identity(2, Party::Bob),
        )
        .unwrap();
        assert!(twice.filtered.matrix().max_abs_diff(once.filtered.matrix()) < 1e-15);
    }

    #[test]
    fn filtering_a_mixture_reweights() {
        let mut rng = stream(52, 0);
        let (fa, fb) = epsilon_filters(0.4, 0.7).unwrap();
        for _ in 0..10 {
            let r1 = random_bipartite(2, 2, &mut rng);
            let r2 = random_bipartite(2, 2, &mut rng);
            let t = 0.35;
            let mixed = r1.mix(&r2, t).unwrap();
            let o = apply_filters(&mixed, &fa, &fb).unwrap();
            let o1 = apply_filters(&r1, &fa, &fb).unwrap();
            let o2 = apply_filters(&r2, &fa, &fb).unwrap();
            let w1 = t * o1.success_prob;
            let w2 = (1.0 - t) * o2.success_prob;
            assert!((o.success_prob - (w1 + w2)).abs() < 1e-12);
            let expected = &o1.filtered.matrix().scale(w1 / (w1 + w2))
                + &o2.filtered.matrix().scale(w2 / (w1 + w2));
            assert!(o.filtered.matrix().max_abs_diff(&expected) < 1e-12);
        }
    }

    #[test]
    fn scan_rows() {
        let rows = filter_scan(StateFamily::StateQ, 0.5, &[1e-1, 1e-2, 1e-3, 1e-4]).unwrap();
        assert!((rows[1].s - 2.0 * 1.5f64.sqrt()).abs() <= 1e-3);
        for w in rows.windows(2) {
            assert!(w[1].success_prob < w[0].success_prob);
            assert!((w[1].s - w[1].closed_form).abs() <= (w[0].s - w[0].closed_form).abs());
        }
        for r in &rows {
            assert!(r.success_prob > 0.0 && r.success_prob <= 1.0);
        }
        let rows = filter_scan(StateFamily::RhoG, 0.5, &[1e-4]).unwrap();
        assert!((rows[0].s - 2.0 * 1.125f64.sqrt()).abs() <= 1e-6);
        assert!(filter_scan(StateFamily::Erasure, 0.5, &[1e-2]).is_err());
    }

    #[test]
    fn eps_squared_correction_is_stable() {
        for family in [StateFamily::StateQ, StateFamily::RhoG] {
            let rows = filter_scan(family, 0.5, &[1e-2, 1e-3, 1e-4]).unwrap();
            let c: Vec<f64> = rows
                .iter()
                .map(|r| (r.s - r.closed_form) / (r.eps * r.eps))
                .collect();
            assert!(
                c[0].abs() > 1e-3,
                "correction should be visible at eps=1e-2"
            );
            for ci in &c[1..] {
                assert!((ci - c[0]).abs() <= 0.05 * c[0].abs(), "{family}: {c:?}");
            }
            let extrapolated = richardson_limit(&rows[0], &rows[1]);
            assert!((extrapolated - rows[0].closed_form).abs() < 1e-8);
        }
    }
}
