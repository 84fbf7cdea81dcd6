use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qcore::{hermitian_eigen, CMatrix};

const EFFECT_PSD_TOL: f64 = 1e-10;
const COMPLETENESS_TOL: f64 = 1e-9;
const REFINE_CUTOFF: f64 = 1e-12;

/// Measurement given by positive effects that sum to the identity. Outcome
/// `k` is the index of its effect.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    elements: Vec<CMatrix>,
}

impl Povm {
    pub fn new(elements: Vec<CMatrix>) -> Result<Self> {
        let Some(first) = elements.first() else {
            return Err(Error::InvalidPovm("no effects".into()));
        };
        let d = first.rows();
        let mut total = CMatrix::zeros(d, d);
        for (k, e) in elements.iter().enumerate() {
            if e.rows() != d || !e.is_square() {
                return Err(Error::InvalidPovm(format!(
                    "effect {k} has the wrong shape"
                )));
            }
            let min = hermitian_eigen(e)
                .map_err(|err| Error::InvalidPovm(format!("effect {k}: {err}")))?
                .min_eigenvalue();
            if min < -EFFECT_PSD_TOL {
                return Err(Error::InvalidPovm(format!(
                    "effect {k} has negative eigenvalue {min:e}"
                )));
            }
            total = &total + e;
        }
        let dev = total.max_abs_diff(&CMatrix::identity(d));
        if dev > COMPLETENESS_TOL {
            return Err(Error::InvalidPovm(format!(
                "effects sum to identity only within {dev:e}"
            )));
        }
        Ok(Povm { elements })
    }

    /// Two-outcome measurement `{(𝟙+O)/2, (𝟙−O)/2}` of an observable with
    /// spectrum in `[−1, 1]`; outcome 0 is `+1`.
    pub fn from_observable(o: &CMatrix) -> Result<Self> {
        let id = CMatrix::identity(o.rows());
        Povm::new(vec![(&id + o).scale(0.5), (&id - o).scale(0.5)])
    }

    pub fn dim(&self) -> usize {
        self.elements[0].rows()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    /// Outcome distribution `Tr(M_k σ)` on a local state.
    pub fn probabilities(&self, sigma: &CMatrix) -> Vec<f64> {
        self.elements
            .iter()
            .map(|m| m.trace_product(sigma).re)
            .collect()
    }

    /// `M₀ − M₁` for a two-outcome POVM.
    pub fn dichotomic_observable(&self) -> Result<CMatrix> {
        if self.len() != 2 {
            return Err(Error::InvalidPovm(format!(
                "expected two outcomes, found {}",
                self.len()
            )));
        }
        Ok(&self.elements[0] - &self.elements[1])
    }
}

/// One term `α |v><v|` of a rank-one refinement, tagged with the outcome
/// of the effect it came from.
#[derive(Debug, Clone)]
pub struct WeightedProjector {
    pub weight: f64,
    pub vector: Vec<Complex64>,
    pub parent: usize,
}

impl WeightedProjector {
    pub fn projector(&self) -> CMatrix {
        CMatrix::projector(&self.vector)
    }
}

/// Splits every effect into weighted rank-one eigenprojectors. Eigenvalues
/// below `1e-12` are dropped and the remaining weights are rescaled to sum
/// to the dimension.
pub fn refine_povm(p: &Povm) -> Result<Vec<WeightedProjector>> {
    let d = p.dim();
    let mut out = Vec::new();
    for (parent, e) in p.elements().iter().enumerate() {
        let dec = hermitian_eigen(e)?;
        for (k, &w) in dec.eigenvalues.iter().enumerate() {
            if w > REFINE_CUTOFF {
                out.push(WeightedProjector {
                    weight: w,
                    vector: dec.eigenvector(k),
                    parent,
                });
            }
        }
    }
    let total: f64 = out.iter().map(|wp| wp.weight).sum();
    if (total - d as f64).abs() > COMPLETENESS_TOL {
        return Err(Error::InvalidPovm(format!(
            "refined weights sum to {total}, expected {d}"
        )));
    }
    let rescale = d as f64 / total;
    for wp in &mut out {
        wp.weight *= rescale;
    }
    Ok(out)
}
