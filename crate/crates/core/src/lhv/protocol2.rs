use rand::Rng;

use super::models::{alice_response, bob_response, BaseModel, DichotomicRule};
use super::povm::{refine_povm, Povm};
use crate::error::{Error, Result};
use crate::qcore::{BipartiteState, CMatrix};

/// Pre-processed POVM of one party: rank-one refinement, the base-model
/// rule for each `{P, 𝟙 − P}`, and the fallback distribution `Tr(M_a σ)`.
#[derive(Debug, Clone)]
pub struct Protocol2Party {
    choice_cdf: Vec<f64>,
    rules: Vec<DichotomicRule>,
    parents: Vec<usize>,
    fallback_cdf: Vec<f64>,
}

fn cdf(weights: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .into_iter()
        .map(|w| {
            acc += w.max(0.0);
            acc
        })
        .collect()
}

fn draw<R: Rng + ?Sized>(cdf: &[f64], rng: &mut R) -> usize {
    let u = rng.random::<f64>() * cdf[cdf.len() - 1];
    cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1)
}

impl Protocol2Party {
    pub fn new(povm: &Povm, base: BaseModel, sigma: &CMatrix) -> Result<Self> {
        let d = base.dim();
        if povm.dim() != d || sigma.rows() != d {
            return Err(Error::DimensionMismatch(format!(
                "POVM on C^{} and sigma on C^{} for a base model on C^{d}",
                povm.dim(),
                sigma.rows()
            )));
        }
        let refined = refine_povm(povm)?;
        let id = CMatrix::identity(d);
        let rules = refined
            .iter()
            .map(|wp| base.rule(&(&wp.projector().scale(2.0) - &id)))
            .collect();
        Ok(Protocol2Party {
            choice_cdf: cdf(refined.iter().map(|wp| wp.weight / d as f64)),
            rules,
            parents: refined.iter().map(|wp| wp.parent).collect(),
            fallback_cdf: cdf(povm.probabilities(sigma)),
        })
    }

    pub fn refined_len(&self) -> usize {
        self.rules.len()
    }
}

/// Protocol-2 simulator for a fixed pair of POVMs.
#[derive(Debug, Clone)]
pub struct Protocol2Model {
    pub base: BaseModel,
    pub alice: Protocol2Party,
    pub bob: Protocol2Party,
}

impl Protocol2Model {
    pub fn new(
        povm_a: &Povm,
        povm_b: &Povm,
        base: BaseModel,
        sigma_a: &CMatrix,
        sigma_b: &CMatrix,
    ) -> Result<Self> {
        Ok(Protocol2Model {
            base,
            alice: Protocol2Party::new(povm_a, base, sigma_a)?,
            bob: Protocol2Party::new(povm_b, base, sigma_b)?,
        })
    }

    /// The state whose POVM statistics this model reproduces.
    pub fn target_state(
        base: BaseModel,
        sigma_a: &CMatrix,
        sigma_b: &CMatrix,
    ) -> Result<BipartiteState> {
        let rho0 = match base {
            BaseModel::Protocol1 { q } => crate::states::state_q(q)?,
            BaseModel::Erasure { q } => crate::states::erasure_state_checked(q)?,
        };
        crate::states::protocol2_map(&rho0, sigma_a, sigma_b)
    }
}

/// Outcome labels and whether each party answered in step (iii), i.e. from
/// the simulated projective measurement rather than the fallback.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Protocol2Outcome {
    pub a: usize,
    pub b: usize,
    pub alice_direct: bool,
    pub bob_direct: bool,
}

/// One round: each party (i) picks a refined projector with probability
/// `α/d`, (ii) runs the base model for `{P, 𝟙 − P}` on a shared `λ`,
/// (iii) outputs the projector's parent label on the `P` branch, and (iv)
/// otherwise samples a label from `Tr(M_a σ)`.
pub fn protocol2_round<R: Rng + ?Sized>(model: &Protocol2Model, rng: &mut R) -> Protocol2Outcome {
    let ia = draw(&model.alice.choice_cdf, rng);
    let ib = draw(&model.bob.choice_cdf, rng);
    let shared = model.base.sample_shared(rng);
    let (sa, _) = alice_response(&model.alice.rules[ia], &shared, rng);
    let sb = bob_response(&model.bob.rules[ib], &shared, rng);
    let (a, alice_direct) = if sa == 1 {
        (model.alice.parents[ia], true)
    } else {
        (draw(&model.alice.fallback_cdf, rng), false)
    };
    let (b, bob_direct) = if sb == 1 {
        (model.bob.parents[ib], true)
    } else {
        (draw(&model.bob.fallback_cdf, rng), false)
    };
    Protocol2Outcome {
        a,
        b,
        alice_direct,
        bob_direct,
    }
}
