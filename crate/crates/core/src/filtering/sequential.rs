use rand::Rng as _;
use serde::Serialize;

use super::{apply_filters, project_to_qubits, LocalFilter};
use crate::bell::{born_joint, projectors_from_bloch, ChshSettings, CHSH_SIGNS};
use crate::error::{Error, Result};
use crate::qcore::{BipartiteState, CMatrix};
use crate::rng::{run_chunked, Rng};

/// Empirical statistics of the filter-then-measure CHSH experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequentialReport {
    pub seed: u64,
    pub rounds: u64,
    pub successes: u64,
    pub success_rate: f64,
    pub success_prob: f64,
    pub success_z: f64,
    /// `counts[k][a * 2 + b]` for setting pair `k` in CHSH order.
    pub counts: [[u64; 4]; 4],
    pub correlators: [f64; 4],
    pub target_correlators: [f64; 4],
    pub s_hat: f64,
    pub s_sigma: f64,
    pub s_target: f64,
    pub s_z: f64,
}

#[derive(Default)]
struct Tally {
    successes: u64,
    counts: [[u64; 4]; 4],
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        self.successes += other.successes;
        for (row, o) in self.counts.iter_mut().zip(other.counts) {
            for (c, oc) in row.iter_mut().zip(o) {
                *c += oc;
            }
        }
        self
    }
}

fn cumulative(p: &[f64]) -> [f64; 4] {
    let mut acc = 0.0;
    let mut out = [0.0; 4];
    for (o, &pi) in out.iter_mut().zip(p) {
        acc += pi.max(0.0);
        *o = acc;
    }
    out
}

fn sample(cdf: &[f64; 4], u: f64) -> usize {
    let u = u * cdf[3];
    cdf.iter().position(|&c| u < c).unwrap_or(3)
}

/// Monte Carlo of the sequential experiment.
///
/// Each round Alice applies her filter instrument (success probability
/// `Tr[(F_A†F_A ⊗ 𝟙) ρ]`), then Bob applies his on the updated state; failed
/// rounds are discarded. Surviving rounds pick one of the four CHSH setting
/// pairs uniformly and sample `±1` outcomes from the Born rule on the
/// filtered state. States supported on the qubit block of a larger space are
/// measured there.
pub fn sequential_mc(
    s: &BipartiteState,
    f_a: &LocalFilter,
    f_b: &LocalFilter,
    settings: &ChshSettings,
    rounds: u64,
    seed: u64,
) -> Result<SequentialReport> {
    if rounds == 0 {
        return Err(Error::InvalidParameter("rounds must be at least 1".into()));
    }
    let outcome = apply_filters(s, f_a, f_b)?;
    let n = outcome.success_prob;

    let alice_only = f_a.op().kron(&CMatrix::identity(s.dim_b()));
    let after_alice = alice_only.matmul(s.matrix()).matmul(&alice_only.adjoint());
    let p_alice = after_alice.trace().re;
    let p_bob_given_alice = n / p_alice;

    let filtered = project_to_qubits(&outcome.filtered)?;
    let mut tables = [[0.0; 4]; 4];
    let mut targets = [0.0; 4];
    for (k, (x, y)) in settings.pairs().into_iter().enumerate() {
        let pa = projectors_from_bloch(x.components())?;
        let pb = projectors_from_bloch(y.components())?;
        let joint = born_joint(&filtered, &pa, &pb)?;
        targets[k] = joint.correlator()?;
        tables[k] = cumulative(&joint.probs);
    }

    let tally = run_chunked(
        seed,
        0,
        rounds,
        |rng: &mut Rng, len| {
            let mut t = Tally::default();
            for _ in 0..len {
                if rng.random::<f64>() >= p_alice {
                    continue;
                }
                if rng.random::<f64>() >= p_bob_given_alice {
                    continue;
                }
                t.successes += 1;
                let k = rng.random_range(0..4usize);
                let cell = sample(&tables[k], rng.random::<f64>());
                t.counts[k][cell] += 1;
            }
            t
        },
        Tally::merge,
    );

    if tally.successes == 0 {
        return Err(Error::ZeroSuccessProbability(0.0));
    }
    let mut correlators = [0.0; 4];
    let mut s_hat = 0.0;
    let mut var = 0.0;
    for k in 0..4 {
        let c = tally.counts[k];
        let total = c.iter().sum::<u64>() as f64;
        let same = (c[0] + c[3]) as f64;
        correlators[k] = if total > 0.0 {
            (2.0 * same - total) / total
        } else {
            0.0
        };
        s_hat += CHSH_SIGNS[k] * correlators[k];
        var += (1.0 - targets[k] * targets[k]).max(0.0) / total.max(1.0);
    }
    let s_target: f64 = CHSH_SIGNS.iter().zip(&targets).map(|(s, t)| s * t).sum();
    let s_sigma = var.sqrt();
    let success_rate = tally.successes as f64 / rounds as f64;
    let rate_sigma = (n * (1.0 - n) / rounds as f64).sqrt();

    Ok(SequentialReport {
        seed,
        rounds,
        successes: tally.successes,
        success_rate,
        success_prob: n,
        success_z: z_score(success_rate - n, rate_sigma),
        counts: tally.counts,
        correlators,
        target_correlators: targets,
        s_hat,
        s_sigma,
        s_target,
        s_z: z_score(s_hat - s_target, s_sigma),
    })
}

fn z_score(dev: f64, sigma: f64) -> f64 {
    if sigma > 0.0 {
        dev.abs() / sigma
    } else if dev.abs() < 1e-12 {
        0.0
    } else {
        f64::INFINITY
    }
}
