use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::models::{run_dichotomic_round, BaseModel, DecomposeMode, DichotomicRule};
use super::protocol2::{protocol2_round, Protocol2Model};
use super::{decompose_observable, Povm};
use crate::bell::born_joint;
use crate::bell::projectors_from_bloch;
use crate::error::{Error, Result};
use crate::qcore::{BipartiteState, CMatrix};
use crate::random::{
    random_dichotomic_observable, random_povm, random_rank_one_povm, random_unit_vector,
};
use crate::rng::{run_chunked, stream, Rng};
use crate::states::{erasure_state_checked, state_q};

/// Smallest run accepted by [`run_lhv_experiment`].
pub const MIN_ROUNDS: u64 = 10_000;
/// z-score threshold for a passing statistic.
pub const Z_THRESHOLD: f64 = 5.0;

const DICHOTOMIC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LhvModel {
    /// Projective qubit measurements on `state_q(q)`.
    Protocol1 { q: f64 },
    /// Dichotomic qutrit measurements on `erasure_state(q)`.
    Erasure { q: f64 },
    /// Qubit POVMs on `rho_G(q)` via Protocol 2 over Protocol 1, `σ = |0><0|`.
    Protocol2RhoG { q: f64 },
    /// Qutrit POVMs on `rho_GM(q)` via Protocol 2 over the erasure model,
    /// `σ = |2><2|`.
    Protocol2RhoGM { q: f64 },
}

impl LhvModel {
    pub fn parse(name: &str, q: f64) -> Result<Self> {
        match name {
            "protocol1" => Ok(LhvModel::Protocol1 { q }),
            "erasure" => Ok(LhvModel::Erasure { q }),
            "protocol2-rhoG" => Ok(LhvModel::Protocol2RhoG { q }),
            "protocol2-rhoGM" => Ok(LhvModel::Protocol2RhoGM { q }),
            other => Err(Error::InvalidParameter(format!(
                "unknown LHV model '{other}'"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LhvModel::Protocol1 { .. } => "protocol1",
            LhvModel::Erasure { .. } => "erasure",
            LhvModel::Protocol2RhoG { .. } => "protocol2-rhoG",
            LhvModel::Protocol2RhoGM { .. } => "protocol2-rhoGM",
        }
    }

    pub fn q(self) -> f64 {
        match self {
            LhvModel::Protocol1 { q }
            | LhvModel::Erasure { q }
            | LhvModel::Protocol2RhoG { q }
            | LhvModel::Protocol2RhoGM { q } => q,
        }
    }

    pub fn dim(self) -> usize {
        match self {
            LhvModel::Protocol1 { .. } | LhvModel::Protocol2RhoG { .. } => 2,
            LhvModel::Erasure { .. } | LhvModel::Protocol2RhoGM { .. } => 3,
        }
    }

    fn base(self) -> Result<BaseModel> {
        match self {
            LhvModel::Protocol1 { q } | LhvModel::Protocol2RhoG { q } => {
                BaseModel::new_protocol1(q)
            }
            LhvModel::Erasure { q } | LhvModel::Protocol2RhoGM { q } => BaseModel::new_erasure(q),
        }
    }

    fn sigma(self) -> CMatrix {
        match self {
            LhvModel::Protocol2RhoGM { .. } | LhvModel::Erasure { .. } => {
                CMatrix::basis_projector(3, 2)
            }
            _ => CMatrix::basis_projector(2, 0),
        }
    }

    /// The state whose Born statistics the model should reproduce.
    pub fn target_state(self) -> Result<BipartiteState> {
        match self {
            LhvModel::Protocol1 { q } => state_q(q),
            LhvModel::Erasure { q } => erasure_state_checked(q),
            LhvModel::Protocol2RhoG { .. } | LhvModel::Protocol2RhoGM { .. } => {
                let sigma = self.sigma();
                Protocol2Model::target_state(self.base()?, &sigma, &sigma)
            }
        }
    }

    fn is_protocol2(self) -> bool {
        matches!(
            self,
            LhvModel::Protocol2RhoG { .. } | LhvModel::Protocol2RhoGM { .. }
        )
    }
}

impl fmt::Display for LhvModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LhvModel {
    type Err = Error;

    /// Parses the model name with the default `q = 1/2`.
    fn from_str(s: &str) -> Result<Self> {
        LhvModel::parse(s, 0.5)
    }
}

/// Alice's and Bob's measurement for one block of rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct SettingPair {
    pub alice: Povm,
    pub bob: Povm,
}

enum Compiled {
    Dichotomic {
        base: BaseModel,
        rule_a: DichotomicRule,
        rule_b: DichotomicRule,
    },
    Protocol2(Box<Protocol2Model>),
}

fn strict_observable(p: &Povm, d: usize, who: &str) -> Result<CMatrix> {
    if p.dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "{who} measurement acts on C^{}, model needs C^{d}",
            p.dim()
        )));
    }
    let o = p.dichotomic_observable()?;
    let dev = o.matmul(&o).max_abs_diff(&CMatrix::identity(d));
    if dev > DICHOTOMIC_TOL {
        return Err(Error::NotDichotomic(dev));
    }
    Ok(o)
}

fn compile(model: LhvModel, setting: &SettingPair) -> Result<Compiled> {
    let base = model.base()?;
    let d = model.dim();
    match model {
        LhvModel::Protocol1 { .. } => {
            let oa = strict_observable(&setting.alice, d, "Alice")?;
            let ob = strict_observable(&setting.bob, d, "Bob")?;
            Ok(Compiled::Dichotomic {
                base,
                rule_a: base.rule(&oa),
                rule_b: base.rule(&ob),
            })
        }
        LhvModel::Erasure { .. } => {
            let oa = strict_observable(&setting.alice, d, "Alice")?;
            let ob = strict_observable(&setting.bob, d, "Bob")?;
            let da = decompose_observable(&oa, d, DecomposeMode::Strict)?;
            let db = decompose_observable(&ob, d, DecomposeMode::Strict)?;
            Ok(Compiled::Dichotomic {
                base,
                rule_a: (&da).into(),
                rule_b: (&db).into(),
            })
        }
        LhvModel::Protocol2RhoG { .. } | LhvModel::Protocol2RhoGM { .. } => {
            let sigma = model.sigma();
            Ok(Compiled::Protocol2(Box::new(Protocol2Model::new(
                &setting.alice,
                &setting.bob,
                base,
                &sigma,
                &sigma,
            )?)))
        }
    }
}

#[derive(Default)]
struct Tally {
    cells: Vec<u64>,
    correlated: u64,
    accepted: u64,
    direct_a: u64,
    direct_b: u64,
}

impl Tally {
    fn new(cells: usize) -> Self {
        Tally {
            cells: vec![0; cells],
            ..Tally::default()
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        if self.cells.is_empty() {
            return other;
        }
        for (a, b) in self.cells.iter_mut().zip(&other.cells) {
            *a += b;
        }
        self.correlated += other.correlated;
        self.accepted += other.accepted;
        self.direct_a += other.direct_a;
        self.direct_b += other.direct_b;
        self
    }
}

fn simulate_chunk(compiled: &Compiled, nb: usize, cells: usize, rng: &mut Rng, len: u64) -> Tally {
    let mut t = Tally::new(cells);
    match compiled {
        Compiled::Dichotomic {
            base,
            rule_a,
            rule_b,
        } => {
            for _ in 0..len {
                let r = run_dichotomic_round(*base, rule_a, rule_b, rng);
                // outcome 0 is +1
                let a = usize::from(r.a < 0);
                let b = usize::from(r.b < 0);
                t.cells[a * nb + b] += 1;
                if let Some(acc) = r.accepted {
                    t.correlated += 1;
                    t.accepted += u64::from(acc);
                }
            }
        }
        Compiled::Protocol2(model) => {
            for _ in 0..len {
                let r = protocol2_round(model, rng);
                t.cells[r.a * nb + r.b] += 1;
                t.direct_a += u64::from(r.alice_direct);
                t.direct_b += u64::from(r.bob_direct);
            }
        }
    }
    t
}

/// One compared quantity: empirical value against its Born-rule target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Statistic {
    pub setting: usize,
    pub name: String,
    pub value: f64,
    pub target: f64,
    pub sigma: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rate {
    pub value: f64,
    pub target: f64,
    pub sigma: f64,
    pub z: f64,
    pub trials: u64,
}

/// POVM pair as written to reports and read from settings files: one list of
/// row-major `[re, im]` entries per effect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingRecord {
    pub alice: Vec<Vec<[f64; 2]>>,
    pub bob: Vec<Vec<[f64; 2]>>,
}

impl SettingRecord {
    fn from_pair(p: &SettingPair) -> Self {
        let enc = |povm: &Povm| povm.elements().iter().map(CMatrix::to_pairs).collect();
        SettingRecord {
            alice: enc(&p.alice),
            bob: enc(&p.bob),
        }
    }

    pub fn to_pair(&self) -> Result<SettingPair> {
        Ok(SettingPair {
            alice: decode_povm(&self.alice)?,
            bob: decode_povm(&self.bob)?,
        })
    }
}

fn decode_povm(effects: &[Vec<[f64; 2]>]) -> Result<Povm> {
    let elements = effects
        .iter()
        .map(|e| {
            let n = (e.len() as f64).sqrt().round() as usize;
            if n * n != e.len() || n == 0 {
                return Err(Error::DimensionMismatch(format!(
                    "{} entries do not form a square matrix",
                    e.len()
                )));
            }
            CMatrix::from_pairs(n, e)
        })
        .collect::<Result<Vec<_>>>()?;
    Povm::new(elements)
}

/// Substream reserved for drawing random settings.
const SETTINGS_STREAM: u64 = u64::MAX;

fn qubit_block_observable<R: rand::Rng + ?Sized>(rng: &mut R) -> CMatrix {
    let x = CMatrix::bloch_observable(random_unit_vector(rng));
    let flag = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let mut o = CMatrix::zeros(3, 3);
    for i in 0..2 {
        for j in 0..2 {
            o[(i, j)] = x[(i, j)];
        }
    }
    o[(2, 2)] = flag.into();
    o
}

/// `k` random setting pairs suited to `model`, drawn from a stream of `seed`
/// that the simulation itself never uses.
///
/// - `protocol1`: projective qubit measurements along uniform Bloch vectors.
/// - `erasure`: Haar-random `±1` qutrit observables for Alice; for Bob,
///   alternately a qubit observable padded by `±1` on `|2>` and a random
///   qutrit observable, whose qubit block is not projective.
/// - `protocol2-rhoG`: qubit POVMs with 2 to 4 rank-one effects.
/// - `protocol2-rhoGM`: qutrit POVMs, alternately rank-one (3 to 5 effects)
///   and full-rank (2 to 4 effects).
pub fn random_settings(model: LhvModel, k: usize, seed: u64) -> Vec<SettingPair> {
    let mut rng = stream(seed, SETTINGS_STREAM);
    let rng = &mut rng;
    (0..k)
        .map(|i| match model {
            LhvModel::Protocol1 { .. } => SettingPair {
                alice: projectors_from_bloch(random_unit_vector(rng)).expect("unit vector"),
                bob: projectors_from_bloch(random_unit_vector(rng)).expect("unit vector"),
            },
            LhvModel::Erasure { .. } => {
                let rank = rng.random_range(1..=2);
                let oa = random_dichotomic_observable(3, rank, rng);
                let ob = if i % 2 == 0 {
                    qubit_block_observable(rng)
                } else {
                    let rank = rng.random_range(1..=2);
                    random_dichotomic_observable(3, rank, rng)
                };
                SettingPair {
                    alice: Povm::from_observable(&oa).expect("dichotomic observable"),
                    bob: Povm::from_observable(&ob).expect("dichotomic observable"),
                }
            }
            LhvModel::Protocol2RhoG { .. } => {
                let na = rng.random_range(2..=4);
                let nb = rng.random_range(2..=4);
                SettingPair {
                    alice: random_rank_one_povm(2, na, rng),
                    bob: random_rank_one_povm(2, nb, rng),
                }
            }
            LhvModel::Protocol2RhoGM { .. } => {
                let draw = |rng: &mut Rng| {
                    if i % 2 == 0 {
                        let n = rng.random_range(3..=5);
                        random_rank_one_povm(3, n, rng)
                    } else {
                        let n = rng.random_range(2..=4);
                        random_povm(3, n, rng)
                    }
                };
                let alice = draw(rng);
                let bob = draw(rng);
                SettingPair { alice, bob }
            }
        })
        .collect()
}

/// Empirical LHV statistics next to the Born-rule predictions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub model: String,
    pub q: f64,
    pub seed: u64,
    /// Rounds per setting pair.
    pub rounds: u64,
    pub settings: Vec<SettingRecord>,
    /// Empirical joint distributions, row-major in Alice's outcome.
    pub empirical: Vec<Vec<f64>>,
    pub target: Vec<Vec<f64>>,
    pub statistics: Vec<Statistic>,
    pub max_abs_dev: f64,
    pub max_z: f64,
    pub rates: BTreeMap<String, Rate>,
}

impl SimulationReport {
    pub fn passed(&self) -> bool {
        self.max_z <= Z_THRESHOLD
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Binomial z-score. The variance is floored at one count so that a target of
/// exactly zero met by zero observations scores 0, and a single stray count
/// scores 1.
fn proportion_z(value: f64, target: f64, n: f64) -> (f64, f64) {
    let var = (target * (1.0 - target)).max(1.0 / n);
    let sigma = (var / n).sqrt();
    (sigma, (value - target).abs() / sigma)
}

/// `±1` mean with binomial standard error.
fn mean_z(value: f64, target: f64, n: f64) -> (f64, f64) {
    let var = (1.0 - target * target).max(1.0 / n);
    let sigma = (var / n).sqrt();
    (sigma, (value - target).abs() / sigma)
}

fn rate(hits: u64, trials: u64, target: f64) -> Rate {
    let n = trials.max(1) as f64;
    let value = hits as f64 / n;
    let (sigma, z) = proportion_z(value, target, n);
    Rate {
        value,
        target,
        sigma,
        z,
        trials,
    }
}

/// Runs `rounds` rounds of `model` for every setting pair and compares the
/// empirical statistics with the Born rule on the model's target state.
///
/// Setting `k` uses substreams `k·2³² + chunk` of `seed`, so reports do not
/// depend on the number of worker threads. Locality is structural: the
/// response functions receive only their own setting, the shared variable,
/// and private randomness.
pub fn run_lhv_experiment(
    model: LhvModel,
    settings: &[SettingPair],
    rounds: u64,
    seed: u64,
) -> Result<SimulationReport> {
    if rounds < MIN_ROUNDS {
        return Err(Error::InvalidParameter(format!(
            "at least {MIN_ROUNDS} rounds required, got {rounds}"
        )));
    }
    if settings.is_empty() {
        return Err(Error::InvalidParameter("no measurement settings".into()));
    }
    let target_state = model.target_state()?;
    let n = rounds as f64;

    let mut empirical = Vec::new();
    let mut targets = Vec::new();
    let mut statistics = Vec::new();
    let mut max_abs_dev: f64 = 0.0;
    let mut totals = Tally::default();

    for (k, setting) in settings.iter().enumerate() {
        let compiled = compile(model, setting)?;
        let target = born_joint(&target_state, &setting.alice, &setting.bob)?;
        let (na, nb) = (target.outcomes_a, target.outcomes_b);
        let cells = na * nb;
        let tally = run_chunked(
            seed,
            (k as u64) << 32,
            rounds,
            |rng, len| simulate_chunk(&compiled, nb, cells, rng, len),
            Tally::merge,
        );

        let probs: Vec<f64> = tally.cells.iter().map(|&c| c as f64 / n).collect();
        let mut push = |name: String, value: f64, target: f64, (sigma, z): (f64, f64)| {
            statistics.push(Statistic {
                setting: k,
                name,
                value,
                target,
                sigma,
                z,
            });
        };
        for a in 0..na {
            for b in 0..nb {
                let (v, t) = (probs[a * nb + b], target.get(a, b));
                max_abs_dev = max_abs_dev.max((v - t).abs());
                push(format!("p({a},{b})"), v, t, proportion_z(v, t, n));
            }
        }
        let emp = crate::bell::JointDistribution {
            outcomes_a: na,
            outcomes_b: nb,
            probs: probs.clone(),
        };
        if na == 2 && nb == 2 {
            let ma = |j: &crate::bell::JointDistribution| {
                let m = j.marginal_a();
                m[0] - m[1]
            };
            let mb = |j: &crate::bell::JointDistribution| {
                let m = j.marginal_b();
                m[0] - m[1]
            };
            let (v, t) = (ma(&emp), ma(&target));
            push("<a>".into(), v, t, mean_z(v, t, n));
            let (v, t) = (mb(&emp), mb(&target));
            push("<b>".into(), v, t, mean_z(v, t, n));
            let (v, t) = (emp.correlator()?, target.correlator()?);
            push("<ab>".into(), v, t, mean_z(v, t, n));
        } else {
            for (a, (v, t)) in emp
                .marginal_a()
                .into_iter()
                .zip(target.marginal_a())
                .enumerate()
            {
                push(format!("pA({a})"), v, t, proportion_z(v, t, n));
            }
            for (b, (v, t)) in emp
                .marginal_b()
                .into_iter()
                .zip(target.marginal_b())
                .enumerate()
            {
                push(format!("pB({b})"), v, t, proportion_z(v, t, n));
            }
        }
        empirical.push(probs);
        targets.push(target.probs);
        totals.correlated += tally.correlated;
        totals.accepted += tally.accepted;
        totals.direct_a += tally.direct_a;
        totals.direct_b += tally.direct_b;
    }

    let total_rounds = rounds * settings.len() as u64;
    let mut rates = BTreeMap::new();
    if model.is_protocol2() {
        let inv_d = 1.0 / model.dim() as f64;
        rates.insert(
            "direct_output_alice".into(),
            rate(totals.direct_a, total_rounds, inv_d),
        );
        rates.insert(
            "direct_output_bob".into(),
            rate(totals.direct_b, total_rounds, inv_d),
        );
    } else {
        let corr_target = (2.0 * model.q()).min(1.0);
        rates.insert(
            "correlated_branch".into(),
            rate(totals.correlated, total_rounds, corr_target),
        );
        if totals.correlated > 0 {
            rates.insert(
                "acceptance".into(),
                rate(totals.accepted, totals.correlated, 0.5),
            );
        }
    }

    let max_z = statistics
        .iter()
        .map(|s| s.z)
        .chain(rates.values().map(|r| r.z))
        .fold(0.0, f64::max);

    Ok(SimulationReport {
        model: model.name().into(),
        q: model.q(),
        seed,
        rounds,
        settings: settings.iter().map(SettingRecord::from_pair).collect(),
        empirical,
        target: targets,
        statistics,
        max_abs_dev,
        max_z,
        rates,
    })
}
