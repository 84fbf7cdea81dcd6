//! Executable local hidden variable models.
//!
//! Every model is split into a shared-randomness sampler and two response
//! functions. Alice's response sees only her setting, the shared variable
//! and her own coins, and likewise for Bob, so locality holds by
//! construction.

mod experiment;
mod models;
mod povm;
mod protocol2;
mod sphere;

pub use experiment::{
    random_settings, run_lhv_experiment, LhvModel, Rate, SettingPair, SettingRecord,
    SimulationReport, Statistic, MIN_ROUNDS, Z_THRESHOLD,
};
pub use models::{
    alice_response, bob_response, decompose_observable, erasure_round, protocol1_round, BaseModel,
    DecomposeMode, DichotomicRule, ObservableDecomposition, RoundOutcome, SharedRandomness,
};
pub use povm::{refine_povm, Povm, WeightedProjector};
pub use protocol2::{protocol2_round, Protocol2Model, Protocol2Outcome, Protocol2Party};
pub use sphere::{sample_sphere, sphere_quadrature_correlator, HiddenVariable};
