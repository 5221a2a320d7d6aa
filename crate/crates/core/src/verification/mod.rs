//! A small enumerable hybrid POMDP with exact oracles, and Monte Carlo
//! experiments that check the reward and value estimators against them:
//! pruning bias, unbiasedness of importance-weighted hypothesis sampling,
//! and consistency of sample-frequency weights.

mod exact;
mod experiments;
mod suite;
mod toy;


pub use exact::{backward_induction_value, enumerate_exact, leaf_count, ExactNode, ExactResult, MAX_LEAVES};
pub use experiments::{
    bias_experiment, consistency_experiment, estimate_once, exact_history_reward, BiasReport, ConsistencyPoint,
    ConsistencyReward, Estimator,
};
pub use suite::{lemma_suite, Check, BIASED_Z, UNBIASED_Z};
pub use toy::{
    OpenLoopPolicy, ToyBank, ToyBelief, ToyExpansion, ToyHistory, ToyHypothesis, ToyPomdp, ToyPrior, MAX_BRANCHING,
    MAX_HORIZON, MAX_STATES,
};

/// Path of a fixture shipped with the crate.
pub fn fixture_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}
