//! Hybrid-belief POMDP planning under ambiguous data association.
//!
//! The crate keeps a belief over continuous states (agent pose and landmark
//! map, linear-Gaussian per hypothesis) jointly with a discrete distribution
//! over data-association histories, and plans over it with four solvers:
//!
//! - [`planner::hbmcp`]: MCTS that samples one hypothesis per simulation and
//!   grows the hypotheses tree along the belief tree.
//! - [`planner::belief_mcts`]: belief-state MCTS carrying a full, pruned
//!   hybrid belief in every node (also used for the single-hypothesis
//!   particle-filter-tree baseline).
//! - [`planner::dabsp`]: Monte Carlo open-loop trajectory evaluation over the
//!   pruned hybrid belief.
//!
//! [`verification`] contains a small enumerable hybrid POMDP with exact
//! oracles that the estimators are checked against.

pub mod association;
pub mod belief;
pub mod cli;
pub mod error;
pub mod planner;
pub mod sampling;
pub mod scenario;
pub mod stats;
pub mod verification;

pub use error::{Error, Result};

/// Seeded generator used throughout; one per search thread or trial.
pub type SimRng = rand_chacha::ChaCha8Rng;

/// Build the crate's RNG from a 64-bit seed.
pub fn rng_from_seed(seed: u64) -> SimRng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

/// Independent generator for sub-task `stream` (a run, a trial, a step)
/// under a common seed.
pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = rng_from_seed(seed);
    rng.set_stream(stream);
    rng
}
