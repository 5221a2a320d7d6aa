//! Linear-Gaussian conditional beliefs, hybrid (mixture) beliefs and
//! belief-level rewards.
//!
//! Motion model: `x_{t+1} = x_t + a + w`, `w ~ N(0, Q)`. Observation of
//! landmark `k`: `z = l_k - x + v`, `v ~ N(0, R)`. Both are linear, so every
//! conditional update and every observation marginal is exact.

mod gaussian;
mod history;
mod hybrid;
mod world;

pub use gaussian::{square_root, GaussianConditionalBelief, Slot, StatePoint};
pub use history::History;
pub use hybrid::{a_optimality, state_reward_expectation, AOptScope, HybridBelief, Hypothesis, MixtureMoments};
pub use hybrid::top_indices;
pub use world::{ClassId, LandmarkPrior, WorldModel};
