use rand::Rng;

use super::domain::HybridDomain;
use crate::error::Result;
use crate::SimRng;

/// Uniform-random-action rollout of one hypothesis to depth 0. Returns the
/// accumulated reward and the number of posteriors it computed. The belief
/// is not advanced after the last rewarded step.
pub fn rollout<D: HybridDomain>(
    domain: &D,
    b: &D::Belief,
    depth: usize,
    n_x: usize,
    rng: &mut SimRng,
) -> Result<(f64, u64)> {
    let mut total = 0.0;
    let mut posteriors = 0;
    let mut current = b.clone();
    for d in (1..=depth).rev() {
        let a = rng.random_range(0..domain.num_actions());
        total += domain.belief_reward(&[(&current, 1.0)], a, n_x, rng);
        if d > 1 {
            current = domain.rollout_step(&current, a, rng)?;
            posteriors += 1;
        }
    }
    Ok((total, posteriors))
}
