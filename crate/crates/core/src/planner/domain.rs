use crate::error::Result;
use crate::sampling::sample_categorical;
use crate::SimRng;

/// The model a solver plans over: a conditional belief per hypothesis,
/// observation sampling, the per-hypothesis association expansion
/// (`ComputeWeights`) and the conditional update `Ψ`.
///
/// Actions are indices `0..num_actions()`.
pub trait HybridDomain {
    /// Conditional belief of one hypothesis.
    type Belief: Clone;
    type Obs: Clone + PartialEq;
    /// Result of expanding one hypothesis under `(a, z)`: evidence of each
    /// child plus whatever `posterior` needs.
    type Expansion;
    /// Accumulated state samples of a belief node (`B(h)`).
    type Bank: Clone + Default;

    fn num_actions(&self) -> usize;

    /// Draw an observation from the predictive distribution of `b` under `a`.
    fn sample_observation(&self, b: &Self::Belief, a: usize, rng: &mut SimRng) -> Result<Self::Obs>;

    fn compute_weights(&self, b: &Self::Belief, a: usize, z: &Self::Obs) -> Result<Self::Expansion>;

    /// Unnormalized child evidence `ζ^{i|j}` of an expansion.
    fn weights<'e>(&self, e: &'e Self::Expansion) -> &'e [f64];

    /// Conditional posterior of child `i`.
    fn posterior(&self, e: &Self::Expansion, i: usize) -> Result<Self::Belief>;

    /// Add samples of `b` (path importance weight `lambda`) to a node bank
    /// that has seen `visits` earlier visits.
    fn bank_add(&self, bank: &mut Self::Bank, b: &Self::Belief, lambda: f64, visits: u64, n_x: usize, rng: &mut SimRng);

    /// Reward estimate from the accumulated bank.
    fn bank_reward(&self, bank: &Self::Bank, a: usize) -> f64;

    /// Reward of a weighted set of hypotheses.
    fn belief_reward(&self, belief: &[(&Self::Belief, f64)], a: usize, n_x: usize, rng: &mut SimRng) -> f64;

    /// One simulated step of a single hypothesis, used by rollouts. The
    /// default samples an observation, expands and draws one child by `ζ`.
    fn rollout_step(&self, b: &Self::Belief, a: usize, rng: &mut SimRng) -> Result<Self::Belief> {
        let z = self.sample_observation(b, a, rng)?;
        let e = self.compute_weights(b, a, &z)?;
        let i = sample_categorical(self.weights(&e).iter().copied(), rng)?;
        self.posterior(&e, i)
    }
}
