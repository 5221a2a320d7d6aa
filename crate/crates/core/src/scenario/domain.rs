use nalgebra::Vector2;

use super::config::ScenarioConfig;
use super::env::observe;
use crate::association::{self, AssociationVector, ObservationArray, ZetaMode};
use crate::belief::{AOptScope, GaussianConditionalBelief, HybridBelief, MixtureMoments, WorldModel};
use crate::error::Result;
use crate::planner::HybridDomain;
use crate::SimRng;

/// Planning model of a scenario. A macro-action is one transition with the
/// accumulated motion noise of its micro-steps, observed once at its end.
#[derive(Debug, Clone)]
pub struct SlamDomain {
    macro_world: WorldModel,
    displacements: Vec<Vector2<f64>>,
    scope: AOptScope,
    goal: Option<Vector2<f64>>,
    mode: ZetaMode,
}

#[derive(Debug, Clone)]
pub struct SlamExpansion {
    predicted: GaussianConditionalBelief,
    obs: ObservationArray,
    assignments: Vec<AssociationVector>,
    zetas: Vec<f64>,
}

/// λ-weighted mixture moments of the conditional beliefs that reached a
/// node, plus the weighted goal distance of their mean poses.
#[derive(Debug, Clone, Default)]
pub struct SlamBank {
    moments: MixtureMoments,
    weight: f64,
    distance: f64,
}

impl SlamDomain {
    pub fn new(config: &ScenarioConfig) -> Result<Self> {
        Ok(SlamDomain {
            macro_world: config.macro_world()?,
            displacements: (0..config.num_actions()).map(|a| config.macro_displacement(a)).collect(),
            scope: config.scope(),
            goal: config.goal(),
            mode: config.inference.zeta.mode(),
        })
    }

    fn distance(&self, b: &GaussianConditionalBelief) -> f64 {
        self.goal.map(|g| (b.pose_mean() - g).norm()).unwrap_or(0.0)
    }

    /// Planning-side reward of a weighted set of conditional beliefs.
    pub fn mixture_reward<'a>(&self, belief: impl IntoIterator<Item = (&'a GaussianConditionalBelief, f64)>) -> f64 {
        let mut bank = SlamBank::default();
        for (b, w) in belief {
            self.add(&mut bank, b, w);
        }
        self.reward_of(&bank)
    }

    fn add(&self, bank: &mut SlamBank, b: &GaussianConditionalBelief, w: f64) {
        bank.moments.add(b, w, self.scope);
        bank.weight += w;
        bank.distance += w * self.distance(b);
    }

    fn reward_of(&self, bank: &SlamBank) -> f64 {
        if !(bank.weight > 0.0) {
            return 0.0;
        }
        -bank.moments.trace() - bank.distance / bank.weight
    }

    pub fn hybrid_root(belief: &HybridBelief) -> Vec<(GaussianConditionalBelief, f64)> {
        belief.hypotheses().iter().map(|h| (h.belief.clone(), h.weight)).collect()
    }
}

impl HybridDomain for SlamDomain {
    type Belief = GaussianConditionalBelief;
    type Obs = ObservationArray;
    type Expansion = SlamExpansion;
    type Bank = SlamBank;

    fn num_actions(&self) -> usize {
        self.displacements.len()
    }

    fn sample_observation(&self, b: &GaussianConditionalBelief, a: usize, rng: &mut SimRng) -> Result<ObservationArray> {
        let predicted = b.predict(&self.displacements[a], &self.macro_world).with_all_landmarks(&self.macro_world);
        let x = predicted.sample(rng);
        let n = self.macro_world.num_landmarks();
        let landmarks: Vec<Vector2<f64>> = (0..n).map(|k| x.landmark(k).expect("all landmarks")).collect();
        Ok(observe(&x.pose(), landmarks.into_iter(), &self.macro_world, rng))
    }

    fn compute_weights(&self, b: &GaussianConditionalBelief, a: usize, z: &ObservationArray) -> Result<SlamExpansion> {
        let predicted = b.predict(&self.displacements[a], &self.macro_world);
        let candidates = association::expand(&predicted, z, &self.macro_world, self.mode)?;
        let (assignments, zetas) = candidates.into_iter().map(|c| (c.assignment, c.zeta)).unzip();
        Ok(SlamExpansion { predicted, obs: z.clone(), assignments, zetas })
    }

    fn weights<'e>(&self, e: &'e SlamExpansion) -> &'e [f64] {
        &e.zetas
    }

    fn posterior(&self, e: &SlamExpansion, i: usize) -> Result<GaussianConditionalBelief> {
        association::posterior(&e.predicted, &e.obs, &e.assignments[i], &self.macro_world)
    }

    fn bank_add(&self, bank: &mut SlamBank, b: &GaussianConditionalBelief, lambda: f64, _visits: u64, _n_x: usize, _rng: &mut SimRng) {
        self.add(bank, b, lambda);
    }

    fn bank_reward(&self, bank: &SlamBank, _a: usize) -> f64 {
        self.reward_of(bank)
    }

    fn belief_reward(&self, belief: &[(&GaussianConditionalBelief, f64)], _a: usize, _n_x: usize, _rng: &mut SimRng) -> f64 {
        self.mixture_reward(belief.iter().map(|(b, w)| (*b, *w)))
    }
}
