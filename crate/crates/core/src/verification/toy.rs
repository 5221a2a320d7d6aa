use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::association::{AssociationPath, AssociationVector};
use crate::error::{Error, Result};
use crate::planner::HybridDomain;
use crate::sampling::sample_categorical;
use crate::SimRng;

pub const MAX_STATES: usize = 6;
pub const MAX_BRANCHING: usize = 3;
pub const MAX_HORIZON: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyPrior {
    pub weight: f64,
    pub belief: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyHistory {
    /// `a_0..a_t`; the last action is the one the reward is evaluated with.
    pub actions: Vec<usize>,
    /// `z_1..z_t`.
    pub observations: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpenLoopPolicy {
    /// Action distribution per depth.
    pub actions: Vec<Vec<f64>>,
}

impl OpenLoopPolicy {
    /// Policy that plays `actions[d]` at depth `d` with certainty.
    pub fn deterministic(actions: &[usize], n_actions: usize) -> Self {
        OpenLoopPolicy {
            actions: actions
                .iter()
                .map(|&a| (0..n_actions).map(|b| if a == b { 1.0 } else { 0.0 }).collect())
                .collect(),
        }
    }
}

/// Small enumerable hybrid POMDP. Each step the hidden state moves by
/// `transition[a]`, a discrete association value `i` is drawn from
/// `association[s']` and the observation symbol from `observation[i][s']`.
/// A hypothesis is the history of association values; its conditional
/// belief is a categorical distribution over states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyPomdp {
    pub name: String,
    pub states: usize,
    pub observations: usize,
    pub branching: usize,
    pub horizon: usize,
    pub reward: Vec<Vec<f64>>,
    pub transition: Vec<Vec<Vec<f64>>>,
    pub association: Vec<Vec<f64>>,
    pub observation: Vec<Vec<Vec<f64>>>,
    pub prior: Vec<ToyPrior>,
    pub history: Option<ToyHistory>,
    pub policy: Option<OpenLoopPolicy>,
}

/// One weighted hypothesis of the toy hybrid belief.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyHypothesis {
    pub path: AssociationPath,
    pub dist: Vec<f64>,
    pub weight: f64,
}

pub type ToyBelief = Vec<ToyHypothesis>;

fn row_ok(row: &[f64], len: usize) -> bool {
    row.len() == len && row.iter().all(|p| *p >= 0.0) && (row.iter().sum::<f64>() - 1.0).abs() <= 1e-12
}

impl ToyPomdp {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let toy: ToyPomdp = toml::from_str(s).map_err(|e| Error::InvalidConfig(format!("toy fixture: {e}")))?;
        toy.validate()?;
        Ok(toy)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn num_actions(&self) -> usize {
        self.transition.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(format!("toy {}: {m}", self.name)));
        let (s, z, l) = (self.states, self.observations, self.branching);
        if s == 0 || s > MAX_STATES || l == 0 || l > MAX_BRANCHING || self.horizon == 0 || self.horizon > MAX_HORIZON {
            return bad(format!("size limits: states {s}, branching {l}, horizon {}", self.horizon));
        }
        if z == 0 || self.num_actions() == 0 {
            return bad("needs at least one action and one observation".into());
        }
        if self.reward.len() != s || self.reward.iter().any(|r| r.len() != self.num_actions()) {
            return bad("reward must be states x actions".into());
        }
        if self.transition.iter().any(|t| t.len() != s || t.iter().any(|row| !row_ok(row, s))) {
            return bad("transition rows must be distributions over states".into());
        }
        if self.association.len() != s || self.association.iter().any(|row| !row_ok(row, l)) {
            return bad("association rows must be distributions over branches".into());
        }
        if self.observation.len() != l
            || self.observation.iter().any(|o| o.len() != s || o.iter().any(|row| !row_ok(row, z)))
        {
            return bad("observation rows must be distributions over symbols".into());
        }
        if self.prior.is_empty() || self.prior.iter().any(|p| !row_ok(&p.belief, s) || p.weight < 0.0) {
            return bad("prior beliefs must be distributions over states".into());
        }
        if (self.prior.iter().map(|p| p.weight).sum::<f64>() - 1.0).abs() > 1e-12 {
            return bad("prior weights must sum to one".into());
        }
        if let Some(h) = &self.history {
            if h.actions.len() != h.observations.len() + 1
                || h.actions.iter().any(|a| *a >= self.num_actions())
                || h.observations.iter().any(|o| *o >= z)
            {
                return bad("history needs one more action than observations, all in range".into());
            }
        }
        if let Some(p) = &self.policy {
            if p.actions.len() < self.horizon || p.actions.iter().any(|row| !row_ok(row, self.num_actions())) {
                return bad("policy needs an action distribution per depth".into());
            }
        }
        Ok(())
    }

    pub fn prior_belief(&self) -> ToyBelief {
        self.prior
            .iter()
            .enumerate()
            .map(|(j, p)| ToyHypothesis { path: AssociationPath::root(j), dist: p.belief.clone(), weight: p.weight })
            .collect()
    }

    pub fn predict(&self, dist: &[f64], a: usize) -> Vec<f64> {
        let t = &self.transition[a];
        (0..self.states).map(|s2| (0..self.states).map(|s| dist[s] * t[s][s2]).sum()).collect()
    }

    /// Unnormalized `P(z, β = i, s' | hypothesis)` over `s'` given a predicted
    /// state distribution.
    pub fn joint(&self, predicted: &[f64], i: usize, z: usize) -> Vec<f64> {
        (0..self.states).map(|s| self.observation[i][s][z] * self.association[s][i] * predicted[s]).collect()
    }

    /// `ζ^{i|j}` for every branch `i`.
    pub fn zetas(&self, predicted: &[f64], z: usize) -> Vec<f64> {
        (0..self.branching).map(|i| self.joint(predicted, i, z).iter().sum()).collect()
    }

    /// `P(β = i | hypothesis, H^-)` before the observation.
    pub fn association_prior(&self, predicted: &[f64], i: usize) -> f64 {
        (0..self.states).map(|s| self.association[s][i] * predicted[s]).sum()
    }

    pub fn child_posterior(&self, predicted: &[f64], i: usize, z: usize) -> Option<Vec<f64>> {
        let j = self.joint(predicted, i, z);
        let total: f64 = j.iter().sum();
        (total > 0.0).then(|| j.iter().map(|p| p / total).collect())
    }

    /// Exact hybrid-belief update; also returns the evidence `P(z | H^-)`.
    pub fn update(&self, belief: &ToyBelief, a: usize, z: usize) -> Result<(ToyBelief, f64)> {
        let mut out = Vec::new();
        for h in belief {
            let predicted = self.predict(&h.dist, a);
            for i in 0..self.branching {
                let j = self.joint(&predicted, i, z);
                let zeta: f64 = j.iter().sum();
                if zeta > 0.0 && h.weight > 0.0 {
                    out.push(ToyHypothesis {
                        path: h.path.child(AssociationVector(vec![i])),
                        dist: j.iter().map(|p| p / zeta).collect(),
                        weight: h.weight * zeta,
                    });
                }
            }
        }
        let evidence: f64 = out.iter().map(|h| h.weight).sum();
        if !(evidence > 0.0) {
            return Err(Error::TotalInconsistency);
        }
        for h in &mut out {
            h.weight /= evidence;
        }
        Ok((out, evidence))
    }

    /// Keep the `budget` heaviest hypotheses and renormalize.
    pub fn prune(&self, belief: &ToyBelief, budget: usize) -> ToyBelief {
        let keep = crate::belief::top_indices(belief.iter().map(|h| h.weight), budget);
        let mass: f64 = keep.iter().map(|&k| belief[k].weight).sum();
        keep.into_iter()
            .map(|k| ToyHypothesis { weight: belief[k].weight / mass, ..belief[k].clone() })
            .collect()
    }

    /// Hybrid belief after a history of actions and observations, pruned
    /// after every update when `prune` is given. The prior is kept whole.
    pub fn belief_after(&self, actions: &[usize], observations: &[usize], prune: Option<usize>) -> Result<ToyBelief> {
        let mut b = self.prior_belief();
        for (a, z) in actions.iter().zip(observations) {
            b = self.update(&b, *a, *z)?.0;
            if let Some(m) = prune {
                b = self.prune(&b, m);
            }
        }
        Ok(b)
    }

    /// `R_X = Σ ω E_b[r(s, a)]`.
    pub fn state_reward(&self, belief: &ToyBelief, a: usize) -> f64 {
        belief.iter().map(|h| h.weight * self.expected_reward(&h.dist, a)).sum()
    }

    pub fn expected_reward(&self, dist: &[f64], a: usize) -> f64 {
        dist.iter().enumerate().map(|(s, p)| p * self.reward[s][a]).sum()
    }

    pub fn sample_state(&self, dist: &[f64], rng: &mut SimRng) -> usize {
        sample_categorical(dist.iter().copied(), rng).expect("state distribution")
    }

    /// Draw `(β, z)` for one hypothesis after action `a`.
    pub fn sample_branch_and_observation(&self, predicted: &[f64], rng: &mut SimRng) -> (usize, usize) {
        let s = self.sample_state(predicted, rng);
        let i = sample_categorical(self.association[s].iter().copied(), rng).expect("association row");
        let z = sample_categorical(self.observation[i][s].iter().copied(), rng).expect("observation row");
        (i, z)
    }
}

/// Planner-side expansion of one toy hypothesis.
#[derive(Debug, Clone)]
pub struct ToyExpansion {
    predicted: Vec<f64>,
    z: usize,
    zetas: Vec<f64>,
}

/// Per-action λ-weighted reward sums of sampled states.
#[derive(Debug, Clone, Default)]
pub struct ToyBank {
    weight: f64,
    sums: Vec<f64>,
}

impl HybridDomain for ToyPomdp {
    type Belief = Vec<f64>;
    type Obs = usize;
    type Expansion = ToyExpansion;
    type Bank = ToyBank;

    fn num_actions(&self) -> usize {
        self.transition.len()
    }

    fn sample_observation(&self, b: &Vec<f64>, a: usize, rng: &mut SimRng) -> Result<usize> {
        Ok(self.sample_branch_and_observation(&self.predict(b, a), rng).1)
    }

    fn compute_weights(&self, b: &Vec<f64>, a: usize, z: &usize) -> Result<ToyExpansion> {
        let predicted = self.predict(b, a);
        let zetas = self.zetas(&predicted, *z);
        Ok(ToyExpansion { predicted, z: *z, zetas })
    }

    fn weights<'e>(&self, e: &'e ToyExpansion) -> &'e [f64] {
        &e.zetas
    }

    fn posterior(&self, e: &ToyExpansion, i: usize) -> Result<Vec<f64>> {
        self.child_posterior(&e.predicted, i, e.z).ok_or(Error::TotalInconsistency)
    }

    fn bank_add(&self, bank: &mut ToyBank, b: &Vec<f64>, lambda: f64, visits: u64, n_x: usize, rng: &mut SimRng) {
        let n = (n_x as u64 / (visits + 1)).max(1) as usize;
        if bank.sums.is_empty() {
            bank.sums = vec![0.0; self.num_actions()];
        }
        let w = lambda / n as f64;
        for _ in 0..n {
            let s = self.sample_state(b, rng);
            for (a, sum) in bank.sums.iter_mut().enumerate() {
                *sum += w * self.reward[s][a];
            }
        }
        bank.weight += lambda;
    }

    fn bank_reward(&self, bank: &ToyBank, a: usize) -> f64 {
        if bank.weight > 0.0 {
            bank.sums[a] / bank.weight
        } else {
            0.0
        }
    }

    fn belief_reward(&self, belief: &[(&Vec<f64>, f64)], a: usize, _n_x: usize, _rng: &mut SimRng) -> f64 {
        belief.iter().map(|(d, w)| w * self.expected_reward(d, a)).sum()
    }

    fn rollout_step(&self, b: &Vec<f64>, a: usize, rng: &mut SimRng) -> Result<Vec<f64>> {
        let predicted = self.predict(b, a);
        let (i, z) = self.sample_branch_and_observation(&predicted, rng);
        self.child_posterior(&predicted, i, z).ok_or(Error::TotalInconsistency)
    }
}

/// Mean state reward over `n_x` states drawn from `dist`.
pub(crate) fn sample_reward(toy: &ToyPomdp, dist: &[f64], a: usize, n_x: usize, rng: &mut SimRng) -> f64 {
    let n = n_x.max(1);
    (0..n).map(|_| toy.reward[toy.sample_state(dist, rng)][a]).sum::<f64>() / n as f64
}
