use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::exact::enumerate_exact;
use super::toy::{sample_reward, OpenLoopPolicy, ToyBelief, ToyHistory, ToyPomdp};
use crate::association::{AssociationPath, AssociationVector};
use crate::error::{Error, Result};
use crate::sampling::{
    frequency_weights, lambda_update, propose_child, sample_categorical, sir_resample_with, ImportanceWeightedPath,
    ResampleScheme,
};
use crate::{stats, stream_rng, SimRng};

/// Reward or value estimator under test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// State samples from the hybrid belief pruned to `budget` hypotheses
    /// after every update.
    Pruned { budget: usize, n_x: usize },
    /// Hypothesis paths from the uniform proposal with exact importance
    /// weights, resampled every step.
    HbmcpSir { n_paths: usize, n_x: usize, scheme: ResampleScheme },
    /// Uniform-proposal paths with weights normalized by their own sum.
    SelfNormalized { n_paths: usize, n_x: usize },
    /// Value of the open-loop policy from hypothesis-then-observation
    /// trajectory samples.
    HbmcpValue { n_paths: usize, n_x: usize },
}

impl Estimator {
    pub fn name(&self) -> &'static str {
        match self {
            Estimator::Pruned { .. } => "pruned",
            Estimator::HbmcpSir { .. } => "hbmcp_sir",
            Estimator::SelfNormalized { .. } => "self_normalized",
            Estimator::HbmcpValue { .. } => "hbmcp_value",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub estimator: String,
    pub runs: usize,
    pub mean: f64,
    pub std_error: f64,
    pub exact: f64,
    pub z_score: f64,
    /// Expected deviation of the pruned estimator, computed exactly.
    pub analytic_gap: Option<f64>,
    /// Exact posterior mass of the hypotheses removed by pruning.
    pub pruned_mass: Option<f64>,
}

impl BiasReport {
    pub const CSV_HEADER: &'static str = "estimator,runs,mean,std_error,exact,z_score,analytic_gap,pruned_mass";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.12}")).unwrap_or_default();
        format!(
            "{},{},{:.12},{:.12},{:.12},{:.6},{},{}",
            self.estimator,
            self.runs,
            self.mean,
            self.std_error,
            self.exact,
            self.z_score,
            opt(self.analytic_gap),
            opt(self.pruned_mass)
        )
    }
}

fn history(toy: &ToyPomdp) -> Result<&ToyHistory> {
    let h = toy.history.as_ref().ok_or_else(|| Error::InvalidConfig("toy has no [history]".into()))?;
    if h.actions.len() > toy.horizon {
        return Err(Error::InvalidConfig("history longer than the toy horizon".into()));
    }
    Ok(h)
}

/// Enumerated `R_X` at the toy's fixed history.
pub fn exact_history_reward(toy: &ToyPomdp) -> Result<f64> {
    let h = history(toy)?;
    let mut actions = h.actions.clone();
    actions.resize(toy.horizon, 0);
    let exact = enumerate_exact(toy, &OpenLoopPolicy::deterministic(&actions, toy.num_actions()))?;
    exact
        .node(&h.actions, &h.observations)
        .map(|n| n.reward)
        .ok_or_else(|| Error::InvalidConfig("history has zero probability".into()))
}

fn policy(toy: &ToyPomdp) -> Result<&OpenLoopPolicy> {
    toy.policy.as_ref().ok_or_else(|| Error::InvalidConfig("toy has no [policy]".into()))
}

/// Sampled hypothesis path with its conditional state belief.
type Particle = (ImportanceWeightedPath, Vec<f64>);

/// Propagate `n` hypothesis paths along the history with the uniform child
/// proposal. `eta` holds the exact per-step normalizers (`None` leaves the
/// weights unnormalized); `scheme` resamples after every step.
fn propagate_paths(
    toy: &ToyPomdp,
    h: &ToyHistory,
    n: usize,
    eta: Option<&[f64]>,
    scheme: Option<ResampleScheme>,
    rng: &mut SimRng,
) -> Result<Vec<Particle>> {
    let weights: Vec<f64> = toy.prior.iter().map(|p| p.weight).collect();
    let mut particles: Vec<Particle> = (0..n)
        .map(|_| {
            let j = sample_categorical(weights.iter().copied(), rng).expect("prior weights");
            (ImportanceWeightedPath::root(AssociationPath::root(j), n), toy.prior[j].belief.clone())
        })
        .collect();
    let feasible: Vec<AssociationVector> = (0..toy.branching).map(|i| AssociationVector(vec![i])).collect();
    for (t, (a, z)) in h.actions.iter().zip(&h.observations).enumerate() {
        for (p, dist) in particles.iter_mut() {
            let predicted = toy.predict(dist, *a);
            let (v, _) = propose_child(&p.path, &feasible, rng)?;
            let i = v.0[0];
            let zeta = toy.zetas(&predicted, *z)[i];
            p.lambda = lambda_update(p.lambda, zeta, feasible.len(), eta.map(|e| e[t]));
            if let Some(post) = toy.child_posterior(&predicted, i, *z) {
                *dist = post;
            }
            p.path = p.path.child(v);
        }
        if let Some(s) = scheme {
            particles = sir_resample_with(&particles, s, rng)?;
        }
    }
    Ok(particles)
}

/// `η_t = 1 / P(z_t | H_t^-)` along the history.
fn exact_normalizers(toy: &ToyPomdp, h: &ToyHistory) -> Result<Vec<f64>> {
    let mut b = toy.prior_belief();
    let mut eta = Vec::new();
    for (a, z) in h.actions.iter().zip(&h.observations) {
        let (next, evidence) = toy.update(&b, *a, *z)?;
        eta.push(1.0 / evidence);
        b = next;
    }
    Ok(eta)
}

fn sample_mixture_reward(toy: &ToyPomdp, belief: &ToyBelief, a: usize, n_x: usize, rng: &mut SimRng) -> f64 {
    let n = n_x.max(1);
    (0..n)
        .map(|_| {
            let k = sample_categorical(belief.iter().map(|h| h.weight), rng).expect("pruned weights");
            toy.reward[toy.sample_state(&belief[k].dist, rng)][a]
        })
        .sum::<f64>()
        / n as f64
}

/// One draw of the estimator.
pub fn estimate_once(toy: &ToyPomdp, estimator: Estimator, rng: &mut SimRng) -> Result<f64> {
    match estimator {
        Estimator::Pruned { budget, n_x } => {
            let h = history(toy)?;
            let b = toy.belief_after(&h.actions[..h.observations.len()], &h.observations, Some(budget))?;
            Ok(sample_mixture_reward(toy, &b, *h.actions.last().expect("action"), n_x, rng))
        }
        Estimator::HbmcpSir { n_paths, n_x, scheme } => {
            let h = history(toy)?;
            let eta = exact_normalizers(toy, h)?;
            let a = *h.actions.last().expect("action");
            let particles = propagate_paths(toy, h, n_paths, Some(&eta), Some(scheme), rng)?;
            Ok(particles.iter().map(|(p, d)| p.lambda * sample_reward(toy, d, a, n_x, rng)).sum::<f64>() / n_paths as f64)
        }
        Estimator::SelfNormalized { n_paths, n_x } => {
            let h = history(toy)?;
            let a = *h.actions.last().expect("action");
            let particles = propagate_paths(toy, h, n_paths, None, None, rng)?;
            let total: f64 = particles.iter().map(|p| p.0.lambda).sum();
            if !(total > 0.0) {
                return Err(Error::ZeroWeights);
            }
            Ok(particles.iter().map(|(p, d)| p.lambda * sample_reward(toy, d, a, n_x, rng)).sum::<f64>() / total)
        }
        Estimator::HbmcpValue { n_paths, n_x } => value_once(toy, policy(toy)?, n_paths, n_x, rng),
    }
}

/// Value estimate: per path, the root hypothesis is drawn from the prior,
/// then each step draws the next association value uniformly, weights it
/// by its prior probability over the proposal, draws the observation from
/// that hypothesis and adds the weighted sampled reward.
fn value_once(toy: &ToyPomdp, policy: &OpenLoopPolicy, n_paths: usize, n_x: usize, rng: &mut SimRng) -> Result<f64> {
    let actions: Vec<usize> = (0..toy.horizon)
        .map(|d| sample_categorical(policy.actions[d].iter().copied(), rng))
        .collect::<Result<_>>()?;
    let feasible: Vec<AssociationVector> = (0..toy.branching).map(|i| AssociationVector(vec![i])).collect();
    let weights: Vec<f64> = toy.prior.iter().map(|p| p.weight).collect();
    let mut total = 0.0;
    for _ in 0..n_paths {
        let j = sample_categorical(weights.iter().copied(), rng)?;
        let mut path = ImportanceWeightedPath::root(AssociationPath::root(j), n_paths);
        let mut dist = toy.prior[j].belief.clone();
        let mut ret = path.lambda * sample_reward(toy, &dist, actions[0], n_x, rng);
        for d in 1..toy.horizon {
            let predicted = toy.predict(&dist, actions[d - 1]);
            let (v, q) = propose_child(&path.path, &feasible, rng)?;
            let i = v.0[0];
            let p_branch = toy.association_prior(&predicted, i);
            path.lambda *= p_branch / q;
            if path.lambda == 0.0 {
                break;
            }
            let z_weights: Vec<f64> =
                (0..toy.observations).map(|z| toy.joint(&predicted, i, z).iter().sum()).collect();
            let z = sample_categorical(z_weights.iter().copied(), rng)?;
            dist = toy.child_posterior(&predicted, i, z).ok_or(Error::TotalInconsistency)?;
            path.path = path.path.child(v);
            ret += path.lambda * sample_reward(toy, &dist, actions[d], n_x, rng);
        }
        total += ret;
    }
    Ok(total / n_paths as f64)
}

/// Monte Carlo mean and standard error of an estimator over `runs`
/// independent seeded runs, against the enumerated value.
pub fn bias_experiment(toy: &ToyPomdp, estimator: Estimator, runs: usize, seed: u64) -> Result<BiasReport> {
    let draws: Vec<f64> = (0..runs as u64)
        .into_par_iter()
        .map(|r| estimate_once(toy, estimator, &mut stream_rng(seed, r)))
        .collect::<Result<_>>()?;
    let (exact, analytic_gap, pruned_mass) = match estimator {
        Estimator::HbmcpValue { .. } => (enumerate_exact(toy, policy(toy)?)?.value, None, None),
        Estimator::Pruned { budget, .. } => {
            let h = history(toy)?;
            let a = *h.actions.last().expect("action");
            let exact = exact_history_reward(toy)?;
            let acts = &h.actions[..h.observations.len()];
            let pruned = toy.belief_after(acts, &h.observations, Some(budget))?;
            let full = toy.belief_after(acts, &h.observations, None)?;
            let kept: f64 = full.iter().filter(|f| pruned.iter().any(|p| p.path == f.path)).map(|f| f.weight).sum();
            (exact, Some(toy.state_reward(&pruned, a) - exact), Some(1.0 - kept))
        }
        _ => (exact_history_reward(toy)?, None, None),
    };
    let mean = stats::mean(&draws);
    let std_error = stats::std_error(&draws);
    Ok(BiasReport {
        estimator: estimator.name().to_string(),
        runs,
        mean,
        std_error,
        exact,
        z_score: (mean - exact) / std_error,
        analytic_gap,
        pruned_mass,
    })
}

/// Belief-dependent reward for the consistency check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsistencyReward {
    Constant(f64),
    /// Entropy of the hypothesis weights.
    WeightEntropy,
    /// Variance of the state reward under the mixture, estimated from one
    /// state particle per sampled hypothesis.
    ParticleVariance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyPoint {
    pub n: usize,
    pub rmse: f64,
    pub mean: f64,
    pub exact: f64,
}

impl ConsistencyPoint {
    pub const CSV_HEADER: &'static str = "n,rmse,mean,exact";

    pub fn csv_row(&self) -> String {
        format!("{},{:.12},{:.12},{:.12}", self.n, self.rmse, self.mean, self.exact)
    }
}

fn exact_consistency_target(toy: &ToyPomdp, reward: ConsistencyReward) -> Result<f64> {
    let h = history(toy)?;
    let a = *h.actions.last().expect("action");
    let b = toy.belief_after(&h.actions[..h.observations.len()], &h.observations, None)?;
    Ok(match reward {
        ConsistencyReward::Constant(c) => c,
        ConsistencyReward::WeightEntropy => stats::entropy(b.iter().map(|x| x.weight)),
        ConsistencyReward::ParticleVariance => {
            let m: f64 = b.iter().map(|x| x.weight * toy.expected_reward(&x.dist, a)).sum();
            let m2: f64 = b
                .iter()
                .map(|x| x.weight * x.dist.iter().enumerate().map(|(s, p)| p * toy.reward[s][a].powi(2)).sum::<f64>())
                .sum();
            m2 - m * m
        }
    })
}

/// Plug sample-frequency weights (from `n` resampled hypothesis paths) into
/// a belief-dependent reward and report the RMSE against the exact reward
/// for every `n` in `sizes`.
pub fn consistency_experiment(
    toy: &ToyPomdp,
    reward: ConsistencyReward,
    sizes: &[usize],
    runs: usize,
    seed: u64,
) -> Result<Vec<ConsistencyPoint>> {
    let h = history(toy)?;
    let a = *h.actions.last().expect("action");
    let eta = exact_normalizers(toy, h)?;
    let exact = exact_consistency_target(toy, reward)?;
    sizes
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let estimates: Vec<f64> = (0..runs as u64)
                .into_par_iter()
                .map(|r| {
                    let mut rng = stream_rng(seed, (k as u64) << 32 | r);
                    let particles = propagate_paths(toy, h, n, Some(&eta), Some(ResampleScheme::Multinomial), &mut rng)?;
                    Ok(match reward {
                        ConsistencyReward::Constant(c) => c,
                        ConsistencyReward::WeightEntropy => {
                            stats::entropy(frequency_weights(particles.iter().map(|p| &p.0.path)).into_values())
                        }
                        ConsistencyReward::ParticleVariance => {
                            let xs: Vec<f64> = particles
                                .iter()
                                .map(|(_, d)| toy.reward[toy.sample_state(d, &mut rng)][a])
                                .collect();
                            let m = stats::mean(&xs);
                            xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64
                        }
                    })
                })
                .collect::<Result<_>>()?;
            let rmse = (estimates.iter().map(|e| (e - exact).powi(2)).sum::<f64>() / runs as f64).sqrt();
            Ok(ConsistencyPoint { n, rmse, mean: stats::mean(&estimates), exact })
        })
        .collect()
}
