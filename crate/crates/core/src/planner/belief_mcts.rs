//! Belief-state MCTS over a full hybrid belief per node. Every expansion
//! computes the posterior of all hypotheses, prunes it to a fixed budget and
//! updates each survivor. With a budget of one and a single root hypothesis
//! this is a particle-filter-tree search on a unimodal belief.

use super::config::PlannerConfig;
use super::domain::HybridDomain;
use super::hbmcp::run_budget;
use super::rollout::rollout;
use super::stats::{ReplayEntry, SearchStats};
use super::tree::{best_action, pick_existing, ucb_select, widening_open, ActionStats};
use super::PlanOutcome;
use crate::belief::top_indices;
use crate::error::{Error, Result};
use crate::sampling::sample_categorical;
use crate::SimRng;

/// Weighted hypotheses of one belief node.
pub type WeightedBelief<B> = Vec<(B, f64)>;

/// Sample an observation from the hybrid belief, compute all child weights
/// with the global normalizer, keep the `budget` heaviest and update them.
/// Returns the pruned posterior and the number of posteriors computed.
pub fn pruned_posterior<D: HybridDomain>(
    domain: &D,
    belief: &[(D::Belief, f64)],
    a: usize,
    budget: usize,
    rng: &mut SimRng,
) -> Result<(WeightedBelief<D::Belief>, u64)> {
    let j = sample_categorical(belief.iter().map(|h| h.1), rng)?;
    let z = domain.sample_observation(&belief[j].0, a, rng)?;
    pruned_posterior_given(domain, belief, a, &z, budget)
}

/// [`pruned_posterior`] for a given observation.
pub fn pruned_posterior_given<D: HybridDomain>(
    domain: &D,
    belief: &[(D::Belief, f64)],
    a: usize,
    z: &D::Obs,
    budget: usize,
) -> Result<(WeightedBelief<D::Belief>, u64)> {
    let mut expansions = Vec::with_capacity(belief.len());
    let mut flat = Vec::new();
    let mut total = 0.0;
    for (j, (b, w)) in belief.iter().enumerate() {
        if *w <= 0.0 {
            continue;
        }
        let e = domain.compute_weights(b, a, z)?;
        for (i, zeta) in domain.weights(&e).iter().enumerate() {
            if *zeta > 0.0 {
                flat.push((expansions.len(), i, zeta * w));
                total += zeta * w;
            }
        }
        expansions.push((j, e));
    }
    if !(total > 0.0) {
        return Err(Error::TotalInconsistency);
    }
    let keep = top_indices(flat.iter().map(|f| f.2), budget);
    let kept_mass: f64 = keep.iter().map(|&k| flat[k].2).sum();
    let mut out = Vec::with_capacity(keep.len());
    for k in keep {
        let (e, i, w) = flat[k];
        out.push((domain.posterior(&expansions[e].1, i)?, w / kept_mass));
    }
    let n = out.len() as u64;
    Ok((out, n))
}

#[derive(Debug, Clone)]
pub struct BeliefAction {
    pub stats: ActionStats,
    /// Children `C(ba)`: node index (absent at the last level, whose
    /// posterior is never used) and the immediate reward.
    pub children: Vec<(Option<usize>, f64)>,
}

#[derive(Debug, Clone)]
pub struct BeliefNode<B> {
    pub belief: WeightedBelief<B>,
    pub actions: Vec<BeliefAction>,
}

pub struct BeliefMctsTree<'d, D: HybridDomain> {
    domain: &'d D,
    config: PlannerConfig,
    nodes: Vec<BeliefNode<D::Belief>>,
    pub stats: SearchStats,
    replay: Option<Vec<ReplayEntry>>,
}

struct Step {
    node: usize,
    action: usize,
    reward: f64,
}

impl<'d, D: HybridDomain> BeliefMctsTree<'d, D> {
    /// Tree rooted at `root`, pruned to the configured budget.
    pub fn new(domain: &'d D, config: PlannerConfig, root: &[(D::Belief, f64)]) -> Result<Self> {
        config.validate()?;
        let keep = top_indices(root.iter().map(|h| h.1), config.prune_budget);
        let mass: f64 = keep.iter().map(|&i| root[i].1).sum();
        if !(mass > 0.0) {
            return Err(Error::ZeroWeights);
        }
        let belief = keep.into_iter().map(|i| (root[i].0.clone(), root[i].1 / mass)).collect();
        let mut tree = BeliefMctsTree { domain, config, nodes: Vec::new(), stats: SearchStats::default(), replay: None };
        tree.push_node(belief);
        Ok(tree)
    }

    pub fn record_replay(&mut self) {
        self.replay = Some(Vec::new());
    }

    pub fn replay(&self) -> Option<&[ReplayEntry]> {
        self.replay.as_deref()
    }

    pub fn nodes(&self) -> &[BeliefNode<D::Belief>] {
        &self.nodes
    }

    fn push_node(&mut self, belief: WeightedBelief<D::Belief>) -> usize {
        let actions = (0..self.domain.num_actions())
            .map(|_| BeliefAction { stats: ActionStats::default(), children: Vec::new() })
            .collect();
        self.nodes.push(BeliefNode { belief, actions });
        self.nodes.len() - 1
    }

    pub fn iterate(&mut self, rng: &mut SimRng) -> Result<Option<f64>> {
        let cfg = self.config.clone();
        let mut node = 0usize;
        let mut depth = cfg.horizon;
        let mut steps = Vec::with_capacity(depth);
        let mut tail = 0.0;
        let mut posteriors = 0u64;
        // (parent, action, belief, reward) of the expansion to commit
        let mut expansion: Option<(usize, usize, Option<WeightedBelief<D::Belief>>, f64)> = None;

        while depth > 0 {
            let n = &self.nodes[node];
            let stats: Vec<ActionStats> = n.actions.iter().map(|a| a.stats.clone()).collect();
            let a = ucb_select(&stats, cfg.ucb_c);
            let edge = &n.actions[a];
            if widening_open(edge.children.len(), edge.stats.n, cfg.k_o, cfg.alpha_o) {
                let refs: Vec<(&D::Belief, f64)> = n.belief.iter().map(|(b, w)| (b, *w)).collect();
                let reward = self.domain.belief_reward(&refs, a, cfg.n_particles, rng);
                steps.push(Step { node, action: a, reward });
                if depth == 1 {
                    expansion = Some((node, a, None, reward));
                    break;
                }
                let next = match pruned_posterior(self.domain, &n.belief, a, cfg.prune_budget, rng) {
                    Ok(v) => v,
                    Err(Error::TotalInconsistency) | Err(Error::EmptyCandidates) | Err(Error::ZeroWeights) => {
                        return self.discard()
                    }
                    Err(err) => return Err(err),
                };
                posteriors += next.1;
                let j = sample_categorical(next.0.iter().map(|h| h.1), rng)?;
                let (r, p) = match rollout(self.domain, &next.0[j].0, depth - 1, cfg.n_particles, rng) {
                    Ok(v) => v,
                    Err(Error::TotalInconsistency) | Err(Error::EmptyCandidates) | Err(Error::ZeroWeights) => {
                        return self.discard()
                    }
                    Err(err) => return Err(err),
                };
                tail = r;
                posteriors += p;
                expansion = Some((node, a, Some(next.0), reward));
                break;
            }
            let (child, reward) = edge.children[pick_existing(edge.children.len(), rng)];
            steps.push(Step { node, action: a, reward });
            match child {
                Some(c) => {
                    node = c;
                    depth -= 1;
                }
                None => break,
            }
        }

        if let Some((parent, a, belief, reward)) = expansion {
            let child = belief.map(|b| self.push_node(b));
            self.nodes[parent].actions[a].children.push((child, reward));
        }
        let mut ret = tail;
        for step in steps.into_iter().rev() {
            ret += step.reward;
            self.nodes[step.node].actions[step.action].stats.record(ret);
            if let Some(log) = self.replay.as_mut() {
                log.push(ReplayEntry { node: step.node, action: step.action, ret });
            }
        }
        self.stats.iterations += 1;
        self.stats.close_iteration(posteriors);
        self.stats.tree_nodes = self.nodes.len() as u64;
        Ok(Some(ret))
    }

    fn discard(&mut self) -> Result<Option<f64>> {
        self.stats.discarded += 1;
        Ok(None)
    }

    pub fn search(&mut self, rng: &mut SimRng) -> Result<PlanOutcome> {
        run_budget(self.config.budget, |rng| self.iterate(rng).map(|r| r.is_some()), rng)?;
        Ok(self.outcome())
    }

    pub fn outcome(&self) -> PlanOutcome {
        let stats: Vec<ActionStats> = self.nodes[0].actions.iter().map(|a| a.stats.clone()).collect();
        PlanOutcome {
            action: best_action(&stats),
            q_values: stats.iter().map(|s| s.q).collect(),
            visits: stats.iter().map(|s| s.n).collect(),
            stats: self.stats.clone(),
        }
    }
}

/// Vanilla hybrid-belief MCTS with top-`prune_budget` pruning.
pub fn plan_vanilla<D: HybridDomain>(
    domain: &D,
    root: &[(D::Belief, f64)],
    config: &PlannerConfig,
    rng: &mut SimRng,
) -> Result<PlanOutcome> {
    BeliefMctsTree::new(domain, config.clone(), root)?.search(rng)
}

/// Single-hypothesis PFT-DPW: draw one root hypothesis by weight and plan on
/// it alone, keeping only the most likely child at every expansion.
pub fn plan_pft_dpw<D: HybridDomain>(
    domain: &D,
    root: &[(D::Belief, f64)],
    config: &PlannerConfig,
    rng: &mut SimRng,
) -> Result<PlanOutcome> {
    let (outcome, _) = plan_pft_dpw_with_root(domain, root, config, rng)?;
    Ok(outcome)
}

/// [`plan_pft_dpw`] also returning the index of the sampled root hypothesis.
pub fn plan_pft_dpw_with_root<D: HybridDomain>(
    domain: &D,
    root: &[(D::Belief, f64)],
    config: &PlannerConfig,
    rng: &mut SimRng,
) -> Result<(PlanOutcome, usize)> {
    let j = sample_categorical(root.iter().map(|h| h.1), rng)?;
    let mut cfg = config.clone();
    cfg.prune_budget = 1;
    let single = [(root[j].0.clone(), 1.0)];
    let outcome = BeliefMctsTree::new(domain, cfg, &single)?.search(rng)?;
    Ok((outcome, j))
}
