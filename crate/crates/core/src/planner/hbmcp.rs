//! Hybrid-belief Monte Carlo planning: every simulation carries one sampled
//! hypothesis, expands only that hypothesis' children under the sampled
//! observation and follows one child drawn by its evidence.

use std::time::Instant;

use super::config::{Budget, PlannerConfig};
use super::domain::HybridDomain;
use super::rollout::rollout;
use super::stats::{ReplayEntry, SearchStats};
use super::tree::{best_action, pick_existing, reward_replace_update, ucb_select, widening_open, ActionStats};
use super::PlanOutcome;
use crate::error::{Error, Result};
use crate::sampling::sample_categorical;
use crate::SimRng;

#[derive(Debug, Clone)]
pub struct HbAction<O> {
    pub stats: ActionStats,
    /// Latest reward estimate of this node under this action.
    pub r_prev: Option<f64>,
    /// Observation children `C(ha)` and the node each leads to.
    pub children: Vec<(O, usize)>,
}

#[derive(Debug, Clone)]
pub struct HbNode<O, B> {
    pub actions: Vec<HbAction<O>>,
    pub bank: B,
}

impl<O, B> HbNode<O, B> {
    pub fn visits(&self) -> u64 {
        self.actions.iter().map(|a| a.stats.n).sum()
    }

    pub fn action_stats(&self) -> Vec<ActionStats> {
        self.actions.iter().map(|a| a.stats.clone()).collect()
    }
}

/// Tentative work of one tree level, committed only when the whole
/// simulation succeeds.
struct Step<D: HybridDomain> {
    node: usize,
    action: usize,
    bank: D::Bank,
    reward: f64,
    corrected: f64,
    /// Fresh observation to append to `C(ha)`.
    new_obs: Option<D::Obs>,
}

/// The HB-MCP search tree.
pub struct HbMcpTree<'d, D: HybridDomain> {
    domain: &'d D,
    config: PlannerConfig,
    nodes: Vec<HbNode<D::Obs, D::Bank>>,
    pub stats: SearchStats,
    replay: Option<Vec<ReplayEntry>>,
}

impl<'d, D: HybridDomain> HbMcpTree<'d, D> {
    pub fn new(domain: &'d D, config: PlannerConfig) -> Result<Self> {
        config.validate()?;
        let mut tree = HbMcpTree { domain, config, nodes: Vec::new(), stats: SearchStats::default(), replay: None };
        tree.push_node();
        Ok(tree)
    }

    /// Keep every propagated return for later inspection.
    pub fn record_replay(&mut self) {
        self.replay = Some(Vec::new());
    }

    pub fn replay(&self) -> Option<&[ReplayEntry]> {
        self.replay.as_deref()
    }

    pub fn nodes(&self) -> &[HbNode<D::Obs, D::Bank>] {
        &self.nodes
    }

    pub fn root(&self) -> &HbNode<D::Obs, D::Bank> {
        &self.nodes[0]
    }

    fn push_node(&mut self) -> usize {
        let actions = (0..self.domain.num_actions())
            .map(|_| HbAction { stats: ActionStats::default(), r_prev: None, children: Vec::new() })
            .collect();
        self.nodes.push(HbNode { actions, bank: D::Bank::default() });
        self.nodes.len() - 1
    }

    /// One simulation from the root hybrid belief. Returns the root return,
    /// or `None` when the sampled path became inconsistent and the
    /// simulation was discarded without touching the tree.
    pub fn iterate(&mut self, root: &[(D::Belief, f64)], rng: &mut SimRng) -> Result<Option<f64>> {
        let j = sample_categorical(root.iter().map(|h| h.1), rng)?;
        let mut b = root[j].0.clone();
        let mut lambda = 1.0;
        let mut node = 0usize;
        let mut depth = self.config.horizon;
        let mut steps: Vec<Step<D>> = Vec::with_capacity(depth);
        let mut tail = 0.0;
        let mut posteriors = 0u64;
        let cfg = &self.config;

        while depth > 0 {
            let n = &self.nodes[node];
            let stats: Vec<ActionStats> = n.actions.iter().map(|a| a.stats.clone()).collect();
            let a = ucb_select(&stats, cfg.ucb_c);
            let edge = &n.actions[a];

            let mut bank = n.bank.clone();
            self.domain.bank_add(&mut bank, &b, lambda, n.visits(), cfg.n_particles, rng);
            let reward = self.domain.bank_reward(&bank, a);
            let corrected = reward_replace_update(edge.stats.n, edge.r_prev, reward);

            let (z, existing) = if widening_open(edge.children.len(), edge.stats.n, cfg.k_o, cfg.alpha_o) {
                let z = self.domain.sample_observation(&b, a, rng)?;
                let existing = edge.children.iter().find(|c| c.0 == z).map(|c| c.1);
                (z, existing)
            } else {
                let c = &edge.children[pick_existing(edge.children.len(), rng)];
                (c.0.clone(), Some(c.1))
            };

            let mut step = Step::<D> { node, action: a, bank, reward, corrected, new_obs: None };
            if existing.is_none() {
                step.new_obs = Some(z.clone());
            }
            steps.push(step);

            // The posterior at the last level never reaches a reward.
            if depth == 1 {
                break;
            }
            let e = match self.domain.compute_weights(&b, a, &z) {
                Ok(e) => e,
                Err(Error::TotalInconsistency) | Err(Error::EmptyCandidates) => return self.discard(),
                Err(err) => return Err(err),
            };
            let w = self.domain.weights(&e);
            let total: f64 = w.iter().sum();
            if !(total > 0.0) {
                return self.discard();
            }
            let i = sample_categorical(w.iter().copied(), rng)?;
            lambda *= total;
            b = self.domain.posterior(&e, i)?;
            posteriors += 1;

            match existing {
                Some(child) => {
                    node = child;
                    depth -= 1;
                }
                None => {
                    let (r, p) = match rollout(self.domain, &b, depth - 1, cfg.n_particles, rng) {
                        Ok(v) => v,
                        Err(Error::TotalInconsistency) | Err(Error::EmptyCandidates) | Err(Error::ZeroWeights) => {
                            return self.discard()
                        }
                        Err(err) => return Err(err),
                    };
                    tail = r;
                    posteriors += p;
                    break;
                }
            }
        }

        // commit bottom-up
        let mut ret = tail;
        for step in steps.into_iter().rev() {
            ret += step.corrected;
            if let Some(z) = step.new_obs {
                let child = self.push_node();
                self.nodes[step.node].actions[step.action].children.push((z, child));
            }
            let n = &mut self.nodes[step.node];
            n.bank = step.bank;
            let edge = &mut n.actions[step.action];
            edge.r_prev = Some(step.reward);
            edge.stats.record(ret);
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

    /// Run until the configured budget is spent.
    pub fn search(&mut self, root: &[(D::Belief, f64)], rng: &mut SimRng) -> Result<PlanOutcome> {
        run_budget(self.config.budget, |rng| self.iterate(root, rng).map(|r| r.is_some()), rng)?;
        Ok(self.outcome())
    }

    pub fn outcome(&self) -> PlanOutcome {
        let stats = self.root().action_stats();
        PlanOutcome {
            action: best_action(&stats),
            q_values: stats.iter().map(|s| s.q).collect(),
            visits: stats.iter().map(|s| s.n).collect(),
            stats: self.stats.clone(),
        }
    }
}

/// Drive `step` until the budget is spent. Discarded attempts do not count
/// towards an iteration budget but are capped at ten times the budget.
pub(crate) fn run_budget(
    budget: Budget,
    mut step: impl FnMut(&mut SimRng) -> Result<bool>,
    rng: &mut SimRng,
) -> Result<()> {
    match budget {
        Budget::Iterations(n) => {
            let mut done = 0;
            let mut attempts = 0;
            let cap = n.saturating_mul(10).saturating_add(10);
            while done < n && attempts < cap {
                attempts += 1;
                if step(rng)? {
                    done += 1;
                }
            }
        }
        Budget::Seconds(_) => {
            let limit = budget.duration().expect("seconds budget");
            let start = Instant::now();
            while start.elapsed() < limit {
                step(rng)?;
            }
        }
    }
    Ok(())
}

/// Plan one action with HB-MCP from a weighted set of root hypotheses.
pub fn plan<D: HybridDomain>(
    domain: &D,
    root: &[(D::Belief, f64)],
    config: &PlannerConfig,
    rng: &mut SimRng,
) -> Result<PlanOutcome> {
    let mut tree = HbMcpTree::new(domain, config.clone())?;
    tree.search(root, rng)
}
