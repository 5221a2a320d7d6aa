//! Monte Carlo evaluation of open-loop action sequences over the pruned
//! hybrid belief: each root action is scored by the average return of
//! trajectories that start with it and continue with random actions.

use rand::Rng;

use super::belief_mcts::pruned_posterior;
use super::config::PlannerConfig;
use super::domain::HybridDomain;
use super::hbmcp::run_budget;
use super::stats::SearchStats;
use super::tree::{best_action, ActionStats};
use super::PlanOutcome;
use crate::belief::top_indices;
use crate::error::{Error, Result};
use crate::SimRng;

/// One trajectory return starting with action `first`.
pub fn trajectory_return<D: HybridDomain>(
    domain: &D,
    root: &[(D::Belief, f64)],
    first: usize,
    config: &PlannerConfig,
    rng: &mut SimRng,
) -> Result<(f64, u64)> {
    let mut belief: Vec<(D::Belief, f64)> = root.to_vec();
    let mut total = 0.0;
    let mut posteriors = 0;
    for d in 0..config.horizon {
        let a = if d == 0 { first } else { rng.random_range(0..domain.num_actions()) };
        let refs: Vec<(&D::Belief, f64)> = belief.iter().map(|(b, w)| (b, *w)).collect();
        total += domain.belief_reward(&refs, a, config.n_particles, rng);
        if d + 1 < config.horizon {
            let (next, p) = pruned_posterior(domain, &belief, a, config.prune_budget, rng)?;
            belief = next;
            posteriors += p;
        }
    }
    Ok((total, posteriors))
}

pub fn plan<D: HybridDomain>(
    domain: &D,
    root: &[(D::Belief, f64)],
    config: &PlannerConfig,
    rng: &mut SimRng,
) -> Result<PlanOutcome> {
    config.validate()?;
    let keep = top_indices(root.iter().map(|h| h.1), config.prune_budget);
    let mass: f64 = keep.iter().map(|&i| root[i].1).sum();
    if !(mass > 0.0) {
        return Err(Error::ZeroWeights);
    }
    let pruned: Vec<(D::Belief, f64)> = keep.into_iter().map(|i| (root[i].0.clone(), root[i].1 / mass)).collect();

    let n_actions = domain.num_actions();
    let mut q = vec![ActionStats::default(); n_actions];
    let mut stats = SearchStats::default();
    let mut next_action = 0usize;
    run_budget(
        config.budget,
        |rng| {
            let a = next_action;
            match trajectory_return(domain, &pruned, a, config, rng) {
                Ok((ret, p)) => {
                    q[a].record(ret);
                    next_action = (next_action + 1) % n_actions;
                    stats.iterations += 1;
                    stats.close_iteration(p);
                    Ok(true)
                }
                Err(Error::TotalInconsistency) | Err(Error::EmptyCandidates) | Err(Error::ZeroWeights) => {
                    stats.discarded += 1;
                    Ok(false)
                }
                Err(e) => Err(e),
            }
        },
        rng,
    )?;
    Ok(PlanOutcome {
        action: best_action(&q),
        q_values: q.iter().map(|s| s.q).collect(),
        visits: q.iter().map(|s| s.n).collect(),
        stats,
    })
}
