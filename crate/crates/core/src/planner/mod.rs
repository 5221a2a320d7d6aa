//! Online solvers over hybrid beliefs, sharing a belief-tree substrate with
//! UCB action selection and observation progressive widening.

pub mod belief_mcts;
mod config;
pub mod dabsp;
mod domain;
pub mod hbmcp;
mod rollout;
mod stats;
pub mod tree;

#[cfg(test)]
mod tests;

use serde::{Deserialize, Serialize};

pub use config::{
    Budget, PlannerConfig, RolloutPolicy, DEFAULT_ALPHA_O, DEFAULT_HORIZON, DEFAULT_K_O, DEFAULT_N_PARTICLES,
    DEFAULT_PRUNE_BUDGET, DEFAULT_TIME_BUDGET_S, DEFAULT_UCB_C,
};
pub use domain::HybridDomain;
pub use rollout::rollout;
pub use stats::{ReplayEntry, SearchStats};

use crate::error::Result;
use crate::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Solver {
    #[serde(rename = "hbmcp")]
    HbMcp,
    #[serde(rename = "vanilla")]
    Vanilla,
    #[serde(rename = "pft-dpw")]
    PftDpw,
    #[serde(rename = "dabsp")]
    DaBsp,
}

impl Solver {
    pub const ALL: [Solver; 4] = [Solver::HbMcp, Solver::Vanilla, Solver::PftDpw, Solver::DaBsp];

    pub fn name(&self) -> &'static str {
        match self {
            Solver::HbMcp => "hbmcp",
            Solver::Vanilla => "vanilla",
            Solver::PftDpw => "pft-dpw",
            Solver::DaBsp => "dabsp",
        }
    }

    pub fn parse(s: &str) -> Option<Solver> {
        match s {
            "pftdpw" | "pft_dpw" => Some(Solver::PftDpw),
            "da-bsp" => Some(Solver::DaBsp),
            "hb-mcp" => Some(Solver::HbMcp),
            _ => Solver::ALL.into_iter().find(|v| v.name() == s),
        }
    }
}

impl std::fmt::Display for Solver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Result of one planning call.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutcome {
    pub action: usize,
    pub q_values: Vec<f64>,
    pub visits: Vec<u64>,
    pub stats: SearchStats,
}

/// Plan one action with the chosen solver.
pub fn plan<D: HybridDomain>(
    solver: Solver,
    domain: &D,
    root: &[(D::Belief, f64)],
    config: &PlannerConfig,
    rng: &mut SimRng,
) -> Result<PlanOutcome> {
    match solver {
        Solver::HbMcp => hbmcp::plan(domain, root, config, rng),
        Solver::Vanilla => belief_mcts::plan_vanilla(domain, root, config, rng),
        Solver::PftDpw => belief_mcts::plan_pft_dpw(domain, root, config, rng),
        Solver::DaBsp => dabsp::plan(domain, root, config, rng),
    }
}
