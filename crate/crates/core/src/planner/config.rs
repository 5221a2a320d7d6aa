use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Search budget per planning call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    /// Number of completed (non-discarded) iterations.
    Iterations(u64),
    /// Wall-clock seconds.
    Seconds(f64),
}

impl Budget {
    pub fn duration(&self) -> Option<Duration> {
        match self {
            Budget::Seconds(s) => Some(Duration::from_secs_f64(*s)),
            Budget::Iterations(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RolloutPolicy {
    #[default]
    UniformRandom,
}

pub const DEFAULT_UCB_C: f64 = 40.0;
pub const DEFAULT_N_PARTICLES: usize = 200;
pub const DEFAULT_HORIZON: usize = 8;
pub const DEFAULT_K_O: f64 = 2.0;
pub const DEFAULT_ALPHA_O: f64 = 0.014;
pub const DEFAULT_TIME_BUDGET_S: f64 = 20.0;
pub const DEFAULT_PRUNE_BUDGET: usize = 8;

/// Hyperparameters shared by all solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub ucb_c: f64,
    pub horizon: usize,
    pub k_o: f64,
    pub alpha_o: f64,
    /// State samples per reward evaluation.
    pub n_particles: usize,
    pub budget: Budget,
    /// Hypotheses kept per belief node by the pruning solvers.
    pub prune_budget: usize,
    pub rollout: RolloutPolicy,
    pub seed: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            ucb_c: DEFAULT_UCB_C,
            horizon: DEFAULT_HORIZON,
            k_o: DEFAULT_K_O,
            alpha_o: DEFAULT_ALPHA_O,
            n_particles: DEFAULT_N_PARTICLES,
            budget: Budget::Seconds(DEFAULT_TIME_BUDGET_S),
            prune_budget: DEFAULT_PRUNE_BUDGET,
            rollout: RolloutPolicy::UniformRandom,
            seed: 0,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if !(self.ucb_c >= 0.0) || !self.ucb_c.is_finite() {
            return bad("ucb_c must be finite and nonnegative");
        }
        if self.horizon < 1 {
            return bad("horizon must be at least 1");
        }
        if !(self.k_o > 0.0) {
            return bad("k_o must be positive");
        }
        if !(self.alpha_o >= 0.0) {
            return bad("alpha_o must be nonnegative");
        }
        if self.n_particles < 1 {
            return bad("n_particles must be at least 1");
        }
        if self.prune_budget < 1 {
            return bad("prune_budget must be at least 1");
        }
        if let Budget::Seconds(s) = self.budget {
            if !(s >= 0.0) || !s.is_finite() {
                return bad("time budget must be finite and nonnegative");
            }
        }
        Ok(())
    }

    pub fn with_iterations(mut self, n: u64) -> Self {
        self.budget = Budget::Iterations(n);
        self
    }
}
