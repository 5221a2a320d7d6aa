use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::domain::SlamDomain;
use super::env::GroundTruth;
use crate::association::ObservationArray;
use crate::belief::{HybridBelief, Hypothesis, WorldModel};
use crate::error::{Error, Result};
use crate::planner::{self, PlannerConfig, SearchStats, Solver};
use crate::stream_rng;

pub const SCHEMA_VERSION: u32 = 1;

/// Per-trial CSV columns.
pub const CSV_HEADER: &str = "trial,step,action,reward,cumulative_reward,n_hypotheses,max_weight,wall_ms";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefSummary {
    pub n_hypotheses: usize,
    pub max_weight: f64,
    pub total_weight: f64,
    /// Weighted mean of the hypotheses' current pose means.
    pub mean_pose: [f64; 2],
}

impl BeliefSummary {
    pub fn of(belief: &HybridBelief) -> Self {
        let mut mean = nalgebra::Vector2::zeros();
        for h in belief.hypotheses() {
            mean += h.belief.pose_mean() * h.weight;
        }
        BeliefSummary {
            n_hypotheses: belief.len(),
            max_weight: belief.max_weight(),
            total_weight: belief.total_weight(),
            mean_pose: [mean.x, mean.y],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub action: usize,
    pub reward: f64,
    pub cumulative_reward: f64,
    pub belief: BeliefSummary,
    pub true_pose: [f64; 2],
    /// Inference updates that every hypothesis contradicted and that were
    /// replaced by a prediction.
    pub inconsistent_updates: usize,
    pub search: SearchStats,
    /// Planning wall time; zero unless timing is recorded.
    pub wall_ms: f64,
}

/// One episode, serializable as a JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub schema_version: u32,
    pub scenario: String,
    pub solver: String,
    pub trial: usize,
    pub seed: u64,
    pub planner: PlannerConfig,
    pub initial: BeliefSummary,
    pub initial_reward: f64,
    pub steps: Vec<StepRecord>,
    pub cumulative_reward: f64,
    /// Every true micro-step pose including the start.
    pub true_trajectory: Vec<[f64; 2]>,
    pub failure: Option<String>,
}

impl TrialRecord {
    pub fn csv_rows(&self) -> Vec<String> {
        self.steps
            .iter()
            .map(|s| {
                format!(
                    "{},{},{},{},{},{},{},{}",
                    self.trial,
                    s.step,
                    s.action,
                    s.reward,
                    s.cumulative_reward,
                    s.belief.n_hypotheses,
                    s.belief.max_weight,
                    s.wall_ms
                )
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trial record serializes")
    }
}

/// Realized reward: negative mixture trace of the agent's belief, plus the
/// true distance to the goal when there is one.
pub fn scenario_reward(config: &ScenarioConfig, belief: &HybridBelief, gt: &GroundTruth) -> f64 {
    let distance = config.goal().map(|g| (gt.pose - g).norm()).unwrap_or(0.0);
    belief.a_optimality(config.scope()) - distance
}

/// The agent's own inference after a macro-action: one hybrid update per
/// micro-step (or one at the end), keeping the heaviest hypotheses. Updates
/// that contradict every hypothesis fall back to a pure prediction.
pub fn infer(
    config: &ScenarioConfig,
    world: &WorldModel,
    belief: &HybridBelief,
    a: usize,
    observations: &[ObservationArray],
) -> Result<(HybridBelief, usize)> {
    let mode = config.inference.zeta.mode();
    let budget = Some(config.inference.max_hypotheses);
    let (steps, world): (Vec<(nalgebra::Vector2<f64>, &ObservationArray)>, WorldModel) =
        if config.inference.per_micro_step {
            (observations.iter().map(|o| (config.micro_displacement(a), o)).collect(), world.clone())
        } else {
            let last = observations.last().ok_or_else(|| Error::InvalidConfig("no observations".into()))?;
            (vec![(config.macro_displacement(a), last)], config.macro_world()?)
        };
    let mut b = belief.clone();
    let mut inconsistent = 0;
    for (d, obs) in steps {
        b = match b.update(&d, obs, &world, mode, budget) {
            Ok(next) => next,
            Err(Error::TotalInconsistency) => {
                inconsistent += 1;
                let predicted = b
                    .hypotheses()
                    .iter()
                    .map(|h| Hypothesis { path: h.path.clone(), belief: h.belief.predict(&d, &world), weight: h.weight })
                    .collect();
                HybridBelief::new(predicted)?
            }
            Err(e) => return Err(e),
        };
    }
    Ok((b, inconsistent))
}

/// Seed of trial `t` in a batch; identical across solvers so they face the
/// same ground truths.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed.wrapping_add(trial as u64)
}

/// Plan, act, observe and update for the episode length. Planner errors end
/// the episode with a failure tag.
pub fn run_trial(
    config: &ScenarioConfig,
    solver: Solver,
    planner_config: &PlannerConfig,
    trial: usize,
    seed: u64,
    record_timing: bool,
) -> Result<TrialRecord> {
    config.validate()?;
    planner_config.validate()?;
    let world = config.world()?;
    let domain = SlamDomain::new(config)?;
    let mut gt = GroundTruth::sample(config, seed)?;
    let mut belief = config.prior_belief()?;
    let mut rng = stream_rng(seed, 2);
    let mut record = TrialRecord {
        schema_version: SCHEMA_VERSION,
        scenario: config.name.clone(),
        solver: solver.name().to_string(),
        trial,
        seed,
        planner: planner_config.clone(),
        initial: BeliefSummary::of(&belief),
        initial_reward: scenario_reward(config, &belief, &gt),
        steps: Vec::with_capacity(config.episode_length),
        cumulative_reward: 0.0,
        true_trajectory: Vec::new(),
        failure: None,
    };
    for step in 0..config.episode_length {
        let root = SlamDomain::hybrid_root(&belief);
        let start = Instant::now();
        let outcome = match planner::plan(solver, &domain, &root, planner_config, &mut rng) {
            Ok(o) => o,
            Err(e) => {
                record.failure = Some(format!("step {step}: planner: {e}"));
                break;
            }
        };
        let wall_ms = if record_timing { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
        let observations = gt.step(config, &world, outcome.action);
        let (next, inconsistent) = match infer(config, &world, &belief, outcome.action, &observations) {
            Ok(v) => v,
            Err(e) => {
                record.failure = Some(format!("step {step}: inference: {e}"));
                break;
            }
        };
        belief = next;
        let reward = scenario_reward(config, &belief, &gt);
        record.cumulative_reward += reward;
        record.steps.push(StepRecord {
            step,
            action: outcome.action,
            reward,
            cumulative_reward: record.cumulative_reward,
            belief: BeliefSummary::of(&belief),
            true_pose: [gt.pose.x, gt.pose.y],
            inconsistent_updates: inconsistent,
            search: outcome.stats,
            wall_ms,
        });
    }
    record.true_trajectory = gt.trajectory.iter().map(|p| [p.x, p.y]).collect();
    Ok(record)
}
