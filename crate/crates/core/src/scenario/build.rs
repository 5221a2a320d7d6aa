//! Built-in scenarios. `scale` shrinks landmark counts (and, for the
//! kidnapped robot, the map) to desk-scale variants; scale 1 matches the
//! full-size layouts.

use rand::Rng;

use super::config::{
    ActionSpec, HypothesisSpec, InferenceSpec, LandmarkSpec, NoiseSpec, RewardSpec, ScenarioConfig,
    DEFAULT_EPISODE_LENGTH,
};
use super::env::GroundTruth;
use crate::belief::AOptScope;
use crate::error::{Error, Result};
use crate::stream_rng;

pub const SCENARIOS: [&str; 3] = ["aliased_matrix", "kidnapped_robot", "goal_reaching"];

const ALIASED: u32 = 0;
const UNIQUE: u32 = 1;
const SPACING: f64 = 40.0;
const LANDMARK_SIGMA: f64 = 1.0;
const POSE_SIGMA: f64 = 0.5;

/// Scenario description plus a ground truth drawn with `seed`.
pub fn build_scenario(name: &str, scale: f64, seed: u64) -> Result<(ScenarioConfig, GroundTruth)> {
    let config = scenario_config(name, scale, seed)?;
    let gt = GroundTruth::sample(&config, seed)?;
    Ok((config, gt))
}

/// Scenario description only. `seed` matters for the randomly scattered
/// kidnapped-robot map.
pub fn scenario_config(name: &str, scale: f64, seed: u64) -> Result<ScenarioConfig> {
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(Error::InvalidConfig(format!("scale must be in (0, 1], got {scale}")));
    }
    let config = match name {
        "aliased_matrix" => aliased_matrix(scale),
        "kidnapped_robot" => kidnapped_robot(scale, seed),
        "goal_reaching" => goal_reaching(scale),
        _ => return Err(Error::UnknownScenario(name.to_string())),
    };
    config.validate()?;
    Ok(config)
}

fn landmark(x: f64, y: f64, class: u32, sigma: f64) -> LandmarkSpec {
    LandmarkSpec { position: [x, y], class, sigma }
}

fn equal_hypotheses(means: &[[f64; 2]]) -> Vec<HypothesisSpec> {
    let w = 1.0 / means.len() as f64;
    means.iter().map(|m| HypothesisSpec { mean: *m, sigma: POSE_SIGMA, weight: w }).collect()
}

fn base(name: &str, reward: RewardSpec, landmarks: Vec<LandmarkSpec>, hypotheses: Vec<HypothesisSpec>) -> ScenarioConfig {
    ScenarioConfig {
        name: name.to_string(),
        episode_length: DEFAULT_EPISODE_LENGTH,
        true_hypothesis: 0,
        noise: NoiseSpec::default(),
        actions: ActionSpec::default(),
        reward,
        inference: InferenceSpec::default(),
        landmarks,
        hypotheses,
    }
}

/// Square grid of aliased landmarks at 40 m spacing without its center
/// (5×5 at scale 1, 3×3 at scale 0.5), one unique landmark two macro-steps
/// north of the true start outside the grid, and three pose hypotheses at
/// grid-cell centers that look alike.
fn aliased_matrix(scale: f64) -> ScenarioConfig {
    let half = ((2.0 * scale).round() as i32).max(1);
    let mut landmarks = Vec::new();
    for i in -half..=half {
        for j in -half..=half {
            if i != 0 || j != 0 {
                landmarks.push(landmark(i as f64 * SPACING, j as f64 * SPACING, ALIASED, LANDMARK_SIGMA));
            }
        }
    }
    let start = [SPACING / 2.0, SPACING / 2.0];
    let reach = ActionSpec::default().step_length * ActionSpec::default().micro_steps as f64;
    landmarks.push(landmark(start[0], start[1] + 2.0 * reach, UNIQUE, LANDMARK_SIGMA));
    let hypotheses = equal_hypotheses(&[start, [start[0] - SPACING, start[1]], [start[0], start[1] - SPACING]]);
    base("aliased_matrix", RewardSpec::AOptimality { scope: AOptScope::FullState }, landmarks, hypotheses)
}

/// Landmarks and pose hypotheses scattered uniformly over a square map
/// (16 landmarks on 160 m at scale 1), all landmarks alike.
fn kidnapped_robot(scale: f64, seed: u64) -> ScenarioConfig {
    let side = 160.0 * scale;
    let count = ((16.0 * scale * scale).round() as usize).max(4);
    let mut rng = stream_rng(seed, u64::MAX);
    let landmarks = (0..count)
        .map(|_| landmark(rng.random_range(0.0..side), rng.random_range(0.0..side), ALIASED, 2.0))
        .collect();
    let means: Vec<[f64; 2]> =
        (0..3).map(|_| [rng.random_range(0.0..side), rng.random_range(0.0..side)]).collect();
    base("kidnapped_robot", RewardSpec::AOptimality { scope: AOptScope::PoseOnly }, landmarks, equal_hypotheses(&means))
}

/// Goal three macro-steps east of the true start; the other two hypotheses
/// sit on either side of the goal. Each hypothesis has the same aliased
/// landmarks around it; a unique landmark one macro-step north of the true
/// start tells them apart.
fn goal_reaching(scale: f64) -> ScenarioConfig {
    let reach = ActionSpec::default().step_length * ActionSpec::default().micro_steps as f64;
    let goal = [3.0 * reach, 0.0];
    let starts = [[0.0, 0.0], [goal[0], -3.0 * reach], [goal[0], 3.0 * reach]];
    let mut offsets = vec![[reach, 6.0]];
    if scale > 0.75 {
        offsets.extend([[-6.0, -reach], [-reach, -6.0]]);
    }
    let mut landmarks = Vec::new();
    for s in &starts {
        for o in &offsets {
            landmarks.push(landmark(s[0] + o[0], s[1] + o[1], ALIASED, LANDMARK_SIGMA));
        }
    }
    landmarks.push(landmark(0.0, reach, UNIQUE, LANDMARK_SIGMA));
    let reward = RewardSpec::GoalDistance { goal, scope: AOptScope::PoseOnly };
    base("goal_reaching", reward, landmarks, equal_hypotheses(&starts))
}
