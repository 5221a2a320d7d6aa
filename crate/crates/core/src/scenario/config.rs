use std::path::Path;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::association::ZetaMode;
use crate::belief::{AOptScope, ClassId, GaussianConditionalBelief, HybridBelief, LandmarkPrior, WorldModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkSpec {
    /// Prior mean (m).
    pub position: [f64; 2],
    pub class: ClassId,
    /// Prior standard deviation per axis (m).
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisSpec {
    pub mean: [f64; 2],
    pub sigma: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Motion noise per axis per micro-step (m).
    pub motion_sigma: f64,
    /// Observation noise per axis (m).
    pub obs_sigma: f64,
    pub sensing_range: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec { motion_sigma: 0.2, obs_sigma: 0.1, sensing_range: 10.0 }
    }
}

/// Macro-actions: `micro_steps` straight steps of `step_length` along one of
/// `directions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSpec {
    pub step_length: f64,
    pub micro_steps: usize,
    pub directions: Vec<[f64; 2]>,
}

impl Default for ActionSpec {
    fn default() -> Self {
        ActionSpec {
            step_length: 4.0,
            micro_steps: 12,
            directions: vec![[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RewardSpec {
    /// Negative trace of the mixture covariance.
    AOptimality { scope: AOptScope },
    /// Negative sum of the distance to `goal` and the mixture trace.
    GoalDistance { goal: [f64; 2], scope: AOptScope },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZetaChoice {
    MeanPoint,
    #[default]
    RangeProbability,
}

impl ZetaChoice {
    pub fn mode(self) -> ZetaMode {
        match self {
            ZetaChoice::MeanPoint => ZetaMode::MeanPoint,
            ZetaChoice::RangeProbability => ZetaMode::RangeProbability,
        }
    }
}

/// How the executing agent maintains its own belief.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InferenceSpec {
    /// Hypotheses kept after each update (heaviest first).
    pub max_hypotheses: usize,
    /// Update after every micro-step instead of once per macro-action.
    pub per_micro_step: bool,
    pub zeta: ZetaChoice,
    /// Recent poses kept in each conditional belief.
    pub pose_window: usize,
}

impl Default for InferenceSpec {
    fn default() -> Self {
        InferenceSpec { max_hypotheses: 64, per_micro_step: true, zeta: ZetaChoice::RangeProbability, pose_window: 1 }
    }
}

pub const DEFAULT_EPISODE_LENGTH: usize = 10;

fn default_episode_length() -> usize {
    DEFAULT_EPISODE_LENGTH
}

/// Declarative world description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default = "default_episode_length")]
    pub episode_length: usize,
    /// Index into `hypotheses` of the one the true pose is drawn from.
    #[serde(default)]
    pub true_hypothesis: usize,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub actions: ActionSpec,
    pub reward: RewardSpec,
    #[serde(default)]
    pub inference: InferenceSpec,
    pub landmarks: Vec<LandmarkSpec>,
    pub hypotheses: Vec<HypothesisSpec>,
}

pub(crate) fn vec2(v: [f64; 2]) -> Vector2<f64> {
    Vector2::new(v[0], v[1])
}

fn iso(sigma: f64) -> Matrix2<f64> {
    Matrix2::identity() * sigma * sigma
}

impl ScenarioConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(s).map_err(|e| Error::InvalidConfig(format!("scenario: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(format!("scenario {}: {m}", self.name)));
        if self.hypotheses.is_empty() {
            return bad("needs at least one prior hypothesis".into());
        }
        let total: f64 = self.hypotheses.iter().map(|h| h.weight).sum();
        if (total - 1.0).abs() > 1e-9 || self.hypotheses.iter().any(|h| !(h.weight >= 0.0)) {
            return bad(format!("prior hypothesis weights must sum to 1, got {total}"));
        }
        if self.true_hypothesis >= self.hypotheses.len() {
            return bad("true_hypothesis out of range".into());
        }
        if self.hypotheses.iter().any(|h| !(h.sigma > 0.0)) || self.landmarks.iter().any(|l| !(l.sigma >= 0.0)) {
            return bad("prior sigmas must be positive".into());
        }
        let a = &self.actions;
        if a.directions.is_empty() || a.micro_steps == 0 || !(a.step_length > 0.0) {
            return bad("needs at least one direction, one micro-step and a positive step length".into());
        }
        if self.inference.max_hypotheses == 0 || self.inference.pose_window == 0 {
            return bad("max_hypotheses and pose_window must be at least 1".into());
        }
        self.world()?;
        Ok(())
    }

    /// Model of a single micro-step.
    pub fn world(&self) -> Result<WorldModel> {
        let landmarks = self
            .landmarks
            .iter()
            .map(|l| LandmarkPrior { mean: vec2(l.position), cov: iso(l.sigma), class: l.class })
            .collect();
        Ok(WorldModel::new(iso(self.noise.motion_sigma), iso(self.noise.obs_sigma), self.noise.sensing_range, landmarks)?
            .with_max_poses(Some(self.inference.pose_window)))
    }

    /// Model of a whole macro-action taken as one transition: the motion
    /// noise of all micro-steps accumulates.
    pub fn macro_world(&self) -> Result<WorldModel> {
        let mut w = self.world()?;
        w.motion_noise_cov *= self.actions.micro_steps as f64;
        Ok(w)
    }

    pub fn num_actions(&self) -> usize {
        self.actions.directions.len()
    }

    /// Displacement of one micro-step of action `a`.
    pub fn micro_displacement(&self, a: usize) -> Vector2<f64> {
        let d = vec2(self.actions.directions[a]);
        d.normalize() * self.actions.step_length
    }

    pub fn macro_displacement(&self, a: usize) -> Vector2<f64> {
        self.micro_displacement(a) * self.actions.micro_steps as f64
    }

    pub fn scope(&self) -> AOptScope {
        match self.reward {
            RewardSpec::AOptimality { scope } | RewardSpec::GoalDistance { scope, .. } => scope,
        }
    }

    pub fn goal(&self) -> Option<Vector2<f64>> {
        match self.reward {
            RewardSpec::GoalDistance { goal, .. } => Some(vec2(goal)),
            RewardSpec::AOptimality { .. } => None,
        }
    }

    /// The agent's initial hybrid belief; every prior landmark is part of
    /// each conditional belief from the start.
    pub fn prior_belief(&self) -> Result<HybridBelief> {
        let world = self.world()?;
        HybridBelief::from_prior(
            self.hypotheses
                .iter()
                .map(|h| (GaussianConditionalBelief::new(vec2(h.mean), iso(h.sigma)).with_all_landmarks(&world), h.weight))
                .collect(),
        )
    }
}
