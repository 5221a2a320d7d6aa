//! Simulated multi-hypothesis SLAM scenarios: declarative configs, the
//! built-in aliased matrix, kidnapped robot and goal reaching worlds, the
//! ground-truth environment and the plan/act/observe/update episode loop.

mod build;
mod config;
mod domain;
mod env;
mod trial;

pub use build::{build_scenario, scenario_config, SCENARIOS};
pub use config::{
    ActionSpec, HypothesisSpec, InferenceSpec, LandmarkSpec, NoiseSpec, RewardSpec, ScenarioConfig, ZetaChoice,
    DEFAULT_EPISODE_LENGTH,
};
pub use domain::{SlamBank, SlamDomain, SlamExpansion};
pub use env::{env_step, GroundTruth};
pub use trial::{
    infer, run_trial, scenario_reward, trial_seed, BeliefSummary, StepRecord, TrialRecord, CSV_HEADER,
    SCHEMA_VERSION,
};
