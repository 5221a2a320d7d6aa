use nalgebra::{Matrix2, Vector2};
use rand::Rng;
use rand_distr::StandardNormal;

use super::config::{vec2, ScenarioConfig};
use crate::association::{ObservationArray, ObservationElement};
use crate::belief::WorldModel;
use crate::error::{Error, Result};
use crate::{stream_rng, SimRng};

/// Draw from `N(0, cov)` for a 2×2 covariance.
pub(crate) fn gaussian2(cov: &Matrix2<f64>, rng: &mut SimRng) -> Vector2<f64> {
    let l = cov.cholesky().map(|c| c.l()).unwrap_or_else(Matrix2::zeros);
    l * Vector2::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Noisy detections of every landmark within sensing range of `pose`, in
/// landmark order.
pub(crate) fn observe(
    pose: &Vector2<f64>,
    landmarks: impl Iterator<Item = Vector2<f64>>,
    world: &WorldModel,
    rng: &mut SimRng,
) -> ObservationArray {
    let mut real = Vec::new();
    for (k, l) in landmarks.enumerate() {
        let rel = l - pose;
        if world.in_range(&rel) {
            real.push(ObservationElement { z: rel + gaussian2(&world.obs_noise_cov, rng), class: world.landmarks[k].class });
        }
    }
    ObservationArray::new(real, world.num_landmarks()).expect("at most one detection per landmark")
}

/// The simulated world the agent acts in.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub pose: Vector2<f64>,
    pub landmarks: Vec<Vector2<f64>>,
    /// Every true pose so far, starting with the initial one.
    pub trajectory: Vec<Vector2<f64>>,
    rng: SimRng,
}

impl GroundTruth {
    /// True pose and landmarks drawn from the scenario priors (the pose from
    /// the designated true hypothesis).
    pub fn sample(config: &ScenarioConfig, seed: u64) -> Result<Self> {
        let world = config.world()?;
        let mut rng = stream_rng(seed, 0);
        let landmarks: Vec<Vector2<f64>> =
            world.landmarks.iter().map(|l| l.mean + gaussian2(&l.cov, &mut rng)).collect();
        let h = config.hypotheses.get(config.true_hypothesis).ok_or_else(|| Error::InvalidConfig("true hypothesis".into()))?;
        let pose = vec2(h.mean) + gaussian2(&(Matrix2::identity() * h.sigma * h.sigma), &mut rng);
        Ok(GroundTruth { pose, landmarks, trajectory: vec![pose], rng: stream_rng(seed, 1) })
    }

    /// Execute macro-action `a`: every micro-step moves the true pose with
    /// motion noise and emits one observation array.
    pub fn step(&mut self, config: &ScenarioConfig, world: &WorldModel, a: usize) -> Vec<ObservationArray> {
        let d = config.micro_displacement(a);
        (0..config.actions.micro_steps)
            .map(|_| {
                self.pose += d + gaussian2(&world.motion_noise_cov, &mut self.rng);
                self.trajectory.push(self.pose);
                observe(&self.pose, self.landmarks.iter().copied(), world, &mut self.rng)
            })
            .collect()
    }
}

/// Functional form of [`GroundTruth::step`].
pub fn env_step(
    gt: &GroundTruth,
    config: &ScenarioConfig,
    a: usize,
) -> Result<(GroundTruth, Vec<ObservationArray>)> {
    let world = config.world()?;
    let mut next = gt.clone();
    let obs = next.step(config, &world, a);
    Ok((next, obs))
}
