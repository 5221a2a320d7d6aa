use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};

pub type ClassId = u32;

/// Prior on one mapped landmark. The landmark id is its index in
/// [`WorldModel::landmarks`].
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkPrior {
    pub mean: Vector2<f64>,
    pub cov: Matrix2<f64>,
    pub class: ClassId,
}

/// Motion, sensing and map-prior parameters shared by every hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldModel {
    pub motion_noise_cov: Matrix2<f64>,
    pub obs_noise_cov: Matrix2<f64>,
    pub sensing_range: f64,
    pub landmarks: Vec<LandmarkPrior>,
    /// Number of most recent pose slots retained after a prediction.
    /// `None` keeps the whole trajectory.
    pub max_poses: Option<usize>,
    /// Width (in standard deviations of the radial relative position) of the
    /// band around the sensing boundary inside which both "in range" and
    /// "out of range" remain admissible during enumeration.
    pub gate_sigmas: f64,
}

impl WorldModel {
    pub fn new(
        motion_noise_cov: Matrix2<f64>,
        obs_noise_cov: Matrix2<f64>,
        sensing_range: f64,
        landmarks: Vec<LandmarkPrior>,
    ) -> Result<Self> {
        let world = WorldModel {
            motion_noise_cov,
            obs_noise_cov,
            sensing_range,
            landmarks,
            max_poses: None,
            gate_sigmas: 3.0,
        };
        world.validate()?;
        Ok(world)
    }

    pub fn validate(&self) -> Result<()> {
        check_spd("motion_noise_cov", &self.motion_noise_cov)?;
        check_spd("obs_noise_cov", &self.obs_noise_cov)?;
        if !(self.sensing_range > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "sensing_range must be positive, got {}",
                self.sensing_range
            )));
        }
        for (k, lm) in self.landmarks.iter().enumerate() {
            if !is_symmetric(&lm.cov) || lm.cov.symmetric_eigenvalues().min() < 0.0 {
                return Err(Error::InvalidConfig(format!("landmark {k} prior covariance is not PSD")));
            }
        }
        if self.max_poses == Some(0) {
            return Err(Error::InvalidConfig("max_poses must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_max_poses(mut self, max_poses: Option<usize>) -> Self {
        self.max_poses = max_poses;
        self
    }

    pub fn num_landmarks(&self) -> usize {
        self.landmarks.len()
    }

    pub fn landmark(&self, id: usize) -> Result<&LandmarkPrior> {
        self.landmarks.get(id).ok_or(Error::UnknownLandmark(id))
    }

    pub fn class_of(&self, id: usize) -> Option<ClassId> {
        self.landmarks.get(id).map(|l| l.class)
    }

    pub fn in_range(&self, relative: &Vector2<f64>) -> bool {
        relative.norm() <= self.sensing_range
    }
}

fn is_symmetric(m: &Matrix2<f64>) -> bool {
    (m[(0, 1)] - m[(1, 0)]).abs() <= 1e-12 * (1.0 + m.abs().max())
}

fn check_spd(name: &str, m: &Matrix2<f64>) -> Result<()> {
    if !is_symmetric(m) || m.cholesky().is_none() {
        return Err(Error::InvalidConfig(format!("{name} must be symmetric positive definite")));
    }
    Ok(())
}
