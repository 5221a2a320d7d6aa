use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use rand::Rng;
use rand_distr::StandardNormal;

use super::world::WorldModel;
use crate::error::{Error, Result};

/// One 2-D block of the joint state vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    /// Agent position at the given time index.
    Pose(usize),
    /// Landmark position by landmark id.
    Landmark(usize),
}

/// Joint Gaussian over agent trajectory and landmarks, conditioned on one
/// data-association hypothesis.
///
/// Slots are kept in insertion order: a new pose or a lazily created landmark
/// is always appended, so existing blocks never move.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianConditionalBelief {
    slots: Vec<Slot>,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianConditionalBelief {
    /// Belief with a single pose slot at time 0.
    pub fn new(pose_mean: Vector2<f64>, pose_cov: Matrix2<f64>) -> Self {
        let mut cov = DMatrix::zeros(2, 2);
        cov.copy_from(&pose_cov);
        GaussianConditionalBelief {
            slots: vec![Slot::Pose(0)],
            mean: DVector::from_column_slice(pose_mean.as_slice()),
            cov,
        }
    }

    pub fn from_parts(slots: Vec<Slot>, mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = 2 * slots.len();
        if mean.len() != n || cov.nrows() != n || cov.ncols() != n {
            return Err(Error::InvalidConfig(format!(
                "belief dimension mismatch: {} slots, mean {}, cov {}x{}",
                slots.len(),
                mean.len(),
                cov.nrows(),
                cov.ncols()
            )));
        }
        if !slots.iter().any(|s| matches!(s, Slot::Pose(_))) {
            return Err(Error::NoPose);
        }
        if (&cov - cov.transpose()).abs().max() > 1e-9 * (1.0 + cov.abs().max()) {
            return Err(Error::InvalidConfig("belief covariance is not symmetric".into()));
        }
        Ok(GaussianConditionalBelief { slots, mean, cov })
    }

    /// Append every landmark of the map that is not yet represented, using
    /// the map prior (independent of everything else).
    pub fn with_all_landmarks(&self, world: &WorldModel) -> Self {
        let mut out = self.clone();
        for id in 0..world.num_landmarks() {
            if !out.has_landmark(id) {
                out.push_landmark_prior(id, world).expect("id in range");
            }
        }
        out
    }

    /// Copy of this belief that is guaranteed to hold a slot for `id`.
    pub fn with_landmark(&self, id: usize, world: &WorldModel) -> Result<Self> {
        let mut out = self.clone();
        if !out.has_landmark(id) {
            out.push_landmark_prior(id, world)?;
        }
        Ok(out)
    }

    fn push_landmark_prior(&mut self, id: usize, world: &WorldModel) -> Result<()> {
        let prior = world.landmark(id)?;
        let n = self.dim();
        self.mean = self.mean.clone().insert_rows(n, 2, 0.0);
        self.mean[n] = prior.mean.x;
        self.mean[n + 1] = prior.mean.y;
        let mut cov = DMatrix::zeros(n + 2, n + 2);
        cov.view_mut((0, 0), (n, n)).copy_from(&self.cov);
        cov.view_mut((n, n), (2, 2)).copy_from(&prior.cov);
        self.cov = cov;
        self.slots.push(Slot::Landmark(id));
        Ok(())
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Row offset of a slot's block, if present.
    pub fn offset(&self, slot: Slot) -> Option<usize> {
        self.slots.iter().position(|s| *s == slot).map(|i| 2 * i)
    }

    pub fn has_landmark(&self, id: usize) -> bool {
        self.slots.contains(&Slot::Landmark(id))
    }

    /// Landmark ids present in the belief, in slot order.
    pub fn landmark_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.slots.iter().filter_map(|s| match s {
            Slot::Landmark(id) => Some(*id),
            Slot::Pose(_) => None,
        })
    }

    /// Time index of the most recent pose.
    pub fn current_time(&self) -> usize {
        self.slots
            .iter()
            .filter_map(|s| match s {
                Slot::Pose(t) => Some(*t),
                Slot::Landmark(_) => None,
            })
            .max()
            .expect("belief always holds a pose")
    }

    fn pose_offset(&self) -> usize {
        self.offset(Slot::Pose(self.current_time())).expect("current pose present")
    }

    pub fn pose_mean(&self) -> Vector2<f64> {
        let o = self.pose_offset();
        Vector2::new(self.mean[o], self.mean[o + 1])
    }

    pub fn pose_cov(&self) -> Matrix2<f64> {
        let o = self.pose_offset();
        self.cov.fixed_view::<2, 2>(o, o).into_owned()
    }

    pub fn block_mean(&self, slot: Slot) -> Option<Vector2<f64>> {
        self.offset(slot).map(|o| Vector2::new(self.mean[o], self.mean[o + 1]))
    }

    pub fn block_cov(&self, slot: Slot) -> Option<Matrix2<f64>> {
        self.offset(slot).map(|o| self.cov.fixed_view::<2, 2>(o, o).into_owned())
    }

    pub fn landmark_mean(&self, id: usize) -> Option<Vector2<f64>> {
        self.block_mean(Slot::Landmark(id))
    }

    /// Motion prediction: a new pose `x' = x + action + w`, `w ~ N(0, Q)`, is
    /// appended with exact cross-covariances. Old poses beyond
    /// `world.max_poses` are then marginalized out.
    pub fn predict(&self, action: &Vector2<f64>, world: &WorldModel) -> Self {
        let t = self.current_time();
        let x = self.pose_offset();
        let n = self.dim();

        let mut mean = self.mean.clone().insert_rows(n, 2, 0.0);
        mean[n] = self.mean[x] + action.x;
        mean[n + 1] = self.mean[x + 1] + action.y;

        let mut cov = DMatrix::zeros(n + 2, n + 2);
        cov.view_mut((0, 0), (n, n)).copy_from(&self.cov);
        let cross = self.cov.columns(x, 2).into_owned();
        cov.view_mut((0, n), (n, 2)).copy_from(&cross);
        cov.view_mut((n, 0), (2, n)).copy_from(&cross.transpose());
        let pose_block = self.cov.fixed_view::<2, 2>(x, x) + world.motion_noise_cov;
        cov.view_mut((n, n), (2, 2)).copy_from(&pose_block);

        let mut slots = self.slots.clone();
        slots.push(Slot::Pose(t + 1));
        let out = GaussianConditionalBelief { slots, mean, cov };
        match world.max_poses {
            Some(k) => out.retain_recent_poses(k),
            None => out,
        }
    }

    /// Marginalize out all but the `k` most recent poses. Exact for a
    /// Gaussian: the corresponding rows and columns are dropped.
    pub fn retain_recent_poses(&self, k: usize) -> Self {
        let k = k.max(1);
        let mut times: Vec<usize> = self
            .slots
            .iter()
            .filter_map(|s| match s {
                Slot::Pose(t) => Some(*t),
                _ => None,
            })
            .collect();
        if times.len() <= k {
            return self.clone();
        }
        times.sort_unstable();
        let cutoff = times[times.len() - k];
        let keep: Vec<usize> = self
            .slots
            .iter()
            .enumerate()
            .filter(|(_, s)| !matches!(s, Slot::Pose(t) if *t < cutoff))
            .map(|(i, _)| i)
            .collect();
        self.select_slots(&keep)
    }

    fn select_slots(&self, keep: &[usize]) -> Self {
        let rows: Vec<usize> = keep.iter().flat_map(|&i| [2 * i, 2 * i + 1]).collect();
        let m = rows.len();
        let mean = DVector::from_fn(m, |r, _| self.mean[rows[r]]);
        let cov = DMatrix::from_fn(m, m, |r, c| self.cov[(rows[r], rows[c])]);
        GaussianConditionalBelief {
            slots: keep.iter().map(|&i| self.slots[i]).collect(),
            mean,
            cov,
        }
    }

    /// Mean and covariance of the landmark-minus-pose vector `l - x`. A
    /// landmark without a slot contributes its (independent) map prior.
    pub fn relative(&self, id: usize, world: &WorldModel) -> Result<(Vector2<f64>, Matrix2<f64>)> {
        let x = self.pose_offset();
        let pose_mean = Vector2::new(self.mean[x], self.mean[x + 1]);
        let pxx = self.cov.fixed_view::<2, 2>(x, x).into_owned();
        match self.offset(Slot::Landmark(id)) {
            Some(l) => {
                let lm = Vector2::new(self.mean[l], self.mean[l + 1]);
                let pll = self.cov.fixed_view::<2, 2>(l, l);
                let plx = self.cov.fixed_view::<2, 2>(l, x);
                let cov = pll + pxx - plx - plx.transpose();
                Ok((lm - pose_mean, symmetrize2(&cov)))
            }
            None => {
                let prior = world.landmark(id)?;
                Ok((prior.mean - pose_mean, prior.cov + pxx))
            }
        }
    }

    /// Exact Kalman update with the observation `z = l_id - x + v`,
    /// `v ~ N(0, R)`.
    pub fn update(&self, z: &Vector2<f64>, id: usize, world: &WorldModel) -> Result<Self> {
        let base = self.with_landmark(id, world)?;
        let x = base.pose_offset();
        let l = base.offset(Slot::Landmark(id)).expect("slot ensured");
        let (pred, rel_cov) = base.relative(id, world)?;
        let s = rel_cov + world.obs_noise_cov;
        let s_inv = invert_innovation(&s, id)?;

        // P H^T for H = [.. -I (pose) .. +I (landmark) ..]
        let pht = base.cov.columns(l, 2) - base.cov.columns(x, 2);
        let gain = &pht * s_inv;
        let innovation = z - pred;

        let mean = &base.mean + &gain * innovation;
        let mut cov = &base.cov - &gain * pht.transpose();
        symmetrize(&mut cov);
        Ok(GaussianConditionalBelief { slots: base.slots, mean, cov })
    }

    /// Sequentially apply several (observation, landmark) pairs.
    pub fn update_many(&self, pairs: &[(Vector2<f64>, usize)], world: &WorldModel) -> Result<Self> {
        let mut b = self.clone();
        for (z, id) in pairs {
            b = b.update(z, *id, world)?;
        }
        Ok(b)
    }

    /// Density of a single observation element under the (already
    /// predicted) belief: `N(z; E[l - x], Cov(l - x) + R)`.
    pub fn marginal_likelihood(&self, z: &Vector2<f64>, id: usize, world: &WorldModel) -> Result<f64> {
        let (pred, rel_cov) = self.relative(id, world)?;
        let s = rel_cov + world.obs_noise_cov;
        let chol = s.cholesky().ok_or_else(|| Error::SingularInnovation {
            landmark: id,
            detail: format!("{s:?}"),
        })?;
        let nu = z - pred;
        let maha = nu.dot(&chol.solve(&nu));
        let det = chol.determinant();
        Ok((-0.5 * maha).exp() / (2.0 * PI * det.sqrt()))
    }

    /// Joint density of several observation elements, accounting for the
    /// correlation they share through the pose and the map.
    pub fn joint_marginal_likelihood(&self, pairs: &[(Vector2<f64>, usize)], world: &WorldModel) -> Result<f64> {
        if pairs.is_empty() {
            return Ok(1.0);
        }
        if pairs.len() == 1 {
            return self.marginal_likelihood(&pairs[0].0, pairs[0].1, world);
        }
        let mut base = self.clone();
        for (_, id) in pairs {
            if !base.has_landmark(*id) {
                base.push_landmark_prior(*id, world)?;
            }
        }
        let x = base.pose_offset();
        let m = pairs.len();
        let offsets: Vec<usize> = pairs
            .iter()
            .map(|(_, id)| base.offset(Slot::Landmark(*id)).expect("ensured"))
            .collect();
        let mut s = DMatrix::zeros(2 * m, 2 * m);
        let mut nu = DVector::zeros(2 * m);
        let pxx = base.cov.fixed_view::<2, 2>(x, x).into_owned();
        for i in 0..m {
            let li = offsets[i];
            let pred = Vector2::new(base.mean[li] - base.mean[x], base.mean[li + 1] - base.mean[x + 1]);
            let r = pairs[i].0 - pred;
            nu[2 * i] = r.x;
            nu[2 * i + 1] = r.y;
            for j in 0..m {
                let lj = offsets[j];
                let block = base.cov.fixed_view::<2, 2>(li, lj) - base.cov.fixed_view::<2, 2>(li, x)
                    - base.cov.fixed_view::<2, 2>(x, lj)
                    + pxx;
                s.view_mut((2 * i, 2 * j), (2, 2)).copy_from(&block);
            }
            let diag = s.fixed_view::<2, 2>(2 * i, 2 * i) + world.obs_noise_cov;
            s.view_mut((2 * i, 2 * i), (2, 2)).copy_from(&diag);
        }
        symmetrize(&mut s);
        let chol = s.clone().cholesky().ok_or_else(|| Error::SingularInnovation {
            landmark: pairs[0].1,
            detail: "joint innovation covariance".into(),
        })?;
        let maha = nu.dot(&chol.solve(&nu));
        let log_det: f64 = chol.l_dirty().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
        Ok((-0.5 * maha - 0.5 * log_det - m as f64 * (2.0 * PI).ln()).exp())
    }

    /// Draw one joint state sample.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> StatePoint<'_> {
        let factor = square_root(&self.cov);
        self.sample_with(&factor, rng)
    }

    /// Draw `n` samples reusing one factorization.
    pub fn samples<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<StatePoint<'_>> {
        let factor = square_root(&self.cov);
        (0..n).map(|_| self.sample_with(&factor, rng)).collect()
    }

    fn sample_with<R: Rng + ?Sized>(&self, factor: &DMatrix<f64>, rng: &mut R) -> StatePoint<'_> {
        let eps = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        StatePoint { slots: &self.slots, values: &self.mean + factor * eps }
    }

    /// Point at the belief mean.
    pub fn mean_point(&self) -> StatePoint<'_> {
        StatePoint { slots: &self.slots, values: self.mean.clone() }
    }
}

/// A realized joint state laid out like the belief it was drawn from.
#[derive(Debug, Clone)]
pub struct StatePoint<'a> {
    slots: &'a [Slot],
    values: DVector<f64>,
}

impl<'a> StatePoint<'a> {
    pub fn new(slots: &'a [Slot], values: DVector<f64>) -> Self {
        assert_eq!(values.len(), 2 * slots.len());
        StatePoint { slots, values }
    }

    pub fn block(&self, slot: Slot) -> Option<Vector2<f64>> {
        self.slots
            .iter()
            .position(|s| *s == slot)
            .map(|i| Vector2::new(self.values[2 * i], self.values[2 * i + 1]))
    }

    /// Most recent pose.
    pub fn pose(&self) -> Vector2<f64> {
        let t = self
            .slots
            .iter()
            .filter_map(|s| match s {
                Slot::Pose(t) => Some(*t),
                _ => None,
            })
            .max()
            .expect("pose slot");
        self.block(Slot::Pose(t)).expect("pose slot")
    }

    pub fn landmark(&self, id: usize) -> Option<Vector2<f64>> {
        self.block(Slot::Landmark(id))
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }
}

/// Lower square-root factor `L` with `L L^T = cov`. Falls back to a clamped
/// eigen-decomposition when the covariance is only semi-definite.
pub fn square_root(cov: &DMatrix<f64>) -> DMatrix<f64> {
    if let Some(chol) = cov.clone().cholesky() {
        return chol.l();
    }
    let eig = cov.clone().symmetric_eigen();
    let sqrt_vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals)
}

fn invert_innovation(s: &Matrix2<f64>, landmark: usize) -> Result<Matrix2<f64>> {
    let det = s.determinant();
    if !(det > 1e-300) || s[(0, 0)] <= 0.0 {
        return Err(Error::SingularInnovation { landmark, detail: format!("det = {det:e}") });
    }
    s.try_inverse()
        .ok_or_else(|| Error::SingularInnovation { landmark, detail: "not invertible".into() })
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

fn symmetrize2(m: &Matrix2<f64>) -> Matrix2<f64> {
    0.5 * (m + m.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::world::LandmarkPrior;

    fn world(q: f64, r: f64, landmarks: Vec<LandmarkPrior>) -> WorldModel {
        WorldModel {
            motion_noise_cov: Matrix2::identity() * q,
            obs_noise_cov: Matrix2::identity() * r,
            sensing_range: 100.0,
            landmarks,
            max_poses: None,
            gate_sigmas: 3.0,
        }
    }

    fn lm(x: f64, y: f64, var: f64) -> LandmarkPrior {
        LandmarkPrior { mean: Vector2::new(x, y), cov: Matrix2::identity() * var, class: 0 }
    }

    fn npdf(x: f64, m: f64, v: f64) -> f64 {
        (-(x - m) * (x - m) / (2.0 * v)).exp() / (2.0 * PI * v).sqrt()
    }

    /// Posterior mean/var of (x, l) for z = l - x + v on one axis, by
    /// trapezoidal integration over a (x, l) grid.
    fn quadrature_posterior(mx: f64, vx: f64, ml: f64, vl: f64, z: f64, r: f64) -> [f64; 5] {
        let n = 801;
        let (sx, sl) = (vx.sqrt(), vl.sqrt());
        let hx = 16.0 * sx / (n - 1) as f64;
        let hl = 16.0 * sl / (n - 1) as f64;
        let mut acc = [0.0; 6];
        for i in 0..n {
            let x = mx - 8.0 * sx + i as f64 * hx;
            for j in 0..n {
                let l = ml - 8.0 * sl + j as f64 * hl;
                let w = npdf(x, mx, vx) * npdf(l, ml, vl) * npdf(z, l - x, r);
                acc[0] += w;
                acc[1] += w * x;
                acc[2] += w * l;
                acc[3] += w * x * x;
                acc[4] += w * l * l;
                acc[5] += w * x * l;
            }
        }
        let ex = acc[1] / acc[0];
        let el = acc[2] / acc[0];
        [ex, el, acc[3] / acc[0] - ex * ex, acc[4] / acc[0] - el * el, acc[5] / acc[0] - ex * el]
    }

    #[test]
    fn zero_action_zero_noise_duplicates_pose_block() {
        let w = WorldModel { motion_noise_cov: Matrix2::zeros(), ..world(1.0, 1.0, vec![lm(3.0, 4.0, 2.0)]) };
        let b = GaussianConditionalBelief::new(Vector2::new(1.0, 2.0), Matrix2::new(2.0, 0.5, 0.5, 1.0))
            .with_all_landmarks(&w);
        let p = b.predict(&Vector2::zeros(), &w);
        assert_eq!(p.slots(), &[Slot::Pose(0), Slot::Landmark(0), Slot::Pose(1)]);
        assert_eq!(p.block_mean(Slot::Pose(1)), b.block_mean(Slot::Pose(0)));
        let c = p.cov();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(c[(4 + i, 4 + j)], c[(i, j)]);
                assert_eq!(c[(4 + i, j)], c[(i, j)]);
            }
        }
        assert_eq!(p.mean().rows(0, 4), b.mean().rows(0, 4));
    }

    #[test]
    fn one_dimensional_prediction() {
        let w = world(0.25, 1.0, vec![]);
        let b = GaussianConditionalBelief::new(Vector2::zeros(), Matrix2::identity());
        let p = b.predict(&Vector2::new(4.0, 0.0), &w);
        assert_eq!(p.pose_mean().x, 4.0);
        assert!((p.pose_cov()[(0, 0)] - 1.25).abs() < 1e-15);
    }

    #[test]
    fn split_prediction_matches_summed_action_with_doubled_noise() {
        let w = world(0.3, 1.0, vec![]);
        let w2 = world(0.6, 1.0, vec![]);
        let b = GaussianConditionalBelief::new(Vector2::zeros(), Matrix2::identity());
        let two = b.predict(&Vector2::new(2.0, 2.0), &w).predict(&Vector2::new(2.0, 2.0), &w);
        let one = b.predict(&Vector2::new(4.0, 4.0), &w2);
        assert!((two.pose_cov() - one.pose_cov()).abs().max() < 1e-12);
        assert!((two.pose_mean() - one.pose_mean()).norm() < 1e-12);
    }

    #[test]
    fn retaining_poses_marginalizes_exactly() {
        let w = world(0.5, 1.0, vec![lm(5.0, 0.0, 1.0)]);
        let b = GaussianConditionalBelief::new(Vector2::zeros(), Matrix2::identity()).with_all_landmarks(&w);
        let b = b.predict(&Vector2::new(1.0, 0.0), &w).update(&Vector2::new(4.1, 0.2), 0, &w).unwrap();
        let full = b.predict(&Vector2::new(1.0, 0.0), &w);
        let windowed = b.predict(&Vector2::new(1.0, 0.0), &w.clone().with_max_poses(Some(1)));
        assert_eq!(windowed.slots(), &[Slot::Landmark(0), Slot::Pose(2)]);
        assert!((windowed.pose_cov() - full.pose_cov()).abs().max() < 1e-14);
        assert_eq!(windowed.landmark_mean(0), full.landmark_mean(0));
    }

    #[test]
    fn uninformative_measurement_leaves_belief_unchanged() {
        let w = world(0.1, 1e12, vec![lm(10.0, 0.0, 1.0)]);
        let b = GaussianConditionalBelief::new(Vector2::zeros(), Matrix2::identity()).with_all_landmarks(&w);
        let u = b.update(&Vector2::new(3.0, -7.0), 0, &w).unwrap();
        assert!((u.mean() - b.mean()).abs().max() < 1e-6);
        assert!((u.cov() - b.cov()).abs().max() < 1e-6);
    }

    #[test]
    fn kalman_update_matches_quadrature_on_independent_axes() {
        // axis x: x ~ N(0,1), l ~ N(10,1), z = 9, R = 1; axis y: x ~ N(1,2), l ~ N(-1,0.5), z = -1.5, R = 0.3
        let mut w = world(0.1, 1.0, vec![]);
        w.obs_noise_cov = Matrix2::new(1.0, 0.0, 0.0, 0.3);
        w.landmarks.push(LandmarkPrior {
            mean: Vector2::new(10.0, -1.0),
            cov: Matrix2::new(1.0, 0.0, 0.0, 0.5),
            class: 0,
        });
        let b = GaussianConditionalBelief::new(Vector2::new(0.0, 1.0), Matrix2::new(1.0, 0.0, 0.0, 2.0))
            .with_all_landmarks(&w);
        let u = b.update(&Vector2::new(9.0, -1.5), 0, &w).unwrap();
        let qx = quadrature_posterior(0.0, 1.0, 10.0, 1.0, 9.0, 1.0);
        let qy = quadrature_posterior(1.0, 2.0, -1.0, 0.5, -1.5, 0.3);
        let (m, c) = (u.mean(), u.cov());
        for (axis, q) in [(0usize, qx), (1usize, qy)] {
            assert!((m[axis] - q[0]).abs() < 1e-6, "pose mean axis {axis}");
            assert!((m[2 + axis] - q[1]).abs() < 1e-6, "landmark mean axis {axis}");
            assert!((c[(axis, axis)] - q[2]).abs() < 1e-6);
            assert!((c[(2 + axis, 2 + axis)] - q[3]).abs() < 1e-6);
            assert!((c[(axis, 2 + axis)] - q[4]).abs() < 1e-6);
        }
        // closed form on axis x: posterior of l - x has var 2*1/(2+1)
        assert!((m[2] - m[0] - (10.0 + 2.0 / 3.0 * (9.0 - 10.0))).abs() < 1e-12);
    }

    #[test]
    fn correlated_landmark_update_matches_2d_quadrature() {
        // pose essentially known, correlated 2-D landmark prior
        let lc = Matrix2::new(1.5, 0.6, 0.6, 0.8);
        let r = Matrix2::new(0.5, -0.1, -0.1, 0.4);
        let mut w = world(0.1, 1.0, vec![LandmarkPrior { mean: Vector2::new(3.0, 1.0), cov: lc, class: 0 }]);
        w.obs_noise_cov = r;
        let b = GaussianConditionalBelief::new(Vector2::new(0.5, -0.5), Matrix2::identity() * 1e-12)
            .with_all_landmarks(&w);
        let z = Vector2::new(3.1, 1.0);
        let u = b.update(&z, 0, &w).unwrap();

        let li = lc.try_inverse().unwrap();
        let ri = r.try_inverse().unwrap();
        let n = 601;
        let h = 14.0 / (n - 1) as f64;
        let (mut s0, mut s1, mut s2, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let l = Vector2::new(3.0 - 7.0 + i as f64 * h, 1.0 - 7.0 + j as f64 * h);
                let d = l - Vector2::new(3.0, 1.0);
                let e = z - (l - Vector2::new(0.5, -0.5));
                let wgt = (-0.5 * d.dot(&(li * d)) - 0.5 * e.dot(&(ri * e))).exp();
                s0 += wgt;
                s1 += wgt * l.x;
                s2 += wgt * l.y;
                sxx += wgt * l.x * l.x;
                syy += wgt * l.y * l.y;
                sxy += wgt * l.x * l.y;
            }
        }
        let (ex, ey) = (s1 / s0, s2 / s0);
        let lmean = u.landmark_mean(0).unwrap();
        let lcov = u.block_cov(Slot::Landmark(0)).unwrap();
        assert!((lmean.x - ex).abs() < 1e-6 && (lmean.y - ey).abs() < 1e-6);
        assert!((lcov[(0, 0)] - (sxx / s0 - ex * ex)).abs() < 1e-6);
        assert!((lcov[(1, 1)] - (syy / s0 - ey * ey)).abs() < 1e-6);
        assert!((lcov[(0, 1)] - (sxy / s0 - ex * ey)).abs() < 1e-6);
    }

    #[test]
    fn repeated_measurement_equals_half_noise() {
        let w = world(0.1, 0.8, vec![lm(4.0, 2.0, 2.0)]);
        let w_half = world(0.1, 0.4, vec![lm(4.0, 2.0, 2.0)]);
        let b = GaussianConditionalBelief::new(Vector2::zeros(), Matrix2::identity()).with_all_landmarks(&w);
        let z = Vector2::new(3.5, 2.5);
        let twice = b.update(&z, 0, &w).unwrap().update(&z, 0, &w).unwrap();
        let once = b.update(&z, 0, &w_half).unwrap();
        assert!((twice.mean() - once.mean()).abs().max() < 1e-12);
        assert!((twice.cov() - once.cov()).abs().max() < 1e-12);
    }

    #[test]
    fn posterior_covariance_shrinks_in_loewner_order() {
        let w = world(0.1, 0.5, vec![lm(4.0, 2.0, 2.0), lm(-3.0, 1.0, 1.0)]);
        let b = GaussianConditionalBelief::new(Vector2::zeros(), Matrix2::new(1.0, 0.3, 0.3, 2.0))
            .with_all_landmarks(&w);
        let u = b.update(&Vector2::new(4.2, 1.8), 0, &w).unwrap();
        let diff = b.cov() - u.cov();
        assert!(diff.symmetric_eigenvalues().min() > -1e-12);
    }

    #[test]
    fn singular_innovation_is_reported() {
        let mut w = world(0.1, 1.0, vec![LandmarkPrior { mean: Vector2::new(1.0, 0.0), cov: Matrix2::zeros(), class: 0 }]);
        w.obs_noise_cov = Matrix2::zeros();
        let b = GaussianConditionalBelief::new(Vector2::zeros(), Matrix2::zeros()).with_all_landmarks(&w);
        assert!(matches!(b.update(&Vector2::new(1.0, 0.0), 0, &w), Err(Error::SingularInnovation { .. })));
        assert!(b.marginal_likelihood(&Vector2::new(1.0, 0.0), 0, &w).is_err());
    }

    #[test]
    fn lazily_created_landmark_equals_explicit_slot() {
        let w = world(0.1, 0.5, vec![lm(4.0, 2.0, 2.0)]);
        let b = GaussianConditionalBelief::new(Vector2::zeros(), Matrix2::identity());
        let lazy = b.update(&Vector2::new(3.9, 2.2), 0, &w).unwrap();
        let eager = b.with_all_landmarks(&w).update(&Vector2::new(3.9, 2.2), 0, &w).unwrap();
        assert_eq!(lazy.slots(), eager.slots());
        assert!((lazy.cov() - eager.cov()).abs().max() < 1e-15);
    }

    #[test]
    fn unrelated_landmark_marginal_untouched() {
        let w = world(0.2, 0.5, vec![lm(4.0, 2.0, 2.0), lm(-30.0, 5.0, 3.0)]);
        let b = GaussianConditionalBelief::new(Vector2::zeros(), Matrix2::identity()).with_all_landmarks(&w);
        let u = b.predict(&Vector2::new(1.0, 0.0), &w).update(&Vector2::new(3.0, 2.0), 0, &w).unwrap();
        assert!((u.landmark_mean(1).unwrap() - b.landmark_mean(1).unwrap()).norm() < 1e-9);
        assert!((u.block_cov(Slot::Landmark(1)).unwrap() - b.block_cov(Slot::Landmark(1)).unwrap()).abs().max() < 1e-9);
    }

    #[test]
    fn peak_density_and_scalar_case() {
        // axis x: innovation N(9, 3); axis y: innovation N(0, 3)
        let w = world(0.1, 1.0, vec![lm(10.0, 0.0, 1.0)]);
        let b = GaussianConditionalBelief::new(Vector2::new(1.0, 0.0), Matrix2::identity());
        let at_mode = b.marginal_likelihood(&Vector2::new(9.0, 0.0), 0, &w).unwrap();
        let expected = 1.0 / (6.0 * PI);
        assert!((at_mode - expected).abs() < 1e-15);
        // scalar cross-check by quadrature of the x-axis convolution
        let n = 801;
        let h = 16.0 / (n - 1) as f64;
        let mut q = 0.0;
        for i in 0..n {
            let x = 1.0 - 8.0 + i as f64 * h;
            for j in 0..n {
                let l = 10.0 - 8.0 + j as f64 * h;
                q += npdf(x, 1.0, 1.0) * npdf(l, 10.0, 1.0) * npdf(9.0, l - x, 1.0) * h * h;
            }
        }
        assert!((q - 1.0 / (6.0 * PI).sqrt()).abs() < 1e-6, "{q}");
    }

    #[test]
    fn marginal_likelihood_integrates_to_one() {
        let mut w = world(0.1, 0.3, vec![lm(2.0, 1.0, 0.7)]);
        w.obs_noise_cov = Matrix2::new(0.3, 0.1, 0.1, 0.5);
        let b = GaussianConditionalBelief::new(Vector2::new(0.2, -0.4), Matrix2::new(0.5, 0.2, 0.2, 0.4))
            .with_all_landmarks(&w);
        let n = 401;
        let h = 16.0 / (n - 1) as f64;
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let z = Vector2::new(1.8 - 8.0 + i as f64 * h, 1.4 - 8.0 + j as f64 * h);
                total += b.marginal_likelihood(&z, 0, &w).unwrap() * h * h;
            }
        }
        assert!((total - 1.0).abs() < 1e-4, "{total}");
    }

    #[test]
    fn symmetric_landmarks_give_equal_likelihoods() {
        let w = world(0.1, 0.3, vec![lm(-5.0, 0.0, 0.5), lm(5.0, 0.0, 0.5)]);
        let b = GaussianConditionalBelief::new(Vector2::zeros(), Matrix2::identity()).with_all_landmarks(&w);
        let z = Vector2::new(0.0, 0.0);
        let a = b.marginal_likelihood(&z, 0, &w).unwrap();
        let c = b.marginal_likelihood(&z, 1, &w).unwrap();
        assert!((a - c).abs() < 1e-15);
    }

    #[test]
    fn joint_likelihood_equals_sequential_chain_rule() {
        let w = world(0.1, 0.3, vec![lm(2.0, 1.0, 0.7), lm(-1.0, 3.0, 0.4)]);
        let b = GaussianConditionalBelief::new(Vector2::new(0.2, -0.4), Matrix2::new(0.5, 0.2, 0.2, 0.4))
            .with_all_landmarks(&w);
        let z0 = Vector2::new(1.5, 1.2);
        let z1 = Vector2::new(-1.4, 3.6);
        let joint = b.joint_marginal_likelihood(&[(z0, 0), (z1, 1)], &w).unwrap();
        let first = b.marginal_likelihood(&z0, 0, &w).unwrap();
        let second = b.update(&z0, 0, &w).unwrap().marginal_likelihood(&z1, 1, &w).unwrap();
        assert!((joint - first * second).abs() < 1e-12 * joint.max(1e-300) + 1e-15);
    }

    #[test]
    fn samples_have_belief_moments() {
        let w = world(0.1, 0.3, vec![lm(2.0, 1.0, 0.7)]);
        let b = GaussianConditionalBelief::new(Vector2::new(1.0, -2.0), Matrix2::new(0.5, 0.2, 0.2, 0.4))
            .with_all_landmarks(&w);
        let mut rng = crate::rng_from_seed(3);
        let n = 20_000;
        let xs: Vec<f64> = b.samples(n, &mut rng).iter().map(|s| s.pose().x).collect();
        let m = crate::stats::mean(&xs);
        assert!((m - 1.0).abs() < 3.0 * (0.5f64 / n as f64).sqrt() * 1.5);
    }

    #[test]
    fn degenerate_covariance_samples_the_mean() {
        let b = GaussianConditionalBelief::new(Vector2::new(1.0, 2.0), Matrix2::zeros());
        let mut rng = crate::rng_from_seed(1);
        assert_eq!(b.sample(&mut rng).pose(), Vector2::new(1.0, 2.0));
    }
}
