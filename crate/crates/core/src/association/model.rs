use std::f64::consts::{PI, SQRT_2};

use nalgebra::{Matrix2, Vector2};
use statrs::function::erf::erfc;

use super::observation::ObservationArray;
use super::path::AssociationVector;
use crate::belief::{GaussianConditionalBelief, StatePoint, WorldModel};
use crate::error::{Error, Result};

/// Observation-model column of the negative-information table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservationFactor {
    /// Sensor density `f(z | x, l)`.
    Density,
    One,
    Zero,
}

/// `P(z^{β_k} | x, l^k)` by case: a real element is explained only by an
/// in-range landmark; an out-of-range element only by an out-of-range one.
pub fn observation_factor(element_is_real: bool, in_range: bool) -> ObservationFactor {
    match (element_is_real, in_range) {
        (true, true) => ObservationFactor::Density,
        (true, false) => ObservationFactor::Zero,
        (false, true) => ObservationFactor::Zero,
        (false, false) => ObservationFactor::One,
    }
}

/// `P(β_k | x, l^k)` up to the uniform choice among real elements: a landmark
/// may claim a real element only when in range, and a padding element only
/// when out of range.
pub fn association_factor(beta_is_real: bool, in_range: bool) -> f64 {
    if beta_is_real == in_range {
        1.0
    } else {
        0.0
    }
}

/// `P(z^{β_k} | x, l^k)` for one landmark with relative position `rel`;
/// `element` is `None` for a padding (out-of-range) element.
pub fn landmark_observation_likelihood(element: Option<&Vector2<f64>>, rel: &Vector2<f64>, world: &WorldModel) -> f64 {
    match observation_factor(element.is_some(), world.in_range(rel)) {
        ObservationFactor::Density => gaussian2(&(element.expect("real") - rel), &world.obs_noise_cov),
        ObservationFactor::One => 1.0,
        ObservationFactor::Zero => 0.0,
    }
}

fn landmark_at(point: &StatePoint<'_>, k: usize, world: &WorldModel) -> Vector2<f64> {
    point.landmark(k).unwrap_or_else(|| world.landmarks[k].mean)
}

fn gaussian2(residual: &Vector2<f64>, cov: &Matrix2<f64>) -> f64 {
    match cov.try_inverse() {
        Some(inv) => (-0.5 * residual.dot(&(inv * residual))).exp() / (2.0 * PI * cov.determinant().sqrt()),
        None => 0.0,
    }
}

/// Association model `P(β | X)` evaluated at a point state.
pub fn association_likelihood(
    assignment: &AssociationVector,
    obs: &ObservationArray,
    point: &StatePoint<'_>,
    world: &WorldModel,
) -> f64 {
    let n_z = obs.n_z();
    let x = point.pose();
    let mut p = 1.0;
    for (k, &beta) in assignment.entries().iter().enumerate() {
        let in_range = world.in_range(&(landmark_at(point, k, world) - x));
        let real = beta < n_z;
        if real {
            if world.class_of(k) != obs.element(beta).map(|e| e.class) {
                return 0.0;
            }
            p *= association_factor(true, in_range) / n_z as f64;
        } else {
            p *= association_factor(false, in_range);
        }
        if p == 0.0 {
            return 0.0;
        }
    }
    p
}

/// Observation model `P(z | X, β) = Π_k P(z^{β_k} | x, l^k)` at a point state.
pub fn observation_likelihood(
    assignment: &AssociationVector,
    obs: &ObservationArray,
    point: &StatePoint<'_>,
    world: &WorldModel,
) -> f64 {
    let x = point.pose();
    let mut p = 1.0;
    for (k, &beta) in assignment.entries().iter().enumerate() {
        let rel = landmark_at(point, k, world) - x;
        p *= landmark_observation_likelihood(obs.element(beta).map(|e| &e.z), &rel, world);
        if p == 0.0 {
            return 0.0;
        }
    }
    p
}

/// Radial statistics of `l_k - x`: (distance of the mean, std along the mean
/// direction).
fn radial(belief: &GaussianConditionalBelief, k: usize, world: &WorldModel) -> Result<(f64, f64)> {
    let (m, cov) = belief.relative(k, world)?;
    let d = m.norm();
    let var = if d > 1e-12 {
        let u = m / d;
        u.dot(&(cov * u))
    } else {
        cov.symmetric_eigenvalues().max()
    };
    Ok((d, var.max(0.0).sqrt()))
}

/// Probability that landmark `k` is within sensing range under the belief,
/// using a Gaussian approximation of the distance along the mean direction.
/// Reduces to the range indicator at the mean for a degenerate belief.
pub fn range_probability(belief: &GaussianConditionalBelief, k: usize, world: &WorldModel) -> Result<f64> {
    let (d, sd) = radial(belief, k, world)?;
    if sd == 0.0 {
        return Ok(if d <= world.sensing_range { 1.0 } else { 0.0 });
    }
    Ok(0.5 * erfc(-(world.sensing_range - d) / (sd * SQRT_2)))
}

/// Every association vector admissible for `obs` under `belief`.
///
/// Each real element must be claimed by exactly one landmark of the same
/// class whose mean lies within `sensing_range + gate_sigmas * σ_radial`;
/// the remaining landmarks take canonical padding indices. Output is sorted
/// lexicographically. An empty result means no hypothesis explains `obs`.
pub fn feasible_associations(
    belief: &GaussianConditionalBelief,
    world: &WorldModel,
    obs: &ObservationArray,
) -> Result<Vec<AssociationVector>> {
    let n_l = world.num_landmarks();
    if obs.len() != n_l {
        return Err(Error::InvalidConfig(format!(
            "observation array length {} does not match {} mapped landmarks",
            obs.len(),
            n_l
        )));
    }
    let mut gate = Vec::with_capacity(n_l);
    for k in 0..n_l {
        let (d, sd) = radial(belief, k, world)?;
        gate.push(d <= world.sensing_range + world.gate_sigmas * sd);
    }
    let n_z = obs.n_z();
    let candidates: Vec<Vec<usize>> = obs
        .real()
        .iter()
        .map(|e| (0..n_l).filter(|&k| gate[k] && world.landmarks[k].class == e.class).collect())
        .collect();

    let mut out = Vec::new();
    let mut claimed: Vec<Option<usize>> = vec![None; n_l];
    assign(0, &candidates, &mut claimed, &mut out, n_z);
    out.sort();
    Ok(out)
}

fn assign(
    j: usize,
    candidates: &[Vec<usize>],
    claimed: &mut Vec<Option<usize>>,
    out: &mut Vec<AssociationVector>,
    n_z: usize,
) {
    if j == candidates.len() {
        let mut next_null = n_z;
        let v = claimed
            .iter()
            .map(|c| {
                c.unwrap_or_else(|| {
                    next_null += 1;
                    next_null - 1
                })
            })
            .collect();
        out.push(AssociationVector(v));
        return;
    }
    for &k in &candidates[j] {
        if claimed[k].is_none() {
            claimed[k] = Some(j);
            assign(j + 1, candidates, claimed, out, n_z);
            claimed[k] = None;
        }
    }
}

/// How the state integral inside `ζ` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZetaMode {
    /// Range indicators and association model at the belief mean, times the
    /// exact Gaussian marginal of the real elements.
    MeanPoint,
    /// Average of the full integrand over seeded state samples.
    MonteCarlo { samples: usize, seed: u64 },
    /// Range indicators replaced by their probabilities under the belief
    /// (radial Gaussian approximation), times the exact Gaussian marginal.
    RangeProbability,
}

/// Evidence `ζ = ∫ P(z | X, β) P(β | X) b(X) dX` of one association vector
/// under a predicted conditional belief.
pub fn zeta(
    belief: &GaussianConditionalBelief,
    obs: &ObservationArray,
    assignment: &AssociationVector,
    world: &WorldModel,
    mode: ZetaMode,
) -> Result<f64> {
    let n_z = obs.n_z();
    for (k, beta) in assignment.real_pairs(n_z) {
        if world.class_of(k) != obs.element(beta).map(|e| e.class) {
            return Ok(0.0);
        }
    }
    let real_pairs: Vec<(Vector2<f64>, usize)> =
        assignment.real_pairs(n_z).map(|(k, b)| (obs.element(b).expect("real").z, k)).collect();

    match mode {
        ZetaMode::MeanPoint => {
            let point = belief.mean_point();
            let factor = association_likelihood(assignment, obs, &point, world);
            if factor == 0.0 {
                return Ok(0.0);
            }
            Ok(factor * belief.joint_marginal_likelihood(&real_pairs, world)?)
        }
        ZetaMode::RangeProbability => {
            let mut factor = 1.0;
            for (k, &beta) in assignment.entries().iter().enumerate() {
                let p_in = range_probability(belief, k, world)?;
                factor *= if beta < n_z { p_in / n_z as f64 } else { 1.0 - p_in };
                if factor == 0.0 {
                    return Ok(0.0);
                }
            }
            Ok(factor * belief.joint_marginal_likelihood(&real_pairs, world)?)
        }
        ZetaMode::MonteCarlo { samples, seed } => {
            let full = belief.with_all_landmarks(world);
            let mut rng = crate::rng_from_seed(seed);
            let n = samples.max(1);
            let total: f64 = full
                .samples(n, &mut rng)
                .iter()
                .map(|x| association_likelihood(assignment, obs, x, world) * observation_likelihood(assignment, obs, x, world))
                .sum();
            Ok(total / n as f64)
        }
    }
}

/// A child hypothesis candidate: association vector and its evidence.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub assignment: AssociationVector,
    pub zeta: f64,
}

/// All feasible children of a predicted conditional belief with their `ζ`.
pub fn expand(
    belief: &GaussianConditionalBelief,
    obs: &ObservationArray,
    world: &WorldModel,
    mode: ZetaMode,
) -> Result<Vec<Candidate>> {
    feasible_associations(belief, world, obs)?
        .into_iter()
        .map(|assignment| {
            let z = zeta(belief, obs, &assignment, world, mode)?;
            Ok(Candidate { assignment, zeta: z })
        })
        .collect()
}

/// Conditional-belief posterior for one association vector.
pub fn posterior(
    belief: &GaussianConditionalBelief,
    obs: &ObservationArray,
    assignment: &AssociationVector,
    world: &WorldModel,
) -> Result<GaussianConditionalBelief> {
    let pairs: Vec<(Vector2<f64>, usize)> =
        assignment.real_pairs(obs.n_z()).map(|(k, b)| (obs.element(b).expect("real").z, k)).collect();
    belief.update_many(&pairs, world)
}

/// Posterior hypothesis weights `ω_{i,j} = ζ_{i,j} ω_i / Σ ζ ω` for parents
/// `i` with prior weights `prior[i]` and children `j` with evidence
/// `zeta[i][j]`.
pub fn da_weight_update(prior: &[f64], zeta: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if prior.len() != zeta.len() {
        return Err(Error::InvalidConfig("prior and zeta lengths differ".into()));
    }
    let total: f64 = prior.iter().zip(zeta).map(|(w, zs)| w * zs.iter().sum::<f64>()).sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::TotalInconsistency);
    }
    Ok(prior
        .iter()
        .zip(zeta)
        .map(|(w, zs)| zs.iter().map(|z| z * w / total).collect())
        .collect())
}
