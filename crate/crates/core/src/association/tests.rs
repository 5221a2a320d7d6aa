use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use proptest::prelude::*;

use super::*;
use crate::belief::{GaussianConditionalBelief, LandmarkPrior, Slot, StatePoint, WorldModel};
use crate::error::Error;

fn world(landmarks: &[(f64, f64, u32)], lm_var: f64) -> WorldModel {
    WorldModel::new(
        Matrix2::identity() * 0.01,
        Matrix2::identity() * 0.01,
        10.0,
        landmarks
            .iter()
            .map(|&(x, y, class)| LandmarkPrior { mean: Vector2::new(x, y), cov: Matrix2::identity() * lm_var, class })
            .collect(),
    )
    .unwrap()
}

fn obs(elements: &[(f64, f64, u32)], len: usize) -> ObservationArray {
    ObservationArray::new(
        elements.iter().map(|&(x, y, class)| ObservationElement { z: Vector2::new(x, y), class }).collect(),
        len,
    )
    .unwrap()
}

fn at_origin(w: &WorldModel) -> GaussianConditionalBelief {
    GaussianConditionalBelief::new(Vector2::zeros(), Matrix2::identity() * 0.01).with_all_landmarks(w)
}

/// Point state with the pose at the origin and landmark 0 at `l`.
fn point(slots: &[Slot], l: Vector2<f64>) -> StatePoint<'_> {
    StatePoint::new(slots, DVector::from_vec(vec![0.0, 0.0, l.x, l.y]))
}

/// Brute force over every vector in `[0, |L|)^|L|`, keeping those that are
/// injective on real entries, class-consistent, gated, claim every real
/// element and pad canonically.
fn brute_force(belief: &GaussianConditionalBelief, w: &WorldModel, o: &ObservationArray) -> BTreeSet<Vec<usize>> {
    let n_l = w.num_landmarks();
    let n_z = o.n_z();
    let gated: Vec<bool> = (0..n_l)
        .map(|k| {
            let (m, c) = belief.relative(k, w).unwrap();
            let u = m / m.norm();
            m.norm() <= w.sensing_range + w.gate_sigmas * u.dot(&(c * u)).sqrt()
        })
        .collect();
    let mut out = BTreeSet::new();
    let total = n_l.pow(n_l as u32);
    for code in 0..total {
        let mut v = Vec::with_capacity(n_l);
        let mut c = code;
        for _ in 0..n_l {
            v.push(c % n_l);
            c /= n_l;
        }
        let reals: Vec<usize> = v.iter().copied().filter(|b| *b < n_z).collect();
        let distinct: BTreeSet<usize> = reals.iter().copied().collect();
        if distinct.len() != reals.len() || distinct.len() != n_z {
            continue;
        }
        let nulls: Vec<usize> = v.iter().copied().filter(|b| *b >= n_z).collect();
        if nulls != (n_z..n_z + nulls.len()).collect::<Vec<_>>() {
            continue;
        }
        let ok = v.iter().enumerate().all(|(k, &b)| {
            b >= n_z || (gated[k] && w.landmarks[k].class == o.element(b).unwrap().class)
        });
        if ok {
            out.insert(v);
        }
    }
    out
}

#[test]
fn no_observations_gives_the_single_all_null_vector() {
    let w = world(&[(3.0, 0.0, 0), (30.0, 0.0, 0), (0.0, 4.0, 1)], 0.1);
    let v = feasible_associations(&at_origin(&w), &w, &ObservationArray::empty(3)).unwrap();
    assert_eq!(v, vec![AssociationVector(vec![0, 1, 2])]);
}

#[test]
fn aliased_pair_explains_one_observation_two_ways() {
    let w = world(&[(3.0, 1.0, 0), (3.0, -1.0, 0)], 0.1);
    let o = obs(&[(3.0, 0.0, 0)], 2);
    let v = feasible_associations(&at_origin(&w), &w, &o).unwrap();
    assert_eq!(v, vec![AssociationVector(vec![0, 1]), AssociationVector(vec![1, 0])]);
}

#[test]
fn class_gate_leaves_unique_landmark_unassigned() {
    // landmark 1 is unique (class 1); the observation is of the aliased class
    let w = world(&[(3.0, 1.0, 0), (2.0, -2.0, 1)], 0.1);
    let o = obs(&[(3.0, 1.0, 0)], 2);
    let v = feasible_associations(&at_origin(&w), &w, &o).unwrap();
    assert_eq!(v, vec![AssociationVector(vec![0, 1])]);
    // with no same-class landmark at all nothing explains the observation
    let lone = world(&[(2.0, -2.0, 1)], 0.1);
    assert!(feasible_associations(&at_origin(&lone), &lone, &obs(&[(2.0, -2.0, 0)], 1)).unwrap().is_empty());
}

#[test]
fn enumeration_is_sorted_and_rejects_bad_lengths() {
    let w = world(&[(3.0, 1.0, 0), (3.0, -1.0, 0), (1.0, 1.0, 0)], 0.1);
    let o = obs(&[(3.0, 0.0, 0), (1.0, 1.0, 0)], 3);
    let v = feasible_associations(&at_origin(&w), &w, &o).unwrap();
    let mut sorted = v.clone();
    sorted.sort();
    assert_eq!(v, sorted);
    assert_eq!(v.len(), 6);
    assert!(matches!(feasible_associations(&at_origin(&w), &w, &obs(&[], 2)), Err(Error::InvalidConfig(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn enumeration_matches_brute_force(
        lms in prop::collection::vec((-14.0f64..14.0, -14.0f64..14.0, 0u32..2), 1..=4),
        picks in prop::collection::vec((0usize..4, -0.5f64..0.5), 0..=4),
        lm_var in 0.01f64..2.0,
    ) {
        let w = world(&lms, lm_var);
        let n_l = lms.len();
        let mut used = BTreeSet::new();
        let elements: Vec<(f64, f64, u32)> = picks
            .iter()
            .filter(|(k, _)| *k < n_l && used.insert(*k))
            .map(|(k, d)| (lms[*k].0 + d, lms[*k].1 - d, lms[*k].2))
            .collect();
        let o = obs(&elements, n_l);
        let b = at_origin(&w);
        let got: BTreeSet<Vec<usize>> =
            feasible_associations(&b, &w, &o).unwrap().into_iter().map(|v| v.0).collect();
        prop_assert_eq!(got, brute_force(&b, &w, &o));
    }
}

#[test]
fn negative_information_table() {
    // One landmark; the agent sits at the origin. "In range" places the
    // landmark at distance 3, "out of range" at distance 30. The element is
    // either a measurement exactly at the noise-free value or padding.
    let w = world(&[(0.0, 0.0, 0)], 0.1);
    let f_peak = 1.0 / (2.0 * std::f64::consts::PI * 0.01);
    let density = |v: f64| (v - f_peak).abs() < 1e-9 * f_peak;
    // (element is ∞, β > n_z, in range) -> (P(z|x,l), P(β|x,l))
    let rows: [((bool, bool, bool), (&dyn Fn(f64) -> bool, f64)); 8] = [
        ((false, false, true), (&density, 1.0)),
        ((false, false, false), (&|v| v == 0.0, 0.0)),
        ((true, true, false), (&|v| v == 1.0, 1.0)),
        ((true, true, true), (&|v| v == 0.0, 0.0)),
        ((false, true, true), (&density, 0.0)),
        ((false, true, false), (&|v| v == 0.0, 1.0)),
        ((true, false, false), (&|v| v == 1.0, 0.0)),
        ((true, false, true), (&|v| v == 0.0, 1.0)),
    ];
    let slots = [Slot::Pose(0), Slot::Landmark(0)];
    for ((infinite, beta_null, in_range), (obs_ok, assoc)) in rows {
        let l = if in_range { Vector2::new(3.0, 0.0) } else { Vector2::new(30.0, 0.0) };
        let x = point(&slots, l);
        let rel = x.landmark(0).unwrap() - x.pose();
        let z = rel;
        let element = if infinite { None } else { Some(&z) };
        let p_obs = landmark_observation_likelihood(element, &rel, &w);
        let p_assoc = association_factor(!beta_null, w.in_range(&rel));
        assert!(obs_ok(p_obs), "row {:?}: P(z|x,l) = {p_obs}", (infinite, beta_null, in_range));
        assert_eq!(p_assoc, assoc, "row {:?}", (infinite, beta_null, in_range));

        // Rows where the element and β agree are the ones an observation
        // array can express; check the full product there.
        if infinite == beta_null {
            let o = if infinite { ObservationArray::empty(1) } else { obs(&[(z.x, z.y, 0)], 1) };
            let a = AssociationVector(vec![0]);
            let prod = association_likelihood(&a, &o, &x, &w) * observation_likelihood(&a, &o, &x, &w);
            let expected = match (infinite, in_range) {
                (false, true) => f_peak,
                (true, false) => 1.0,
                _ => 0.0,
            };
            assert!((prod - expected).abs() <= 1e-9 * expected.max(1.0), "row {:?}: {prod}", (infinite, beta_null, in_range));
        }
    }
}

#[test]
fn association_likelihood_is_uniform_over_real_elements() {
    let w = world(&[(3.0, 0.0, 0), (0.0, 3.0, 0), (40.0, 0.0, 0)], 0.1);
    let slots = [Slot::Pose(0), Slot::Landmark(0), Slot::Landmark(1), Slot::Landmark(2)];
    let x = StatePoint::new(&slots, DVector::from_vec(vec![0.0, 0.0, 3.0, 0.0, 0.0, 3.0, 40.0, 0.0]));
    let o = obs(&[(3.0, 0.0, 0), (0.0, 3.0, 0)], 3);
    assert_eq!(association_likelihood(&AssociationVector(vec![0, 1, 2]), &o, &x, &w), 0.25);
    assert_eq!(association_likelihood(&AssociationVector(vec![1, 0, 2]), &o, &x, &w), 0.25);
    // in-range landmark assigned padding
    assert_eq!(association_likelihood(&AssociationVector(vec![0, 2, 1]), &o, &x, &w), 0.0);
    // all out of range, all padding
    let far = StatePoint::new(&slots, DVector::from_vec(vec![100.0, 100.0, 3.0, 0.0, 0.0, 3.0, 40.0, 0.0]));
    let none = ObservationArray::empty(3);
    let a = AssociationVector(vec![0, 1, 2]);
    assert_eq!(association_likelihood(&a, &none, &far, &w) * observation_likelihood(&a, &none, &far, &w), 1.0);
}

#[test]
fn zeta_modes_agree_on_a_point_belief() {
    let w = world(&[(3.0, 0.0, 0), (0.0, 30.0, 0)], 0.0);
    let b = GaussianConditionalBelief::from_parts(
        vec![Slot::Pose(0), Slot::Landmark(0), Slot::Landmark(1)],
        DVector::from_vec(vec![0.0, 0.0, 3.0, 0.0, 0.0, 30.0]),
        DMatrix::zeros(6, 6),
    )
    .unwrap();
    let o = obs(&[(3.05, -0.02, 0)], 2);
    let a = AssociationVector(vec![0, 1]);
    let x = b.mean_point();
    let pointwise = association_likelihood(&a, &o, &x, &w) * observation_likelihood(&a, &o, &x, &w);
    assert!(pointwise > 0.0);
    for mode in [ZetaMode::MeanPoint, ZetaMode::RangeProbability, ZetaMode::MonteCarlo { samples: 16, seed: 3 }] {
        let v = zeta(&b, &o, &a, &w, mode).unwrap();
        assert!((v - pointwise).abs() <= 1e-12 * pointwise, "{mode:?}: {v} vs {pointwise}");
    }
}

#[test]
fn zeta_without_range_effects_is_marginal_over_n_z() {
    let w = world(&[(2.0, 0.0, 0), (0.0, -2.0, 0)], 0.2);
    let b = at_origin(&w);
    let o = obs(&[(2.1, 0.1, 0), (0.2, -1.9, 0)], 2);
    let a = AssociationVector(vec![0, 1]);
    let marginal = b.joint_marginal_likelihood(&[(Vector2::new(2.1, 0.1), 0), (Vector2::new(0.2, -1.9), 1)], &w).unwrap();
    let expected = marginal / 4.0;
    let mean_point = zeta(&b, &o, &a, &w, ZetaMode::MeanPoint).unwrap();
    assert!((mean_point - expected).abs() < 1e-12 * expected);
    let soft = zeta(&b, &o, &a, &w, ZetaMode::RangeProbability).unwrap();
    assert!((soft - expected).abs() < 1e-9 * expected);
}

#[test]
fn zeta_monte_carlo_matches_truncated_quadrature() {
    // Known pose at the origin, one landmark ~ N((9, 0), 0.64 I), range 10,
    // unit observation noise: about 11% of the landmark mass lies outside
    // the sensing range, where the observed association has zero mass.
    let (sp, sn, range) = (0.8f64, 1.0f64, 10.0f64);
    let m = Vector2::new(9.0, 0.0);
    let z = Vector2::new(9.3, 0.3);
    let w = WorldModel::new(
        Matrix2::identity() * 0.01,
        Matrix2::identity() * sn * sn,
        range,
        vec![LandmarkPrior { mean: m, cov: Matrix2::identity() * sp * sp, class: 0 }],
    )
    .unwrap();
    let b = GaussianConditionalBelief::from_parts(vec![Slot::Pose(0)], DVector::zeros(2), DMatrix::zeros(2, 2))
        .unwrap()
        .with_all_landmarks(&w);
    let o = obs(&[(z.x, z.y, 0)], 1);
    let a = AssociationVector(vec![0]);

    let n = 801;
    let half = 6.0 * sp;
    let h = 2.0 * half / (n - 1) as f64;
    let gauss = |r2: f64, s: f64| (-0.5 * r2 / (s * s)).exp() / (2.0 * std::f64::consts::PI * s * s);
    let mut oracle = 0.0;
    for i in 0..n {
        for j in 0..n {
            let l = Vector2::new(m.x - half + i as f64 * h, m.y - half + j as f64 * h);
            if l.norm() > range {
                continue;
            }
            oracle += gauss((l - m).norm_squared(), sp) * gauss((z - l).norm_squared(), sn) * h * h;
        }
    }
    let mc = zeta(&b, &o, &a, &w, ZetaMode::MonteCarlo { samples: 1024, seed: 11 }).unwrap();
    assert!((mc - oracle).abs() / oracle < 5e-2, "mc {mc} vs quadrature {oracle}");
    // the untruncated marginal is clearly different, so the check has teeth
    let untruncated = b.marginal_likelihood(&z, 0, &w).unwrap();
    assert!((untruncated - oracle) / oracle > 0.05);
}

#[test]
fn range_probability_limits() {
    let w = world(&[(9.0, 0.0, 0), (10.0, 0.0, 0), (30.0, 0.0, 0)], 0.25);
    let b = at_origin(&w);
    let p: Vec<f64> = (0..3).map(|k| range_probability(&b, k, &w).unwrap()).collect();
    assert!(p[0] > 0.9 && p[0] < 1.0);
    assert!((p[1] - 0.5).abs() < 1e-12);
    assert!(p[2] < 1e-12);
}

#[test]
fn weight_update_normalizes_globally() {
    let post = da_weight_update(&[0.5, 0.5], &[vec![0.3], vec![0.1]]).unwrap();
    assert!((post[0][0] - 0.75).abs() < 1e-12 && (post[1][0] - 0.25).abs() < 1e-12);
    // identical evidence leaves the prior unchanged
    let post = da_weight_update(&[0.2, 0.8], &[vec![0.4], vec![0.4]]).unwrap();
    assert!((post[0][0] - 0.2).abs() < 1e-12);
    // absorbing zero
    let post = da_weight_update(&[0.0, 1.0], &[vec![5.0, 1.0], vec![0.1]]).unwrap();
    assert_eq!(post[0], vec![0.0, 0.0]);
    assert!(matches!(da_weight_update(&[0.5, 0.5], &[vec![0.0], vec![0.0]]), Err(Error::TotalInconsistency)));
}

proptest! {
    #[test]
    fn weight_update_is_scale_invariant(
        prior in prop::collection::vec(0.01f64..1.0, 1..5),
        zs in prop::collection::vec(prop::collection::vec(0.0f64..2.0, 1..4), 5),
        scale in 1e-6f64..1e6,
    ) {
        let total: f64 = prior.iter().sum();
        let prior: Vec<f64> = prior.iter().map(|w| w / total).collect();
        let zeta: Vec<Vec<f64>> = zs[..prior.len()].to_vec();
        let scaled: Vec<Vec<f64>> = zeta.iter().map(|r| r.iter().map(|z| z * scale).collect()).collect();
        match (da_weight_update(&prior, &zeta), da_weight_update(&prior, &scaled)) {
            (Ok(a), Ok(b)) => {
                let sum: f64 = a.iter().flatten().sum();
                prop_assert!((sum - 1.0).abs() < 1e-9);
                for (x, y) in a.iter().flatten().zip(b.iter().flatten()) {
                    prop_assert!((x - y).abs() < 1e-9);
                }
            }
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "scaling changed feasibility"),
        }
    }
}
