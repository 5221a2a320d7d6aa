use indexmap::IndexMap;
use nalgebra::Vector2;
use rand::Rng;

use super::gaussian::{GaussianConditionalBelief, Slot, StatePoint};
use super::world::WorldModel;
use crate::association::{self, AssociationPath, ObservationArray, ZetaMode};
use crate::error::{Error, Result};

/// One weighted component of a hybrid belief.
#[derive(Debug, Clone)]
pub struct Hypothesis {
    pub path: AssociationPath,
    pub belief: GaussianConditionalBelief,
    pub weight: f64,
}

/// Which variables the A-optimality reward covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AOptScope {
    PoseOnly,
    FullState,
}

/// Weighted set of conditional beliefs, one per association history.
#[derive(Debug, Clone)]
pub struct HybridBelief {
    hypotheses: Vec<Hypothesis>,
}

impl HybridBelief {
    pub fn new(hypotheses: Vec<Hypothesis>) -> Result<Self> {
        if hypotheses.is_empty() {
            return Err(Error::InvalidConfig("hybrid belief needs at least one hypothesis".into()));
        }
        if hypotheses.iter().any(|h| !(h.weight >= 0.0) || !h.weight.is_finite()) {
            return Err(Error::InvalidConfig("hypothesis weights must be finite and nonnegative".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for h in &hypotheses {
            if !seen.insert(h.path.clone()) {
                return Err(Error::InvalidConfig(format!("duplicate association path {:?}", h.path)));
            }
        }
        Ok(HybridBelief { hypotheses })
    }

    /// Prior belief: one root path per entry.
    pub fn from_prior(priors: Vec<(GaussianConditionalBelief, f64)>) -> Result<Self> {
        let mut b = Self::new(
            priors
                .into_iter()
                .enumerate()
                .map(|(i, (belief, weight))| Hypothesis { path: AssociationPath::root(i), belief, weight })
                .collect(),
        )?;
        b.normalize()?;
        Ok(b)
    }

    pub fn hypotheses(&self) -> &[Hypothesis] {
        &self.hypotheses
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.hypotheses.iter().map(|h| h.weight).sum()
    }

    pub fn max_weight(&self) -> f64 {
        self.hypotheses.iter().map(|h| h.weight).fold(0.0, f64::max)
    }

    pub fn is_normalized(&self) -> bool {
        (self.total_weight() - 1.0).abs() <= 1e-9
    }

    pub fn normalize(&mut self) -> Result<()> {
        let total = self.total_weight();
        if !(total > 0.0) {
            return Err(Error::TotalInconsistency);
        }
        for h in &mut self.hypotheses {
            h.weight /= total;
        }
        Ok(())
    }

    /// Keep the `budget` heaviest hypotheses (ties by current order) and
    /// renormalize.
    pub fn prune_top(&self, budget: usize) -> Result<Self> {
        let keep = top_indices(self.hypotheses.iter().map(|h| h.weight), budget);
        let mut out = HybridBelief { hypotheses: keep.into_iter().map(|i| self.hypotheses[i].clone()).collect() };
        out.normalize()?;
        Ok(out)
    }

    /// Index drawn from the categorical over weights.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        crate::sampling::sample_categorical(self.hypotheses.iter().map(|h| h.weight), rng)
            .expect("normalized belief has positive mass")
    }

    /// Negative trace of the moment-matched mixture covariance.
    pub fn a_optimality(&self, scope: AOptScope) -> f64 {
        a_optimality(self.hypotheses.iter().map(|h| (&h.belief, h.weight)), scope)
    }

    /// `Σ ω E_b[r(X, a)]` estimated with `n_x` samples per hypothesis.
    pub fn state_reward_expectation<A, F, R>(&self, reward: F, action: &A, n_x: usize, rng: &mut R) -> f64
    where
        F: Fn(&StatePoint<'_>, &A) -> f64,
        R: Rng + ?Sized,
    {
        let n = self.len() as f64;
        let entries: Vec<(&GaussianConditionalBelief, f64)> =
            self.hypotheses.iter().map(|h| (&h.belief, h.weight * n)).collect();
        state_reward_expectation(&entries, reward, action, n_x, rng)
    }

    /// Full Bayesian update for one motion/observation step: every
    /// hypothesis is predicted, expanded over its feasible association
    /// vectors and reweighted. With a `budget`, only the heaviest children
    /// are kept (and only those get a conditional posterior).
    pub fn update(
        &self,
        displacement: &Vector2<f64>,
        obs: &ObservationArray,
        world: &WorldModel,
        mode: ZetaMode,
        budget: Option<usize>,
    ) -> Result<HybridBelief> {
        let mut predicted = Vec::with_capacity(self.len());
        let mut zetas = Vec::with_capacity(self.len());
        for h in &self.hypotheses {
            let p = h.belief.predict(displacement, world);
            let cands = association::expand(&p, obs, world, mode)?;
            zetas.push(cands.iter().map(|c| c.zeta).collect::<Vec<_>>());
            predicted.push((p, cands));
        }
        let prior: Vec<f64> = self.hypotheses.iter().map(|h| h.weight).collect();
        let weights = association::da_weight_update(&prior, &zetas)?;

        let mut flat = Vec::new();
        for (j, ws) in weights.iter().enumerate() {
            for (i, w) in ws.iter().enumerate() {
                if *w > 0.0 {
                    flat.push((j, i, *w));
                }
            }
        }
        let keep = match budget {
            Some(m) => top_indices(flat.iter().map(|f| f.2), m),
            None => (0..flat.len()).collect(),
        };
        let mut hypotheses = Vec::with_capacity(keep.len());
        for idx in keep {
            let (j, i, w) = flat[idx];
            let (p, cands) = &predicted[j];
            let assignment = &cands[i].assignment;
            hypotheses.push(Hypothesis {
                path: self.hypotheses[j].path.child(assignment.clone()),
                belief: association::posterior(p, obs, assignment, world)?,
                weight: w,
            });
        }
        let mut out = HybridBelief { hypotheses };
        out.normalize()?;
        Ok(out)
    }
}

/// Indices of the `m` largest weights, in their original order.
pub fn top_indices(weights: impl Iterator<Item = f64>, m: usize) -> Vec<usize> {
    let mut idx: Vec<(usize, f64)> = weights.enumerate().collect();
    if idx.len() > m {
        idx.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        idx.truncate(m);
        idx.sort_by_key(|e| e.0);
    }
    idx.into_iter().map(|e| e.0).collect()
}

/// Running first and second moments of a Gaussian mixture, restricted to the
/// diagonal (all that the trace needs).
#[derive(Debug, Clone, Default)]
pub struct MixtureMoments {
    // per slot: total weight, Σw·μ (2), Σw·(σ² + μ²) (2)
    slots: IndexMap<Slot, [f64; 5]>,
}

impl MixtureMoments {
    pub fn add(&mut self, belief: &GaussianConditionalBelief, weight: f64, scope: AOptScope) {
        let mean = belief.mean();
        let cov = belief.cov();
        let mut push = |slot: Slot, o: usize| {
            let e = self.slots.entry(slot).or_insert([0.0; 5]);
            e[0] += weight;
            for d in 0..2 {
                let mu = mean[o + d];
                e[1 + d] += weight * mu;
                e[3 + d] += weight * (cov[(o + d, o + d)] + mu * mu);
            }
        };
        match scope {
            AOptScope::PoseOnly => {
                // current pose, keyed by a fixed slot so mixtures across
                // hypotheses line up
                let t = belief.current_time();
                push(Slot::Pose(usize::MAX), belief.offset(Slot::Pose(t)).expect("pose"));
            }
            AOptScope::FullState => {
                for (i, slot) in belief.slots().iter().enumerate() {
                    push(*slot, 2 * i);
                }
            }
        }
    }

    /// Trace of the moment-matched covariance. Slots carried by only some
    /// components use the weights of those components.
    pub fn trace(&self) -> f64 {
        self.slots
            .values()
            .filter(|e| e[0] > 0.0)
            .map(|e| {
                (0..2)
                    .map(|d| {
                        let m = e[1 + d] / e[0];
                        (e[3 + d] / e[0] - m * m).max(0.0)
                    })
                    .sum::<f64>()
            })
            .sum()
    }
}

/// `-trace(Σ ω (Σ_i + μ_i μ_iᵀ) - μ̄ μ̄ᵀ)` over the chosen scope.
pub fn a_optimality<'a>(
    components: impl IntoIterator<Item = (&'a GaussianConditionalBelief, f64)>,
    scope: AOptScope,
) -> f64 {
    let mut m = MixtureMoments::default();
    for (b, w) in components {
        m.add(b, w, scope);
    }
    -m.trace()
}

/// `(1/N) Σ_i λ_i (1/n_x) Σ_k r(X_i^k, a)` with `X_i^k` drawn from the i-th
/// conditional belief.
pub fn state_reward_expectation<A, F, R>(
    entries: &[(&GaussianConditionalBelief, f64)],
    reward: F,
    action: &A,
    n_x: usize,
    rng: &mut R,
) -> f64
where
    F: Fn(&StatePoint<'_>, &A) -> f64,
    R: Rng + ?Sized,
{
    let n_x = n_x.max(1);
    let n = entries.len() as f64;
    entries
        .iter()
        .map(|(b, lambda)| {
            if *lambda == 0.0 {
                return 0.0;
            }
            let avg: f64 = b.samples(n_x, rng).iter().map(|x| reward(x, action)).sum::<f64>() / n_x as f64;
            lambda * avg
        })
        .sum::<f64>()
        / n
}
