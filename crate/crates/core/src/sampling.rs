//! Importance sampling of hypothesis paths: uniform proposal, the λ weight
//! recursion, sequential importance resampling and frequency estimates.

use indexmap::IndexMap;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::association::{AssociationPath, AssociationVector};
use crate::error::{Error, Result};

/// A sampled hypothesis path with its importance weight.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceWeightedPath {
    pub path: AssociationPath,
    pub lambda: f64,
    /// `λ / Σλ` over the sample set; `1/N` right after resampling.
    pub lambda_self_normalized: f64,
}

impl ImportanceWeightedPath {
    /// Root path with `λ_0 = 1`.
    pub fn root(path: AssociationPath, n: usize) -> Self {
        ImportanceWeightedPath { path, lambda: 1.0, lambda_self_normalized: 1.0 / n.max(1) as f64 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Proposal {
    #[default]
    Uniform,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResampleScheme {
    #[default]
    Multinomial,
    Systematic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalConfig {
    pub proposal: Proposal,
    pub resample_every_step: bool,
    pub scheme: ResampleScheme,
    pub seed: u64,
}

impl Default for ProposalConfig {
    fn default() -> Self {
        ProposalConfig {
            proposal: Proposal::Uniform,
            resample_every_step: true,
            scheme: ResampleScheme::Multinomial,
            seed: 0,
        }
    }
}

/// Uniform draw from the feasible children; returns the child and its
/// proposal probability `1/|feasible|`.
pub fn propose_child<R: Rng + ?Sized>(
    _path: &AssociationPath,
    feasible: &[AssociationVector],
    rng: &mut R,
) -> Result<(AssociationVector, f64)> {
    if feasible.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let i = rng.random_range(0..feasible.len());
    Ok((feasible[i].clone(), 1.0 / feasible.len() as f64))
}

/// `λ = η ζ |β| λ_prev`. Without `η` the unnormalized product is returned
/// for later self-normalization.
pub fn lambda_update(lambda_prev: f64, zeta: f64, branching: usize, eta: Option<f64>) -> f64 {
    if lambda_prev == 0.0 || zeta == 0.0 {
        return 0.0;
    }
    eta.unwrap_or(1.0) * zeta * branching as f64 * lambda_prev
}

/// `λ_i / Σλ`, zero-weight paths excluded.
pub fn self_normalize(paths: &mut [ImportanceWeightedPath]) -> Result<()> {
    let total: f64 = paths.iter().map(|p| p.lambda).sum();
    if !(total > 0.0) {
        return Err(Error::ZeroWeights);
    }
    for p in paths {
        p.lambda_self_normalized = p.lambda / total;
    }
    Ok(())
}

/// Draw one index from unnormalized nonnegative weights.
pub fn sample_categorical<R: Rng + ?Sized>(weights: impl IntoIterator<Item = f64>, rng: &mut R) -> Result<usize> {
    let cdf = cumulative(weights)?;
    Ok(search(&cdf, rng.random::<f64>() * cdf[cdf.len() - 1]))
}

fn cumulative(weights: impl IntoIterator<Item = f64>) -> Result<Vec<f64>> {
    let mut acc = 0.0;
    let cdf: Vec<f64> = weights
        .into_iter()
        .map(|w| {
            acc += w.max(0.0);
            acc
        })
        .collect();
    if !(acc > 0.0) || !acc.is_finite() {
        return Err(Error::ZeroWeights);
    }
    Ok(cdf)
}

/// First index whose cumulative weight exceeds `u`, skipping zero-weight
/// entries.
fn search(cdf: &[f64], u: f64) -> usize {
    let i = cdf.partition_point(|c| *c <= u);
    i.min(cdf.len() - 1)
}

/// Indices of `n` draws from the categorical over `weights`.
pub fn resample_indices<R: Rng + ?Sized>(
    weights: &[f64],
    n: usize,
    scheme: ResampleScheme,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let cdf = cumulative(weights.iter().copied())?;
    let total = cdf[cdf.len() - 1];
    Ok(match scheme {
        ResampleScheme::Multinomial => (0..n).map(|_| search(&cdf, rng.random::<f64>() * total)).collect(),
        ResampleScheme::Systematic => {
            let u0 = rng.random::<f64>();
            (0..n).map(|k| search(&cdf, (k as f64 + u0) / n as f64 * total)).collect()
        }
    })
}

/// Sequential importance resampling: `N` draws by self-normalized weight.
/// Every output has `λ̃ = 1/N`; its `λ` is the mean input `λ`, so that
/// `(1/N) Σ λ f` keeps its expectation.
pub fn sir_resample<R: Rng + ?Sized>(
    paths: &[ImportanceWeightedPath],
    scheme: ResampleScheme,
    rng: &mut R,
) -> Result<Vec<ImportanceWeightedPath>> {
    let carried: Vec<(ImportanceWeightedPath, ())> = paths.iter().map(|p| (p.clone(), ())).collect();
    Ok(sir_resample_with(&carried, scheme, rng)?.into_iter().map(|p| p.0).collect())
}

/// [`sir_resample`] carrying a payload (e.g. the conditional belief) along
/// with each path.
pub fn sir_resample_with<T: Clone, R: Rng + ?Sized>(
    paths: &[(ImportanceWeightedPath, T)],
    scheme: ResampleScheme,
    rng: &mut R,
) -> Result<Vec<(ImportanceWeightedPath, T)>> {
    let n = paths.len();
    let lambdas: Vec<f64> = paths.iter().map(|p| p.0.lambda).collect();
    let idx = resample_indices(&lambdas, n, scheme, rng)?;
    let mean_lambda = lambdas.iter().sum::<f64>() / n as f64;
    Ok(idx
        .into_iter()
        .map(|i| {
            let path = ImportanceWeightedPath {
                path: paths[i].0.path.clone(),
                lambda: mean_lambda,
                lambda_self_normalized: 1.0 / n as f64,
            };
            (path, paths[i].1.clone())
        })
        .collect())
}

/// Sample frequency of each distinct path, in first-seen order.
pub fn frequency_weights<'a>(samples: impl IntoIterator<Item = &'a AssociationPath>) -> IndexMap<AssociationPath, f64> {
    let mut counts: IndexMap<AssociationPath, f64> = IndexMap::new();
    let mut n = 0usize;
    for s in samples {
        *counts.entry(s.clone()).or_insert(0.0) += 1.0;
        n += 1;
    }
    for v in counts.values_mut() {
        *v /= n as f64;
    }
    counts
}
