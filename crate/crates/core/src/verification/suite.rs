use serde::{Deserialize, Serialize};

use super::experiments::{bias_experiment, consistency_experiment, BiasReport, ConsistencyReward, Estimator};
use super::toy::ToyPomdp;
use crate::error::Result;
use crate::sampling::ResampleScheme;

/// z-score below which an estimator counts as unbiased.
pub const UNBIASED_Z: f64 = 3.0;
/// z-score above which a bias counts as detected.
pub const BIASED_Z: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn bias_line(r: &BiasReport) -> String {
    format!("mean {:.6} ± {:.6}, exact {:.6}, z {:.2}", r.mean, r.std_error, r.exact, r.z_score)
}

/// Unbiasedness of the sampled-hypothesis reward and value estimators, bias
/// of the pruned estimator and consistency of frequency weights on `toy`.
pub fn lemma_suite(toy: &ToyPomdp, runs: usize, seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();

    let sir = bias_experiment(
        toy,
        Estimator::HbmcpSir { n_paths: 8, n_x: 4, scheme: ResampleScheme::Multinomial },
        runs,
        seed,
    )?;
    out.push(Check { name: "sir_reward_unbiased".into(), pass: sir.z_score.abs() < UNBIASED_Z, detail: bias_line(&sir) });

    let pruned = bias_experiment(toy, Estimator::Pruned { budget: 1, n_x: 4 }, runs, seed.wrapping_add(1))?;
    let gap = pruned.analytic_gap.unwrap_or(0.0);
    let measured = pruned.mean - pruned.exact;
    out.push(Check {
        name: "pruned_reward_biased".into(),
        pass: pruned.z_score.abs() > BIASED_Z
            && (measured - gap).abs() < UNBIASED_Z * pruned.std_error
            && pruned.pruned_mass.unwrap_or(0.0) >= 0.3,
        detail: format!(
            "{}, analytic gap {:.6}, pruned mass {:.3}",
            bias_line(&pruned),
            gap,
            pruned.pruned_mass.unwrap_or(0.0)
        ),
    });

    let value = bias_experiment(toy, Estimator::HbmcpValue { n_paths: 4, n_x: 4 }, runs, seed.wrapping_add(2))?;
    out.push(Check { name: "value_unbiased".into(), pass: value.z_score.abs() < UNBIASED_Z, detail: bias_line(&value) });

    let points = consistency_experiment(toy, ConsistencyReward::WeightEntropy, &[100, 400, 1600], 200, seed.wrapping_add(3))?;
    let ratio = points[0].rmse / points[2].rmse;
    out.push(Check {
        name: "entropy_consistent".into(),
        pass: (2.0..=8.0).contains(&ratio),
        detail: format!(
            "rmse {} ratio {ratio:.2}",
            points.iter().map(|p| format!("N={}:{:.5}", p.n, p.rmse)).collect::<Vec<_>>().join(" ")
        ),
    });
    Ok(out)
}
