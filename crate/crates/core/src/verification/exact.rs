use super::toy::{OpenLoopPolicy, ToyBelief, ToyPomdp};
use crate::association::AssociationPath;
use crate::error::{Error, Result};

pub const MAX_LEAVES: u64 = 1_000_000;

/// One enumerated decision point: the history so far, the action taken at
/// it and the exact hybrid belief.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactNode {
    pub actions: Vec<usize>,
    pub observations: Vec<usize>,
    /// Probability of reaching this node and taking its last action.
    pub prob: f64,
    /// Exact hypothesis weights `ω` at this node.
    pub weights: Vec<(AssociationPath, f64)>,
    /// `R_X` of the node's belief with its last action.
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    pub nodes: Vec<ExactNode>,
    /// Expected state-dependent reward at each depth.
    pub step_rewards: Vec<f64>,
    pub value: f64,
    /// Total probability of the enumerated leaves.
    pub leaf_mass: f64,
}

impl ExactResult {
    pub fn node(&self, actions: &[usize], observations: &[usize]) -> Option<&ExactNode> {
        self.nodes.iter().find(|n| n.actions == actions && n.observations == observations)
    }
}

/// Leaves of the open-loop enumeration: `|A|^H |Z|^{H-1}`.
pub fn leaf_count(toy: &ToyPomdp) -> u64 {
    let a = toy.num_actions() as u64;
    let z = toy.observations as u64;
    let h = toy.horizon as u32;
    a.saturating_pow(h).saturating_mul(z.saturating_pow(h - 1))
}

/// Enumerate every action/observation branch of the open-loop `policy` up
/// to the toy's horizon with exact hybrid beliefs.
pub fn enumerate_exact(toy: &ToyPomdp, policy: &OpenLoopPolicy) -> Result<ExactResult> {
    toy.validate()?;
    let leaves = leaf_count(toy);
    if leaves > MAX_LEAVES {
        return Err(Error::EnumerationTooLarge { leaves, limit: MAX_LEAVES });
    }
    if policy.actions.len() < toy.horizon {
        return Err(Error::InvalidConfig("policy shorter than horizon".into()));
    }
    let mut out = ExactResult { nodes: Vec::new(), step_rewards: vec![0.0; toy.horizon], value: 0.0, leaf_mass: 0.0 };
    visit(toy, policy, &toy.prior_belief(), 1.0, &mut Vec::new(), &mut Vec::new(), &mut out)?;
    out.value = out.step_rewards.iter().sum();
    Ok(out)
}

fn visit(
    toy: &ToyPomdp,
    policy: &OpenLoopPolicy,
    belief: &ToyBelief,
    prob: f64,
    actions: &mut Vec<usize>,
    observations: &mut Vec<usize>,
    out: &mut ExactResult,
) -> Result<()> {
    let d = actions.len();
    for (a, pa) in policy.actions[d].iter().enumerate() {
        if *pa == 0.0 {
            continue;
        }
        let p = prob * pa;
        let reward = toy.state_reward(belief, a);
        out.step_rewards[d] += p * reward;
        actions.push(a);
        out.nodes.push(ExactNode {
            actions: actions.clone(),
            observations: observations.clone(),
            prob: p,
            weights: belief.iter().map(|h| (h.path.clone(), h.weight)).collect(),
            reward,
        });
        if d + 1 == toy.horizon {
            out.leaf_mass += p;
        } else {
            for z in 0..toy.observations {
                // P(z | H^-) is the update's evidence; zero-probability
                // branches carry no mass
                match toy.update(belief, a, z) {
                    Ok((next, evidence)) => {
                        observations.push(z);
                        visit(toy, policy, &next, p * evidence, actions, observations, out)?;
                        observations.pop();
                    }
                    Err(Error::TotalInconsistency) => {}
                    Err(e) => return Err(e),
                }
            }
        }
        actions.pop();
    }
    Ok(())
}

/// Second oracle: backward induction over the unnormalized joint
/// `α(β_{0:t}, s) = P(β_{0:t}, s, z_{1:t} | a_{0:t-1})`, so no belief is ever
/// normalized and no evidence is ever divided out.
pub fn backward_induction_value(toy: &ToyPomdp, policy: &OpenLoopPolicy) -> f64 {
    let alphas: Vec<Vec<f64>> =
        toy.prior.iter().map(|p| p.belief.iter().map(|b| b * p.weight).collect()).collect();
    value_from(toy, policy, &alphas, 0)
}

fn value_from(toy: &ToyPomdp, policy: &OpenLoopPolicy, alphas: &[Vec<f64>], d: usize) -> f64 {
    if d == toy.horizon {
        return 0.0;
    }
    let n = toy.states;
    let mut v = 0.0;
    for (a, pa) in policy.actions[d].iter().enumerate() {
        if *pa == 0.0 {
            continue;
        }
        let immediate: f64 = alphas.iter().map(|al| (0..n).map(|s| al[s] * toy.reward[s][a]).sum::<f64>()).sum();
        let mut future = 0.0;
        if d + 1 < toy.horizon {
            for z in 0..toy.observations {
                let mut children = Vec::with_capacity(alphas.len() * toy.branching);
                for al in alphas {
                    for i in 0..toy.branching {
                        children.push(
                            (0..n)
                                .map(|s2| {
                                    (0..n).map(|s| al[s] * toy.transition[a][s][s2]).sum::<f64>()
                                        * toy.association[s2][i]
                                        * toy.observation[i][s2][z]
                                })
                                .collect(),
                        );
                    }
                }
                future += value_from(toy, policy, &children, d + 1);
            }
        }
        v += pa * (immediate + future);
    }
    v
}
