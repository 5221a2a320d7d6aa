use super::belief_mcts::{plan_pft_dpw_with_root, BeliefMctsTree};
use super::hbmcp::HbMcpTree;
use super::*;
use crate::verification::{enumerate_exact, fixture_path, OpenLoopPolicy, ToyPomdp, ToyPrior};
use crate::{stats, stream_rng};

fn toy() -> ToyPomdp {
    ToyPomdp::load(fixture_path("toy_aliased.toml")).unwrap()
}

/// The fixture restricted to its second action.
fn single_action_toy() -> ToyPomdp {
    let mut t = toy();
    t.transition = vec![t.transition[1].clone()];
    t.reward = t.reward.iter().map(|r| vec![r[1]]).collect();
    t.history = None;
    t.policy = Some(OpenLoopPolicy { actions: vec![vec![1.0]; t.horizon] });
    t
}

fn root(t: &ToyPomdp) -> Vec<(Vec<f64>, f64)> {
    t.prior.iter().map(|p| (p.belief.clone(), p.weight)).collect()
}

fn cfg(horizon: usize, iterations: u64) -> PlannerConfig {
    PlannerConfig { horizon, n_particles: 8, ..PlannerConfig::default() }.with_iterations(iterations)
}

fn check_widening<O, B>(nodes: &[hbmcp::HbNode<O, B>], c: &PlannerConfig) {
    for n in nodes {
        for a in &n.actions {
            let bound = c.k_o * (a.stats.n as f64).powf(c.alpha_o) + 1.0;
            assert!(a.children.len() as f64 <= bound);
        }
    }
}

/// Recompute every Q as the arithmetic mean of the replayed returns.
fn check_replay(replay: &[ReplayEntry], q: impl Fn(usize, usize) -> (u64, f64)) {
    let mut sums = std::collections::HashMap::<(usize, usize), (u64, f64)>::new();
    for e in replay {
        let s = sums.entry((e.node, e.action)).or_default();
        s.0 += 1;
        s.1 += e.ret;
    }
    for ((node, action), (n, sum)) in sums {
        let (tn, tq) = q(node, action);
        assert_eq!(n, tn);
        assert!((sum / n as f64 - tq).abs() < 1e-9 * (1.0 + tq.abs()));
    }
}

#[test]
fn hbmcp_structural_invariants() {
    let t = toy();
    let c = cfg(2, 3000);
    let mut tree = HbMcpTree::new(&t, c.clone()).unwrap();
    tree.record_replay();
    let mut rng = stream_rng(1, 0);
    for _ in 0..3000 {
        tree.iterate(&root(&t), &mut rng).unwrap();
        check_widening(tree.nodes(), &c);
    }
    assert!(tree.stats.max_posteriors_per_iteration <= c.horizon as u64);
    check_replay(tree.replay().unwrap(), |n, a| {
        let s = &tree.nodes()[n].actions[a].stats;
        (s.n, s.q)
    });
}

#[test]
fn hbmcp_posterior_count_deep_horizon() {
    let t = toy();
    for h in 1..=6 {
        let mut tree = HbMcpTree::new(&t, cfg(h, 500)).unwrap();
        tree.search(&root(&t), &mut stream_rng(2, h as u64)).unwrap();
        assert!(tree.stats.max_posteriors_per_iteration <= h as u64);
    }
}

#[test]
fn vanilla_replay_and_widening() {
    let t = toy();
    let c = PlannerConfig { prune_budget: 2, ..cfg(3, 2000) };
    let mut tree = BeliefMctsTree::new(&t, c.clone(), &root(&t)).unwrap();
    tree.record_replay();
    let mut rng = stream_rng(3, 0);
    for _ in 0..2000 {
        tree.iterate(&mut rng).unwrap();
    }
    for n in tree.nodes() {
        assert!(n.belief.len() <= 2);
        for a in &n.actions {
            assert!(a.children.len() as f64 <= c.k_o * (a.stats.n as f64).powf(c.alpha_o) + 1.0);
        }
    }
    check_replay(tree.replay().unwrap(), |n, a| {
        let s = &tree.nodes()[n].actions[a].stats;
        (s.n, s.q)
    });
}

#[test]
fn planners_are_deterministic() {
    let t = toy();
    let c = cfg(2, 400);
    for solver in Solver::ALL {
        let a = plan(solver, &t, &root(&t), &c, &mut stream_rng(5, 0)).unwrap();
        let b = plan(solver, &t, &root(&t), &c, &mut stream_rng(5, 0)).unwrap();
        assert_eq!(a, b, "{solver}");
    }
}

#[test]
fn constant_reward_degenerate_tree() {
    let t = ToyPomdp {
        name: "constant".into(),
        states: 1,
        observations: 1,
        branching: 1,
        horizon: 2,
        reward: vec![vec![3.0]],
        transition: vec![vec![vec![1.0]]],
        association: vec![vec![1.0]],
        observation: vec![vec![vec![1.0]]],
        prior: vec![ToyPrior { weight: 1.0, belief: vec![1.0] }],
        history: None,
        policy: None,
    };
    let out = plan(Solver::HbMcp, &t, &root(&t), &cfg(2, 250), &mut stream_rng(0, 0)).unwrap();
    assert!((out.q_values[0] - 6.0).abs() < 1e-12);
    assert_eq!(out.visits[0], 250);
}

#[test]
fn depth_zero_rollout_is_zero() {
    let t = toy();
    assert_eq!(rollout(&t, &t.prior[0].belief, 0, 4, &mut stream_rng(0, 0)).unwrap(), (0.0, 0));
}

/// Mean and standard error of the root Q over independent planning calls.
fn root_value(solver: Solver, t: &ToyPomdp, c: &PlannerConfig, runs: u64) -> (f64, f64) {
    let qs: Vec<f64> = (0..runs)
        .map(|r| plan(solver, t, &root(t), c, &mut stream_rng(17, r)).unwrap().q_values[0])
        .collect();
    (stats::mean(&qs), stats::std_error(&qs))
}

#[test]
fn hbmcp_and_vanilla_converge_to_enumerated_value() {
    let t = single_action_toy();
    let v = enumerate_exact(&t, t.policy.as_ref().unwrap()).unwrap().value;
    let c = PlannerConfig { prune_budget: usize::MAX, ..cfg(2, 2000) };
    for solver in [Solver::HbMcp, Solver::Vanilla] {
        let (mean, se) = root_value(solver, &t, &c, 40);
        assert!((mean - v).abs() < 3.0 * se.max(1e-3), "{solver}: {mean} ± {se} vs {v}");
    }
}

#[test]
fn pft_root_frequency_matches_prior() {
    let t = toy();
    let c = cfg(2, 0);
    let runs = 3000;
    let mut counts = [0usize; 3];
    for r in 0..runs {
        let (out, j) = plan_pft_dpw_with_root(&t, &root(&t), &c, &mut stream_rng(23, r)).unwrap();
        assert_eq!(out.action, 0);
        counts[j] += 1;
    }
    for (k, p) in t.prior.iter().enumerate() {
        let f = counts[k] as f64 / runs as f64;
        let se = (p.weight * (1.0 - p.weight) / runs as f64).sqrt();
        assert!((f - p.weight).abs() < 3.0 * se, "{k}: {f}");
    }
}

#[test]
fn zero_budget_returns_first_action() {
    let t = toy();
    for solver in Solver::ALL {
        let out = plan(solver, &t, &root(&t), &cfg(2, 0), &mut stream_rng(0, 0)).unwrap();
        assert_eq!(out.action, 0);
    }
}

#[test]
fn dabsp_single_action() {
    let t = single_action_toy();
    let out = plan(Solver::DaBsp, &t, &root(&t), &cfg(2, 10), &mut stream_rng(0, 0)).unwrap();
    assert_eq!(out.action, 0);
}

#[test]
fn dabsp_ranking_matches_enumeration() {
    let t = toy();
    let q: Vec<f64> = (0..2)
        .map(|a| {
            let mut first = vec![0.0; 2];
            first[a] = 1.0;
            let p = OpenLoopPolicy { actions: vec![first, vec![0.5, 0.5]] };
            enumerate_exact(&t, &p).unwrap().value
        })
        .collect();
    let best = if q[1] > q[0] { 1 } else { 0 };
    let c = PlannerConfig { prune_budget: usize::MAX, ..cfg(2, 1000) };
    let calls = 100;
    let hits = (0..calls)
        .filter(|r| plan(Solver::DaBsp, &t, &root(&t), &c, &mut stream_rng(29, *r)).unwrap().action == best)
        .count();
    assert!(hits as f64 >= 0.95 * calls as f64, "{hits}/{calls}, exact {q:?}");
}

#[test]
fn prune_budget_at_least_hypotheses_is_exact() {
    let t = toy();
    let b = root(&t);
    let (pruned, _) = belief_mcts::pruned_posterior_given(&t, &b, 0, &1, 100).unwrap();
    let exact = t.belief_after(&[0], &[1], None).unwrap();
    assert_eq!(pruned.len(), exact.len());
    for ((d, w), h) in pruned.iter().zip(&exact) {
        assert!((w - h.weight).abs() < 1e-12);
        assert!(d.iter().zip(&h.dist).all(|(x, y)| (x - y).abs() < 1e-12));
    }
    let (top, _) = belief_mcts::pruned_posterior_given(&t, &b, 0, &1, 1).unwrap();
    assert_eq!(top.len(), 1);
    assert_eq!(top[0].1, 1.0);
}
