use rand::Rng;

/// Visit statistics of one action edge.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ActionStats {
    pub n: u64,
    pub q: f64,
}

impl ActionStats {
    /// Incremental mean `Q ← Q + (R − Q)/N`.
    pub fn record(&mut self, ret: f64) {
        self.n += 1;
        self.q += (ret - self.q) / self.n as f64;
    }
}

/// `argmax_a Q(ha) + c sqrt(ln N(h) / N(ha))` with `N(h) = Σ_a N(ha)`.
/// Unvisited actions are taken first; ties go to the lowest index.
pub fn ucb_select(stats: &[ActionStats], c: f64) -> usize {
    if let Some(a) = stats.iter().position(|s| s.n == 0) {
        return a;
    }
    let n_h: u64 = stats.iter().map(|s| s.n).sum();
    let ln = (n_h as f64).ln();
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (a, s) in stats.iter().enumerate() {
        let score = s.q + c * (ln / s.n as f64).sqrt();
        if score > best_score {
            best = a;
            best_score = score;
        }
    }
    best
}

/// Greedy action: highest `Q` among visited actions, first action when
/// nothing was visited.
pub fn best_action(stats: &[ActionStats]) -> usize {
    let mut best = 0;
    let mut best_q = f64::NEG_INFINITY;
    for (a, s) in stats.iter().enumerate() {
        if s.n > 0 && s.q > best_q {
            best = a;
            best_q = s.q;
        }
    }
    best
}

/// Whether a new observation may be added: `|C(ha)| ≤ k_o N(ha)^α_o`.
pub fn widening_open(children: usize, n_ha: u64, k_o: f64, alpha_o: f64) -> bool {
    children as f64 <= k_o * (n_ha as f64).powf(alpha_o)
}

/// Uniform reuse of a stored child.
pub fn pick_existing<R: Rng + ?Sized>(children: usize, rng: &mut R) -> usize {
    rng.random_range(0..children)
}

/// Replace a node's previous reward estimate inside the running means of
/// its ancestors: `r + n (r − r_prev)`, where `n` counts earlier
/// contributions of that estimate. The first estimate passes unchanged.
pub fn reward_replace_update(n: u64, r_prev: Option<f64>, r: f64) -> f64 {
    match r_prev {
        Some(prev) => r + n as f64 * (r - prev),
        None => r,
    }
}
