use serde::{Deserialize, Serialize};

/// Search instrumentation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    pub iterations: u64,
    /// Iterations dropped because every hypothesis became inconsistent.
    pub discarded: u64,
    /// Conditional-belief posteriors computed.
    pub posteriors: u64,
    pub max_posteriors_per_iteration: u64,
    pub tree_nodes: u64,
}

impl SearchStats {
    pub(crate) fn close_iteration(&mut self, posteriors: u64) {
        self.posteriors += posteriors;
        self.max_posteriors_per_iteration = self.max_posteriors_per_iteration.max(posteriors);
    }
}

/// One propagated return, for replaying the incremental means.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayEntry {
    pub node: usize,
    pub action: usize,
    pub ret: f64,
}
