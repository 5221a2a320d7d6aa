use crate::error::{Error, Result};

/// Action/observation history `H_t`, or the predicted `H_{t+1}^-` when the
/// last action still awaits its observation.
#[derive(Debug, Clone, PartialEq)]
pub struct History<A, Z> {
    actions: Vec<A>,
    observations: Vec<Z>,
}

impl<A, Z> Default for History<A, Z> {
    fn default() -> Self {
        History { actions: Vec::new(), observations: Vec::new() }
    }
}

impl<A, Z> History<A, Z> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_action(&mut self, a: A) -> Result<()> {
        if self.is_pending() {
            return Err(Error::InvalidConfig("action already pending an observation".into()));
        }
        self.actions.push(a);
        Ok(())
    }

    pub fn push_observation(&mut self, z: Z) -> Result<()> {
        if !self.is_pending() {
            return Err(Error::InvalidConfig("observation without a pending action".into()));
        }
        self.observations.push(z);
        Ok(())
    }

    /// True for `H^-`: the last action has no observation yet.
    pub fn is_pending(&self) -> bool {
        self.actions.len() == self.observations.len() + 1
    }

    pub fn actions(&self) -> &[A] {
        &self.actions
    }

    pub fn observations(&self) -> &[Z] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}
