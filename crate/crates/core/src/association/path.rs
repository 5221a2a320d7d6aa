use std::cmp::Ordering;
use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

/// Per-step association vector: entry `k` is the observation index claimed by
/// landmark `k`.
///
/// Indices are zero-based: an entry `< n_z` refers to a real observation
/// element, an entry `>= n_z` to one of the out-of-range padding elements.
/// Padding indices are canonical (`n_z, n_z + 1, ...` in landmark order).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AssociationVector(pub Vec<usize>);

impl AssociationVector {
    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `(landmark, observation index)` pairs for landmarks that claim a real
    /// observation.
    pub fn real_pairs(&self, n_z: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.iter().enumerate().filter(move |(_, b)| **b < n_z).map(|(k, b)| (k, *b))
    }

    /// All-padding vector for `len` landmarks.
    pub fn all_null(n_z: usize, len: usize) -> Self {
        AssociationVector((0..len).map(|k| n_z + k).collect())
    }
}

struct PathNode {
    parent: Option<Arc<PathNode>>,
    step: AssociationVector,
    len: usize,
    fingerprint: u64,
}

/// A realization of the association history: the prior hypothesis index
/// followed by one [`AssociationVector`] per observed step.
///
/// Paths form a persistent tree: [`AssociationPath::child`] shares the parent
/// prefix, so a child differs from its parent only in the last step.
#[derive(Clone)]
pub struct AssociationPath {
    prior: usize,
    tail: Option<Arc<PathNode>>,
}

impl AssociationPath {
    pub fn root(prior: usize) -> Self {
        AssociationPath { prior, tail: None }
    }

    pub fn prior_index(&self) -> usize {
        self.prior
    }

    /// Number of association steps after the prior.
    pub fn len(&self) -> usize {
        self.tail.as_ref().map_or(0, |n| n.len)
    }

    pub fn is_empty(&self) -> bool {
        self.tail.is_none()
    }

    pub fn child(&self, step: AssociationVector) -> Self {
        let mut h = DefaultHasher::new();
        self.fingerprint().hash(&mut h);
        step.hash(&mut h);
        AssociationPath {
            prior: self.prior,
            tail: Some(Arc::new(PathNode {
                parent: self.tail.clone(),
                len: self.len() + 1,
                fingerprint: h.finish(),
                step,
            })),
        }
    }

    pub fn parent(&self) -> Option<Self> {
        self.tail.as_ref().map(|n| AssociationPath { prior: self.prior, tail: n.parent.clone() })
    }

    pub fn last(&self) -> Option<&AssociationVector> {
        self.tail.as_ref().map(|n| &n.step)
    }

    /// Steps from the first to the most recent.
    pub fn steps(&self) -> Vec<AssociationVector> {
        let mut out = Vec::with_capacity(self.len());
        let mut cur = self.tail.as_ref();
        while let Some(n) = cur {
            out.push(n.step.clone());
            cur = n.parent.as_ref();
        }
        out.reverse();
        out
    }

    fn fingerprint(&self) -> u64 {
        match &self.tail {
            Some(n) => n.fingerprint,
            None => {
                let mut h = DefaultHasher::new();
                self.prior.hash(&mut h);
                h.finish()
            }
        }
    }
}

impl PartialEq for AssociationPath {
    fn eq(&self, other: &Self) -> bool {
        if self.prior != other.prior || self.len() != other.len() || self.fingerprint() != other.fingerprint() {
            return false;
        }
        let (mut a, mut b) = (self.tail.as_ref(), other.tail.as_ref());
        loop {
            match (a, b) {
                (None, None) => return true,
                (Some(x), Some(y)) => {
                    if Arc::ptr_eq(x, y) {
                        return true;
                    }
                    if x.step != y.step {
                        return false;
                    }
                    a = x.parent.as_ref();
                    b = y.parent.as_ref();
                }
                _ => return false,
            }
        }
    }
}

impl Eq for AssociationPath {}

impl Hash for AssociationPath {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.prior.hash(state);
        self.len().hash(state);
        self.fingerprint().hash(state);
    }
}

impl Ord for AssociationPath {
    fn cmp(&self, other: &Self) -> Ordering {
        self.prior.cmp(&other.prior).then_with(|| self.steps().cmp(&other.steps()))
    }
}

impl PartialOrd for AssociationPath {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for AssociationPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "β0={}", self.prior)?;
        for s in self.steps() {
            write!(f, " {:?}", s.0)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn child_differs_only_in_last_step() {
        let root = AssociationPath::root(2);
        let a = root.child(AssociationVector(vec![0, 1]));
        let b = a.child(AssociationVector(vec![1, 2]));
        assert_eq!(b.len(), 2);
        assert_eq!(b.parent().unwrap(), a);
        assert_eq!(b.steps()[..1], a.steps()[..]);
        assert_eq!(b.last(), Some(&AssociationVector(vec![1, 2])));
        assert_eq!(b.prior_index(), 2);
    }

    proptest! {
        #[test]
        fn structural_equality_matches_step_equality(
            prior in 0usize..3,
            xs in proptest::collection::vec(proptest::collection::vec(0usize..3, 2), 0..5),
            ys in proptest::collection::vec(proptest::collection::vec(0usize..3, 2), 0..5),
        ) {
            let build = |steps: &Vec<Vec<usize>>| steps.iter().fold(AssociationPath::root(prior), |p, s| p.child(AssociationVector(s.clone())));
            let (a, b) = (build(&xs), build(&ys));
            prop_assert_eq!(a == b, xs == ys);
            prop_assert_eq!(a.cmp(&b) == Ordering::Equal, xs == ys);
            prop_assert_eq!(a.steps().into_iter().map(|v| v.0).collect::<Vec<_>>(), xs);
        }
    }
}
