//! Data association: enumeration of feasible association vectors, the
//! landmark association/observation model with negative information, the
//! per-hypothesis evidence `ζ` and the hypothesis weight update.

mod model;
mod observation;
mod path;

pub use model::{
    association_factor, association_likelihood, landmark_observation_likelihood, da_weight_update, feasible_associations, observation_factor,
    observation_likelihood, posterior, range_probability, zeta, Candidate, ObservationFactor, ZetaMode,
    expand,
};
pub use observation::{ObservationArray, ObservationElement};
pub use path::{AssociationPath, AssociationVector};

#[cfg(test)]
mod tests;
