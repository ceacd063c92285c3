//! Statistics over semantic spaces: weighted average activation, normal
//! fitting, semantic probability, q-q diagnostics, sample search and the
//! adversarial flag.

mod activation;
mod adversarial;
mod fit;
mod radar;
mod ranktest;

pub use activation::{
    fit_space, search_samples, space_probability, weighted_activation, Predicate,
};
pub use adversarial::{flag_adversarial, pgd_attack, AdversarialCriterion, AttackConfig};
pub use fit::{
    fit_activation_distribution, normal_cdf, normal_quantile, normal_sf, qq_r2,
    semantic_probability, FittedActivation, MIN_FIT_SAMPLES,
};
pub use radar::{Radar, CONCEPTS};
pub use ranktest::{mann_whitney_less, MannWhitney};
