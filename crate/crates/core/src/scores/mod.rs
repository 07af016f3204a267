//! Bayesian estimation of dynamic scores under a Whittle prior.

pub mod design;
pub mod posterior;
pub mod whittle;

pub use design::DesignStack;
pub use posterior::{
    exact_posterior, log_posterior, map_estimate, posterior_gradient, ComponentScores, MapResult,
    PosteriorObjective, ScoreSet, DIMENSION_GUARD,
};
pub use whittle::{whittle_log_prior, WhittleSpectrum};
