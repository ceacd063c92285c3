//! Semantic interpretation of convolutional classifiers.
//!
//! The pipeline extracts class-level common traits with row-centered PCA over
//! GAP features, finds semantically sensitive neurons by comparing masked and
//! unmasked samples, visualizes and fits the resulting semantic spaces, and
//! turns semantic probabilities into trust assessments, sample searches and
//! adversarial flags.

// `!(x > 0.0)` style checks are meant to reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assessment;
pub mod config;
pub mod corpus;
pub mod error;
pub mod evolution;
pub mod io;
pub mod nn;
pub mod pca;
pub mod pipeline;
pub mod semspace;
pub mod semstats;
pub mod superpixel;
pub mod synth;

pub use error::{Error, Result};
