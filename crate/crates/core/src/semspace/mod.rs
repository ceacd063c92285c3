//! Semantic spaces: sensitive-neuron discovery, target encodings and
//! regularized activation-maximization visualization.

mod extract;
mod ssn;
mod tv;
mod visualize;

pub use extract::extract_semantic_space;
pub use ssn::{
    build_target_encoding, discover_ssns, PcProvenance, SemanticSpace, SsnSelection,
    TargetEncoding, DEFAULT_SSN_COUNT, DEFAULT_TARGET_SCALE,
};
pub use tv::tv_regularizer;
pub use visualize::{visualize, VisConfig, Visualization};
