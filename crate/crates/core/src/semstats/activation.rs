use serde::{Deserialize, Serialize};

use super::{fit_activation_distribution, semantic_probability};
use crate::error::{Error, Result};
use crate::nn::FeatureVector;
use crate::semspace::SemanticSpace;

/// `A_s = (1 / N_SSN) * sum_i a_i * weight_i` over the space's SSNs.
pub fn weighted_activation(features: &FeatureVector, space: &SemanticSpace) -> Result<f64> {
    let a = features.as_slice();
    let mut acc = 0.0;
    for (&i, &w) in space.indices.iter().zip(&space.weights) {
        let ai = a.get(i).ok_or_else(|| {
            Error::shape(format!(
                "SSN index {i} outside a feature vector of length {}",
                a.len()
            ))
        })?;
        acc += ai * w;
    }
    Ok(acc / space.indices.len() as f64)
}

/// Semantic probability of one feature vector in a fitted space.
pub fn space_probability(features: &FeatureVector, space: &SemanticSpace) -> Result<f64> {
    let fit = space.fitted()?;
    Ok(semantic_probability(
        weighted_activation(features, space)?,
        fit,
    ))
}

/// Fits the space's activation distribution over natural samples and stores
/// it in the space. Returns the activations used.
pub fn fit_space(space: &mut SemanticSpace, features: &[FeatureVector]) -> Result<Vec<f64>> {
    let values = features
        .iter()
        .map(|f| weighted_activation(f, space))
        .collect::<Result<Vec<_>>>()?;
    space.fit = Some(fit_activation_distribution(&values)?);
    Ok(values)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    Above(f64),
    Below(f64),
}

impl Predicate {
    pub fn holds(&self, p: f64) -> bool {
        match *self {
            Predicate::Above(t) => p > t,
            Predicate::Below(t) => p < t,
        }
    }
}

/// Indices (in input order) of samples whose semantic probability
/// satisfies `predicate`.
pub fn search_samples(
    features: &[FeatureVector],
    space: &SemanticSpace,
    predicate: Predicate,
) -> Result<Vec<usize>> {
    space.fitted()?;
    let mut hits = Vec::new();
    for (i, f) in features.iter().enumerate() {
        if predicate.holds(space_probability(f, space)?) {
            hits.push(i);
        }
    }
    Ok(hits)
}
