use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::semstats::FittedActivation;

/// Default number of semantically sensitive neurons kept per space.
pub const DEFAULT_SSN_COUNT: usize = 5;
/// Default magnitude of the largest target-encoding entry.
pub const DEFAULT_TARGET_SCALE: f64 = 30.0;

/// Neurons whose first-PC score moves most when a concept is masked.
#[derive(Clone, Debug, PartialEq)]
pub struct SsnSelection {
    pub indices: Vec<usize>,
    /// Signed `s_unmask - s_mask` at `indices`, ordered by descending magnitude.
    pub weights: Vec<f64>,
    /// Whether the masked PC was negated to align with the unmasked one.
    pub mask_flipped: bool,
}

/// Selects the `n` features with the largest `|s_unmask - s_mask|`.
///
/// The masked PC is negated first when its dot product with the unmasked PC
/// is negative. Ties in magnitude go to the lower index.
pub fn discover_ssns(pc_unmask: &[f64], pc_mask: &[f64], n: usize) -> Result<SsnSelection> {
    if pc_unmask.len() != pc_mask.len() {
        return Err(Error::shape(format!(
            "unmasked PC has {} scores, masked PC has {}",
            pc_unmask.len(),
            pc_mask.len()
        )));
    }
    if n == 0 || n > pc_unmask.len() {
        return Err(Error::param(format!(
            "cannot select {n} neurons from {} features",
            pc_unmask.len()
        )));
    }
    let dot: f64 = pc_unmask.iter().zip(pc_mask).map(|(a, b)| a * b).sum();
    let flip = dot < 0.0;
    let diff: Vec<f64> = pc_unmask
        .iter()
        .zip(pc_mask)
        .map(|(u, m)| if flip { u + m } else { u - m })
        .collect();
    if diff.iter().all(|d| *d == 0.0) {
        return Err(Error::DegenerateDifference);
    }
    let mut order: Vec<usize> = (0..diff.len()).collect();
    order.sort_by(|&a, &b| diff[b].abs().total_cmp(&diff[a].abs()).then(a.cmp(&b)));
    order.truncate(n);
    Ok(SsnSelection {
        weights: order.iter().map(|&i| diff[i]).collect(),
        indices: order,
        mask_flipped: flip,
    })
}

/// Where the SSNs of a space came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcProvenance {
    pub unmasked_samples: usize,
    pub masked_samples: usize,
    pub unmasked_ratio: f64,
    pub masked_ratio: f64,
    pub mask_flipped: bool,
}

/// One concept of one class: SSN indices, their signed weights and,
/// once fitted, the distribution of its weighted average activation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemanticSpace {
    pub concept: String,
    pub class: String,
    pub feature_width: usize,
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
    pub scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<PcProvenance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FittedActivation>,
}

impl SemanticSpace {
    pub fn new(
        concept: &str,
        class: &str,
        feature_width: usize,
        selection: SsnSelection,
    ) -> Result<Self> {
        let space = Self {
            concept: concept.to_string(),
            class: class.to_string(),
            feature_width,
            indices: selection.indices,
            weights: selection.weights,
            scale: DEFAULT_TARGET_SCALE,
            source: None,
            fit: None,
        };
        space.validate()?;
        Ok(space)
    }

    pub fn ssn_count(&self) -> usize {
        self.indices.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.indices.is_empty() || self.indices.len() != self.weights.len() {
            return Err(Error::InvalidInput(format!(
                "space {}/{}: need >= 1 SSN with one weight each",
                self.class, self.concept
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        for &i in &self.indices {
            if i >= self.feature_width || !seen.insert(i) {
                return Err(Error::InvalidInput(format!(
                    "space {}/{}: SSN index {i} repeated or outside [0, {})",
                    self.class, self.concept, self.feature_width
                )));
            }
        }
        if self.weights.iter().any(|w| !w.is_finite())
            || self.weights.windows(2).any(|w| w[0].abs() < w[1].abs())
        {
            return Err(Error::InvalidInput(format!(
                "space {}/{}: weights must be finite and sorted by descending magnitude",
                self.class, self.concept
            )));
        }
        if let Some(fit) = &self.fit {
            fit.validate()?;
        }
        Ok(())
    }

    pub fn fitted(&self) -> Result<&FittedActivation> {
        self.fit
            .as_ref()
            .ok_or_else(|| Error::NotFitted(format!("{}/{}", self.class, self.concept)))
    }
}

/// Visualization target: zero except at the SSNs.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetEncoding {
    pub values: Vec<f64>,
    pub scale: f64,
}

/// `values[j] = scale * weight_j / max|weight|` at the SSNs, zero elsewhere.
pub fn build_target_encoding(space: &SemanticSpace, scale: f64) -> Result<TargetEncoding> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::param("target scale must be > 0"));
    }
    let max = space.weights.iter().map(|w| w.abs()).fold(0.0, f64::max);
    if max == 0.0 {
        return Err(Error::DegenerateDifference);
    }
    let mut values = vec![0.0; space.feature_width];
    for (&i, &w) in space.indices.iter().zip(&space.weights) {
        if i >= values.len() {
            return Err(Error::shape(format!(
                "SSN index {i} outside feature width {}",
                values.len()
            )));
        }
        values[i] = scale * w / max;
    }
    Ok(TargetEncoding { values, scale })
}
