use super::{discover_ssns, PcProvenance, SemanticSpace};
use crate::error::Result;
use crate::nn::{CnnModel, Image};
use crate::pca::{feature_matrix, row_centered_pca, Retention};

/// Semantic space of one concept: 1st PCs of unmasked and masked samples of
/// the class, compared neuron by neuron.
pub fn extract_semantic_space(
    model: &CnnModel,
    unmasked: &[Image],
    masked: &[Image],
    class: &str,
    concept: &str,
    n_ssn: usize,
) -> Result<SemanticSpace> {
    let pu = row_centered_pca(&feature_matrix(model, unmasked)?, Retention::Fixed(1))?;
    let pm = row_centered_pca(&feature_matrix(model, masked)?, Retention::Fixed(1))?;
    let selection = discover_ssns(&pu.components[0], &pm.components[0], n_ssn)?;
    let flipped = selection.mask_flipped;
    let mut space = SemanticSpace::new(concept, class, model.feature_width(), selection)?;
    space.source = Some(PcProvenance {
        unmasked_samples: unmasked.len(),
        masked_samples: masked.len(),
        unmasked_ratio: pu.information_ratios[0],
        masked_ratio: pm.information_ratios[0],
        mask_flipped: flipped,
    });
    Ok(space)
}
