//! SLIC superpixels in CIELAB and superpixel masking.

mod lab;
mod mask;
mod slic;

pub use lab::{rgb_to_lab, srgb_pixel_to_lab, LabImage};
pub use mask::{mask_segments, region_mask_spec, segment_mean_color, MaskSpec};
pub use slic::{
    slic_segment, Segmentation, DEFAULT_COMPACTNESS, DEFAULT_MAX_ITER, RESIDUAL_THRESHOLD,
};
