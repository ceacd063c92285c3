use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::Segmentation;
use crate::error::{Error, Result};
use crate::nn::Image;

/// Which segments to paint over and which segment supplies the paint.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskSpec {
    pub targets: BTreeSet<u32>,
    pub fill: u32,
}

impl MaskSpec {
    pub fn validate(&self, segment_count: usize) -> Result<()> {
        if self.fill as usize >= segment_count {
            return Err(Error::param(format!(
                "fill segment {} out of range ({segment_count} segments)",
                self.fill
            )));
        }
        if self.targets.contains(&self.fill) {
            return Err(Error::param(format!(
                "fill segment {} is also a target",
                self.fill
            )));
        }
        if let Some(&t) = self.targets.iter().find(|&&t| t as usize >= segment_count) {
            return Err(Error::param(format!(
                "target segment {t} out of range ({segment_count} segments)"
            )));
        }
        Ok(())
    }
}

fn check_dims(image: &Image, seg: &Segmentation) -> Result<()> {
    let s = image.shape();
    if s.height != seg.height || s.width != seg.width {
        return Err(Error::shape(format!(
            "image is {}x{}, segmentation is {}x{}",
            s.height, s.width, seg.height, seg.width
        )));
    }
    Ok(())
}

/// Mean color of one segment, per channel.
pub fn segment_mean_color(image: &Image, seg: &Segmentation, id: u32) -> Result<Vec<f64>> {
    check_dims(image, seg)?;
    let channels = image.shape().channels;
    let mut sum = vec![0.0; channels];
    let mut count = 0usize;
    for (p, &l) in seg.labels.iter().enumerate() {
        if l == id {
            for (c, s) in sum.iter_mut().enumerate() {
                *s += image.channel(c)[p];
            }
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::param(format!("segment {id} is empty")));
    }
    Ok(sum.into_iter().map(|s| s / count as f64).collect())
}

pub fn mask_segments(image: &Image, seg: &Segmentation, spec: &MaskSpec) -> Result<Image> {
    check_dims(image, seg)?;
    spec.validate(seg.segment_count())?;
    let mut out = image.clone();
    if spec.targets.is_empty() {
        return Ok(out);
    }
    let color = segment_mean_color(image, seg, spec.fill)?;
    for (p, l) in seg.labels.iter().enumerate() {
        if spec.targets.contains(l) {
            out.set_pixel(p, &color);
        }
    }
    Ok(out)
}

/// Mask covering a pixel region with whole superpixels.
///
/// Targets are the segments at least half inside `region` (or the single
/// most-covered segment when none is). The fill is the neighboring segment,
/// outside the region, that shares the longest border with the targets.
pub fn region_mask_spec(seg: &Segmentation, region: &[bool]) -> Result<MaskSpec> {
    if region.len() != seg.labels.len() {
        return Err(Error::shape(format!(
            "region has {} pixels, segmentation has {}",
            region.len(),
            seg.labels.len()
        )));
    }
    let count = seg.segment_count();
    let sizes = seg.segment_sizes();
    let mut inside = vec![0usize; count];
    for (&l, &r) in seg.labels.iter().zip(region) {
        if r {
            inside[l as usize] += 1;
        }
    }
    let mut targets: BTreeSet<u32> = (0..count)
        .filter(|&s| 2 * inside[s] >= sizes[s] && inside[s] > 0)
        .map(|s| s as u32)
        .collect();
    if targets.is_empty() {
        let (best, &n) = inside
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .ok_or_else(|| Error::param("empty segmentation"))?;
        if n == 0 {
            return Err(Error::param("region is empty"));
        }
        targets.insert(best as u32);
    }

    let (h, w) = (seg.height, seg.width);
    let mut border = vec![0usize; count];
    for y in 0..h {
        for x in 0..w {
            let a = seg.label(y, x);
            for (yy, xx) in [(y + 1, x), (y, x + 1)] {
                if yy >= h || xx >= w {
                    continue;
                }
                let b = seg.label(yy, xx);
                match (targets.contains(&a), targets.contains(&b)) {
                    (true, false) => border[b as usize] += 1,
                    (false, true) => border[a as usize] += 1,
                    _ => {}
                }
            }
        }
    }
    // prefer neighbors untouched by the region, then the longest border
    let fill = (0..count)
        .filter(|&s| !targets.contains(&(s as u32)))
        .max_by(|&a, &b| {
            let key = |s: usize| (border[s] > 0, inside[s] == 0, border[s]);
            key(a).cmp(&key(b)).then(b.cmp(&a))
        })
        .ok_or_else(|| Error::param("every segment is a target; nothing left to fill from"))?;
    Ok(MaskSpec {
        targets,
        fill: fill as u32,
    })
}
