use std::collections::VecDeque;

use super::lab::{rgb_to_lab, LabImage};
use crate::error::{Error, Result};
use crate::nn::Image;

pub const DEFAULT_COMPACTNESS: f64 = 10.0;
pub const DEFAULT_MAX_ITER: usize = 10;
/// Total center movement, in `[l, a, b, x, y]` units, that ends iteration.
pub const RESIDUAL_THRESHOLD: f64 = 1e-3;

/// SLIC output. Center coordinates are `[l, a, b, x, y]` with `x` the column.
#[derive(Clone, Debug, PartialEq)]
pub struct Segmentation {
    pub height: usize,
    pub width: usize,
    /// Row-major label per pixel.
    pub labels: Vec<u32>,
    pub centers: Vec<[f64; 5]>,
    /// Requested cluster count.
    pub k_s: usize,
    /// Pixels per image; the numerator of the grid interval.
    pub pixel_count: usize,
    /// `sqrt(pixel_count / k_s)`.
    pub grid_interval: f64,
    pub compactness: f64,
    /// Divisor of the spatial distance term (equal to the grid interval).
    pub spatial_normalizer: f64,
    pub iterations: usize,
    /// Total center movement after each update round.
    pub residuals: Vec<f64>,
}

impl Segmentation {
    pub fn segment_count(&self) -> usize {
        self.centers.len()
    }

    pub fn label(&self, y: usize, x: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    pub fn segment_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.segment_count()];
        for &l in &self.labels {
            sizes[l as usize] += 1;
        }
        sizes
    }

    /// Builds a segmentation from an existing label map (for instance one read
    /// from disk). Labels must be dense: every id below the maximum occurs.
    pub fn from_labels(image: &Image, labels: Vec<u32>) -> Result<Self> {
        let s = image.shape();
        if labels.len() != s.plane() {
            return Err(Error::shape(format!(
                "label map has {} entries, image has {} pixels",
                labels.len(),
                s.plane()
            )));
        }
        let lab = rgb_to_lab(image)?;
        let count = labels.iter().max().map_or(0, |&m| m as usize + 1);
        let centers = cluster_means(&lab, &labels, count);
        if centers.iter().any(Option::is_none) {
            return Err(Error::InvalidInput("label map has gaps in its ids".into()));
        }
        let n = s.plane() as f64;
        let interval = (n / count as f64).sqrt();
        Ok(Self {
            height: s.height,
            width: s.width,
            labels,
            centers: centers.into_iter().flatten().collect(),
            k_s: count,
            pixel_count: s.plane(),
            grid_interval: interval,
            compactness: DEFAULT_COMPACTNESS,
            spatial_normalizer: interval,
            iterations: 0,
            residuals: Vec::new(),
        })
    }
}

/// Grid with `ny * nx <= k` as large as possible and cell aspect at most 2;
/// ties go to more columns.
fn seed_grid(h: usize, w: usize, k: usize) -> (usize, usize) {
    let mut best: Option<(usize, usize)> = None;
    let mut fallback = (1, 1);
    for ny in 1..=k.min(h) {
        let nx = (k / ny).min(w);
        if nx == 0 {
            continue;
        }
        let (ch, cw) = (h as f64 / ny as f64, w as f64 / nx as f64);
        let better = |cur: (usize, usize)| {
            ny * nx > cur.0 * cur.1 || (ny * nx == cur.0 * cur.1 && nx > cur.1)
        };
        if ch.max(cw) / ch.min(cw) <= 2.0 + 1e-12 && best.is_none_or(better) {
            best = Some((ny, nx));
        }
        if better(fallback) {
            fallback = (ny, nx);
        }
    }
    best.unwrap_or(fallback)
}

fn sq(a: [f64; 3], b: [f64; 3]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

fn gradient(lab: &LabImage, y: usize, x: usize) -> f64 {
    let (h, w) = (lab.height, lab.width);
    let gx = sq(
        lab.at(y, (x + 1).min(w - 1)),
        lab.at(y, x.saturating_sub(1)),
    );
    let gy = sq(
        lab.at((y + 1).min(h - 1), x),
        lab.at(y.saturating_sub(1), x),
    );
    gx + gy
}

fn cluster_means(lab: &LabImage, labels: &[u32], count: usize) -> Vec<Option<[f64; 5]>> {
    let mut sums = vec![[0.0; 5]; count];
    let mut counts = vec![0usize; count];
    for (p, &l) in labels.iter().enumerate() {
        let (y, x) = (p / lab.width, p % lab.width);
        let c = lab.data[p];
        let s = &mut sums[l as usize];
        s[0] += c[0];
        s[1] += c[1];
        s[2] += c[2];
        s[3] += x as f64;
        s[4] += y as f64;
        counts[l as usize] += 1;
    }
    sums.into_iter()
        .zip(counts)
        .map(|(s, n)| (n > 0).then(|| s.map(|v| v / n as f64)))
        .collect()
}

pub fn slic_segment(
    image: &Image,
    k_s: usize,
    compactness: f64,
    max_iter: usize,
) -> Result<Segmentation> {
    let lab = rgb_to_lab(image)?;
    let (h, w) = (lab.height, lab.width);
    let n = h * w;
    if k_s == 0 || k_s > n {
        return Err(Error::param(format!("k_s must be in 1..={n}, got {k_s}")));
    }
    if max_iter == 0 {
        return Err(Error::param("max_iter must be at least 1"));
    }
    if !(compactness > 0.0) || !compactness.is_finite() {
        return Err(Error::param(format!(
            "compactness must be positive, got {compactness}"
        )));
    }
    let interval = (n as f64 / k_s as f64).sqrt();

    let (ny, nx) = seed_grid(h, w, k_s);
    let mut centers = Vec::with_capacity(ny * nx);
    for gy in 0..ny {
        for gx in 0..nx {
            // cell centers in pixel-index coordinates, rounded down
            let y0 = ((gy as f64 + 0.5) * h as f64 / ny as f64 - 0.5)
                .floor()
                .max(0.0) as usize;
            let x0 = ((gx as f64 + 0.5) * w as f64 / nx as f64 - 0.5)
                .floor()
                .max(0.0) as usize;
            let (mut by, mut bx) = (y0, x0);
            let mut best = gradient(&lab, y0, x0);
            for y in y0.saturating_sub(1)..=(y0 + 1).min(h - 1) {
                for x in x0.saturating_sub(1)..=(x0 + 1).min(w - 1) {
                    let g = gradient(&lab, y, x);
                    if g < best {
                        (best, by, bx) = (g, y, x);
                    }
                }
            }
            let c = lab.at(by, bx);
            centers.push([c[0], c[1], c[2], bx as f64, by as f64]);
        }
    }

    let inv_c = 1.0 / (compactness * compactness);
    let inv_s = 1.0 / (interval * interval);
    let dist = |c: &[f64; 5], p: usize| {
        let (y, x) = (p / w, p % w);
        let col = sq([c[0], c[1], c[2]], lab.data[p]);
        let sp = (c[3] - x as f64).powi(2) + (c[4] - y as f64).powi(2);
        col * inv_c + sp * inv_s
    };
    let radius = interval;
    let mut labels = vec![u32::MAX; n];
    let mut best_d = vec![f64::INFINITY; n];
    let mut residuals = Vec::new();
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        labels.fill(u32::MAX);
        best_d.fill(f64::INFINITY);
        for (k, c) in centers.iter().enumerate() {
            // the 2S x 2S window centered on the (fractional) center
            let span = |c: f64, len: usize| {
                let lo = (c - radius).ceil().max(0.0) as usize;
                let hi = ((c + radius).floor() as isize).min(len as isize - 1);
                lo..=hi.max(0) as usize
            };
            for y in span(c[4], h) {
                for x in span(c[3], w) {
                    let p = y * w + x;
                    let d = dist(c, p);
                    if d < best_d[p] {
                        best_d[p] = d;
                        labels[p] = k as u32;
                    }
                }
            }
        }
        for p in 0..n {
            if labels[p] == u32::MAX {
                let mut best = (f64::INFINITY, 0);
                for (k, c) in centers.iter().enumerate() {
                    let d = dist(c, p);
                    if d < best.0 {
                        best = (d, k);
                    }
                }
                labels[p] = best.1 as u32;
            }
        }
        let means = cluster_means(&lab, &labels, centers.len());
        let mut residual = 0.0;
        for (c, m) in centers.iter_mut().zip(means) {
            if let Some(m) = m {
                residual += c
                    .iter()
                    .zip(&m)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                *c = m;
            }
        }
        residuals.push(residual);
        if residual < RESIDUAL_THRESHOLD {
            break;
        }
    }

    enforce_connectivity(&mut labels, h, w);
    let count = labels.iter().max().map_or(0, |&m| m as usize + 1);
    let centers = cluster_means(&lab, &labels, count)
        .into_iter()
        .flatten()
        .collect();
    Ok(Segmentation {
        height: h,
        width: w,
        labels,
        centers,
        k_s,
        pixel_count: n,
        grid_interval: interval,
        compactness,
        spatial_normalizer: interval,
        iterations,
        residuals,
    })
}

/// Merges every 4-connected component that is not the largest piece of its
/// label into the largest adjacent segment, then relabels in scan order.
fn enforce_connectivity(labels: &mut [u32], h: usize, w: usize) {
    // a merged orphan can land on another orphan, so repeat until stable
    while merge_orphans(labels, h, w) {}
    let label_count = labels.iter().max().map_or(0, |&m| m as usize + 1);
    let mut remap = vec![u32::MAX; label_count];
    let mut next = 0;
    for l in labels.iter_mut() {
        let r = &mut remap[*l as usize];
        if *r == u32::MAX {
            *r = next;
            next += 1;
        }
        *l = *r;
    }
}

/// One merge pass; returns whether anything changed.
fn merge_orphans(labels: &mut [u32], h: usize, w: usize) -> bool {
    let n = h * w;
    let neighbors = |p: usize| {
        let (y, x) = (p / w, p % w);
        [
            (y > 0).then(|| p - w),
            (y + 1 < h).then(|| p + w),
            (x > 0).then(|| p - 1),
            (x + 1 < w).then(|| p + 1),
        ]
        .into_iter()
        .flatten()
    };
    let mut comp = vec![usize::MAX; n];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let mut members = vec![start];
        comp[start] = id;
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            for q in neighbors(p) {
                if comp[q] == usize::MAX && labels[q] == labels[start] {
                    comp[q] = id;
                    members.push(q);
                    queue.push_back(q);
                }
            }
        }
        comps.push(members);
    }

    let label_count = labels.iter().max().map_or(0, |&m| m as usize + 1);
    let mut main: Vec<Option<usize>> = vec![None; label_count];
    for (id, members) in comps.iter().enumerate() {
        let l = labels[members[0]] as usize;
        if main[l].is_none_or(|m| comps[m].len() < members.len()) {
            main[l] = Some(id);
        }
    }
    let mut sizes = vec![0usize; label_count];
    for &l in labels.iter() {
        sizes[l as usize] += 1;
    }
    let mut changed = false;
    for (id, members) in comps.iter().enumerate() {
        let own = labels[members[0]] as usize;
        if main[own] == Some(id) {
            continue;
        }
        let mut target: Option<u32> = None;
        for &p in members {
            for q in neighbors(p) {
                let l = labels[q];
                if comp[q] == id || l as usize == own {
                    continue;
                }
                let better = target.is_none_or(|t| {
                    sizes[l as usize] > sizes[t as usize]
                        || (sizes[l as usize] == sizes[t as usize] && l < t)
                });
                if better {
                    target = Some(l);
                }
            }
        }
        if let Some(t) = target {
            for &p in members {
                labels[p] = t;
            }
            sizes[own] -= members.len();
            sizes[t as usize] += members.len();
            changed = true;
        }
    }
    changed
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::TensorShape;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_color(h: usize, w: usize, split: usize) -> Image {
        let mut img = Image::zeros(TensorShape::rgb(h, w).unwrap());
        for y in 0..h {
            for x in 0..w {
                let c = if x < split {
                    [1.0, 0.0, 0.0]
                } else {
                    [0.0, 0.0, 1.0]
                };
                img.set_pixel(y * w + x, &c);
            }
        }
        img
    }

    fn components_are_connected(seg: &Segmentation) -> bool {
        let mut copy = seg.labels.clone();
        // enforcement changes any map that has a split label
        enforce_connectivity(&mut copy, seg.height, seg.width);
        copy == seg.labels
    }

    #[test]
    fn uniform_image_gives_grid() {
        let img = Image::filled(TensorShape::rgb(30, 30).unwrap(), 0.4);
        let seg = slic_segment(&img, 9, DEFAULT_COMPACTNESS, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(seg.segment_count(), 9);
        let sizes = seg.segment_sizes();
        assert!(sizes.iter().all(|&s| s == 100), "{sizes:?}");
        assert_eq!(seg.label(0, 0), 0);
        assert_eq!(seg.label(29, 29), 8);
    }

    #[test]
    fn two_colors_split_at_boundary() {
        let img = two_color(20, 20, 9);
        let seg = slic_segment(&img, 2, DEFAULT_COMPACTNESS, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(seg.segment_count(), 2);
        for y in 0..20 {
            let first_right = (0..20)
                .find(|&x| seg.label(y, x) != seg.label(y, 0))
                .unwrap();
            assert!(
                (first_right as isize - 9).abs() <= 1,
                "row {y}: {first_right}"
            );
        }
    }

    #[test]
    fn one_segment_per_pixel() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data: Vec<f64> = (0..3 * 16).map(|_| rng.random()).collect();
        let img = Image::new(TensorShape::rgb(4, 4).unwrap(), data).unwrap();
        let seg = slic_segment(&img, 16, DEFAULT_COMPACTNESS, DEFAULT_MAX_ITER).unwrap();
        assert!(seg.segment_count() <= 16);
        assert!(seg
            .labels
            .iter()
            .all(|&l| (l as usize) < seg.segment_count()));
        assert_eq!(seg.segment_sizes().iter().sum::<usize>(), 16);
    }

    #[test]
    fn invalid_params() {
        let img = Image::filled(TensorShape::rgb(3, 3).unwrap(), 0.1);
        assert!(matches!(
            slic_segment(&img, 10, 10.0, 5),
            Err(Error::InvalidParam(_))
        ));
        assert!(matches!(
            slic_segment(&img, 0, 10.0, 5),
            Err(Error::InvalidParam(_))
        ));
        assert!(matches!(
            slic_segment(&img, 2, 10.0, 0),
            Err(Error::InvalidParam(_))
        ));
    }

    #[test]
    fn random_images_partition_and_connect() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let data: Vec<f64> = (0..3 * 24 * 24).map(|_| rng.random()).collect();
            let img = Image::new(TensorShape::rgb(24, 24).unwrap(), data).unwrap();
            let seg = slic_segment(&img, 20, DEFAULT_COMPACTNESS, DEFAULT_MAX_ITER).unwrap();
            assert!(seg.segment_count() <= 20);
            assert_eq!(seg.segment_sizes().iter().sum::<usize>(), 24 * 24);
            assert!(seg.segment_sizes().iter().all(|&s| s > 0));
            assert!(components_are_connected(&seg));
            let again = slic_segment(&img, 20, DEFAULT_COMPACTNESS, DEFAULT_MAX_ITER).unwrap();
            assert_eq!(seg.labels, again.labels);
        }
    }

    #[test]
    fn residual_shrinks_after_first_round() {
        // Round-to-round movement is not monotone on these images (pixels
        // switching between windowed clusters can bump a later round), so only
        // the overall contraction is checked.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for case in 0..10 {
            // flat random Voronoi blobs plus noise
            let (h, w) = (32, 32);
            let blobs: Vec<[f64; 6]> = (0..4)
                .map(|_| {
                    std::array::from_fn(|i| {
                        if i < 2 {
                            rng.random::<f64>() * 32.0
                        } else {
                            rng.random()
                        }
                    })
                })
                .collect();
            let mut img = Image::zeros(TensorShape::rgb(h, w).unwrap());
            for y in 0..h {
                for x in 0..w {
                    let near = blobs
                        .iter()
                        .min_by(|a, b| {
                            let da = (a[0] - x as f64).powi(2) + (a[1] - y as f64).powi(2);
                            let db = (b[0] - x as f64).powi(2) + (b[1] - y as f64).powi(2);
                            da.total_cmp(&db)
                        })
                        .unwrap();
                    let noise: f64 = rng.random_range(-0.05..0.05);
                    img.set_pixel(
                        y * w + x,
                        &[near[2] + noise, near[3] + noise, near[4] + noise]
                            .map(|v| v.clamp(0.0, 1.0)),
                    );
                }
            }
            let seg = slic_segment(&img, 16, DEFAULT_COMPACTNESS, DEFAULT_MAX_ITER).unwrap();
            let r = &seg.residuals;
            let last = *r.last().unwrap();
            assert!(last < r[1] && last < r[0] / 4.0, "case {case}: {r:?}");
        }
    }

    #[test]
    fn grid_choice() {
        assert_eq!(seed_grid(30, 30, 9), (3, 3));
        assert_eq!(seed_grid(20, 20, 2), (1, 2));
        assert_eq!(seed_grid(4, 4, 16), (4, 4));
        assert_eq!(seed_grid(64, 64, 40), (5, 8));
    }

    #[test]
    fn orphans_are_merged() {
        // label 0 appears in two disconnected places
        let mut labels = vec![0, 0, 1, 1, 1, 1, 1, 1, 0];
        enforce_connectivity(&mut labels, 3, 3);
        assert_eq!(labels, vec![0, 0, 1, 1, 1, 1, 1, 1, 1]);
    }
}
