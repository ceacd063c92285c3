//! Row-centered PCA of stacked GAP features (common traits), the layer-wise
//! variant over spatial maps, and the spread stability measure.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{evolve, genome_to_image, GaConfig, DEFAULT_GA_SEGMENTS};
use crate::nn::{CnnModel, Image};
use crate::superpixel::{slic_segment, DEFAULT_COMPACTNESS, DEFAULT_MAX_ITER};

/// Default share of total variance the retained components must reach.
pub const DEFAULT_VARIANCE_TARGET: f64 = 0.85;
/// Eigenvalues below this multiple of the largest count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// `N_s x p` matrix, rows are samples, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DataMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DataMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows < 2 {
            return Err(Error::InsufficientSamples {
                needed: 2,
                got: rows,
            });
        }
        if cols == 0 || values.len() != rows * cols {
            return Err(Error::shape(format!(
                "{} values do not form a {rows}x{cols} matrix",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "non-finite entry in data matrix".into(),
            ));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::shape(format!(
                "row of length {} among rows of length {cols}",
                r.len()
            )));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn samples(&self) -> usize {
        self.rows
    }

    pub fn features(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Retention {
    Fixed(usize),
    /// Smallest count whose information ratios sum to at least this.
    Variance(f64),
}

impl Default for Retention {
    fn default() -> Self {
        Retention::Variance(DEFAULT_VARIANCE_TARGET)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaResult {
    /// Retained PCs, each of length `p` (the columns of `X_k`).
    pub components: Vec<Vec<f64>>,
    /// Eigenvalues of the retained PCs, descending.
    pub eigenvalues: Vec<f64>,
    pub information_ratios: Vec<f64>,
    /// Every eigenvalue of `S`, descending, negatives clipped to zero.
    pub all_eigenvalues: Vec<f64>,
    /// Eigenvectors of `S` for the retained PCs, each of length `N_s`.
    pub sample_loadings: Vec<Vec<f64>>,
    pub row_means: Vec<f64>,
    /// `tr(S)`.
    pub total_variance: f64,
    pub rank: usize,
}

impl PcaResult {
    pub fn retained(&self) -> usize {
        self.components.len()
    }

    /// PC `i` scaled to unit Euclidean norm.
    pub fn unit_component(&self, i: usize) -> Vec<f64> {
        let c = &self.components[i];
        let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            c.iter().map(|v| v / norm).collect()
        } else {
            c.clone()
        }
    }

    /// Scores as CSV: one row per feature, one column per PC.
    pub fn scores_csv(&self) -> String {
        let mut out = String::from("feature");
        for i in 0..self.retained() {
            out.push_str(&format!(",pc{}", i + 1));
        }
        out.push('\n');
        let p = self.components.first().map_or(0, Vec::len);
        for j in 0..p {
            out.push_str(&j.to_string());
            for c in &self.components {
                out.push_str(&format!(",{}", c[j]));
            }
            out.push('\n');
        }
        out
    }
}

/// Flips `v` so its largest-magnitude entry (first on ties) is positive.
fn sign_of_largest(v: &[f64]) -> f64 {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|x| *x < 0.0) {
        -1.0
    } else {
        1.0
    }
}

pub fn row_centered_pca(x: &DataMatrix, retention: Retention) -> Result<PcaResult> {
    let (n, p) = (x.rows, x.cols);
    let row_means: Vec<f64> = (0..n)
        .map(|i| x.row(i).iter().sum::<f64>() / p as f64)
        .collect();
    let centered = DMatrix::from_fn(n, p, |i, j| x.values[i * p + j] - row_means[i]);
    if p < 2 || centered.iter().all(|v| *v == 0.0) {
        return Err(Error::DegenerateData(
            "row-centered data is identically zero".into(),
        ));
    }
    if (1..n).all(|i| x.row(i) == x.row(0)) {
        return Err(Error::DegenerateData("all samples are identical".into()));
    }
    let s = (&centered * centered.transpose()) / (p - 1) as f64;
    let total_variance = s.trace();
    let eig = SymmetricEigen::new(s);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let all: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let lead = all[0];
    if !(lead > 0.0) {
        return Err(Error::DegenerateData(
            "covariance has no positive eigenvalue".into(),
        ));
    }
    let rank = all.iter().filter(|&&l| l > RANK_TOLERANCE * lead).count();
    let k = match retention {
        Retention::Fixed(k) => {
            if k == 0 || k > rank {
                return Err(Error::param(format!(
                    "cannot retain {k} PCs; numerical rank is {rank}"
                )));
            }
            k
        }
        Retention::Variance(t) => {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::param(format!(
                    "variance target must be in (0, 1], got {t}"
                )));
            }
            let mut acc = 0.0;
            let mut k = rank;
            for (i, l) in all.iter().take(rank).enumerate() {
                acc += l / total_variance;
                if acc >= t - 1e-12 {
                    k = i + 1;
                    break;
                }
            }
            k
        }
    };

    let mut components = Vec::with_capacity(k);
    let mut loadings = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let u: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
        // X_k = X^T U_k on the uncentered data
        let mut pc = vec![0.0; p];
        for (i, &ui) in u.iter().enumerate() {
            for (acc, &v) in pc.iter_mut().zip(x.row(i)) {
                *acc += v * ui;
            }
        }
        let sign = sign_of_largest(&pc);
        components.push(pc.into_iter().map(|v| v * sign).collect());
        loadings.push(u.into_iter().map(|v| v * sign).collect());
    }
    let eigenvalues = all[..k].to_vec();
    // rank-1 S can give lambda_1 a few ulps above tr(S)
    let information_ratios = eigenvalues
        .iter()
        .map(|l| (l / total_variance).min(1.0))
        .collect();
    Ok(PcaResult {
        components,
        eigenvalues,
        information_ratios,
        all_eigenvalues: all,
        sample_loadings: loadings,
        row_means,
        total_variance,
        rank,
    })
}

/// Stacks the GAP features of `images` into a data matrix.
pub fn feature_matrix(model: &CnnModel, images: &[Image]) -> Result<DataMatrix> {
    let rows: Vec<Vec<f64>> = images
        .par_iter()
        .map(|img| model.forward_features(img).map(|f| f.0))
        .collect::<Result<_>>()?;
    if rows.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: rows.len(),
        });
    }
    DataMatrix::from_rows(&rows)
}

/// Settings for replacing each sample by its best superpixel combination.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaPreprocess {
    pub segments: usize,
    pub compactness: f64,
    pub max_iter: usize,
    pub ga: GaConfig,
}

impl Default for GaPreprocess {
    fn default() -> Self {
        Self {
            segments: DEFAULT_GA_SEGMENTS,
            compactness: DEFAULT_COMPACTNESS,
            max_iter: DEFAULT_MAX_ITER,
            ga: GaConfig::default(),
        }
    }
}

/// Best superpixel combination of `image` for class `class`.
pub fn ga_best_combination(
    model: &CnnModel,
    image: &Image,
    class: usize,
    pre: &GaPreprocess,
) -> Result<Image> {
    let seg = slic_segment(image, pre.segments, pre.compactness, pre.max_iter)?;
    let best = evolve(model, image, &seg, class, &pre.ga)?;
    genome_to_image(image, &seg, &best.best, &model.standardization().mean)
}

/// Common traits of one class: row-centered PCA over the GAP features of its
/// samples, optionally after reducing each sample to its GA-best combination.
pub fn extract_common_traits(
    model: &CnnModel,
    samples: &[Image],
    class: usize,
    retention: Retention,
    ga: Option<&GaPreprocess>,
) -> Result<PcaResult> {
    if samples.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: samples.len(),
        });
    }
    let matrix = match ga {
        None => feature_matrix(model, samples)?,
        Some(pre) => {
            let reduced: Vec<Image> = samples
                .iter()
                .enumerate()
                .map(|(i, img)| {
                    let cfg = GaPreprocess {
                        ga: GaConfig {
                            seed: pre.ga.seed.wrapping_add(i as u64),
                            ..pre.ga.clone()
                        },
                        ..pre.clone()
                    };
                    ga_best_combination(model, img, class, &cfg)
                })
                .collect::<Result<_>>()?;
            feature_matrix(model, &reduced)?
        }
    };
    row_centered_pca(&matrix, retention)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpreadReport {
    /// Percent.
    pub spread: f64,
    pub mean: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub experiments: usize,
}

/// Mean absolute deviation from the average vector, in percent:
/// `e = 100 / (p N_e) * sum_i sum_j |s_j^i - mean_j|`.
pub fn spread(vectors: &[Vec<f64>]) -> Result<SpreadReport> {
    let first = vectors.first().ok_or(Error::EmptyDataset)?;
    let p = first.len();
    if p == 0 {
        return Err(Error::shape("score vectors are empty"));
    }
    if let Some(v) = vectors.iter().find(|v| v.len() != p) {
        return Err(Error::shape(format!(
            "score vector of length {} among length {p}",
            v.len()
        )));
    }
    let ne = vectors.len() as f64;
    let mut mean = vec![0.0; p];
    for v in vectors {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x / ne;
        }
    }
    let dev: f64 = vectors
        .iter()
        .map(|v| v.iter().zip(&mean).map(|(x, m)| (x - m).abs()).sum::<f64>())
        .sum();
    Ok(SpreadReport {
        spread: dev / (p as f64 * ne) * 100.0,
        mean,
        vectors: vectors.to_vec(),
        experiments: vectors.len(),
    })
}

/// A stack of `N_s` feature maps, each `C x H x W`, stored contiguously.
#[derive(Clone, Debug, PartialEq)]
pub struct MapStack {
    pub samples: usize,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl MapStack {
    pub fn new(
        samples: usize,
        channels: usize,
        height: usize,
        width: usize,
        data: Vec<f64>,
    ) -> Result<Self> {
        if data.len() != samples * channels * height * width
            || channels == 0
            || height == 0
            || width == 0
        {
            return Err(Error::shape(format!(
                "{} values do not form {samples}x{channels}x{height}x{width}",
                data.len()
            )));
        }
        Ok(Self {
            samples,
            channels,
            height,
            width,
            data,
        })
    }

    pub fn get(&self, n: usize, c: usize, y: usize, x: usize) -> f64 {
        self.data[((n * self.channels + c) * self.height + y) * self.width + x]
    }

    /// The `N_s x C` matrix at one spatial position.
    pub fn position(&self, y: usize, x: usize) -> Result<DataMatrix> {
        let values = (0..self.samples)
            .flat_map(|n| (0..self.channels).map(move |c| (n, c)))
            .map(|(n, c)| self.get(n, c, y, x))
            .collect();
        DataMatrix::new(self.samples, self.channels, values)
    }
}

/// Row-centered PCA at every spatial position, keeping `k` PCs each; the
/// result is a `k x C x H x W` stack.
pub fn layerwise_pca(maps: &MapStack, k: usize) -> Result<MapStack> {
    if maps.samples < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: maps.samples,
        });
    }
    if k == 0 || k > maps.samples.min(maps.channels) {
        return Err(Error::param(format!(
            "k must be in 1..={}, got {k}",
            maps.samples.min(maps.channels)
        )));
    }
    let (c, h, w) = (maps.channels, maps.height, maps.width);
    let slabs: Vec<PcaResult> = (0..h * w)
        .into_par_iter()
        .map(|pos| row_centered_pca(&maps.position(pos / w, pos % w)?, Retention::Fixed(k)))
        .collect::<Result<_>>()?;
    let mut data = vec![0.0; k * c * h * w];
    for (pos, r) in slabs.iter().enumerate() {
        for (kk, pc) in r.components.iter().enumerate() {
            for (ch, &v) in pc.iter().enumerate() {
                data[(kk * c + ch) * h * w + pos] = v;
            }
        }
    }
    MapStack::new(k, c, h, w, data)
}
