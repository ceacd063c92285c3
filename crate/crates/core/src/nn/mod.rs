//! Minimal CPU convolutional network: training, GAP features, class
//! probabilities and input gradients of the visualization objective.

mod checkpoint;
mod kernels;
mod model;
mod train;

pub use checkpoint::{checkpoint_bytes, load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC};
#[cfg(test)]
pub(crate) use model::tests::small_model;
pub use model::{Architecture, CnnModel, LayerSpec, Standardization};
pub use train::{train, TrainConfig, TrainReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Channel-major tensor dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TensorShape {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl TensorShape {
    pub fn new(channels: usize, height: usize, width: usize) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::shape(format!(
                "tensor dimensions must be >= 1, got {channels}x{height}x{width}"
            )));
        }
        Ok(Self {
            channels,
            height,
            width,
        })
    }

    pub fn rgb(height: usize, width: usize) -> Result<Self> {
        Self::new(3, height, width)
    }

    pub fn len(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn plane(&self) -> usize {
        self.height * self.width
    }
}

impl std::fmt::Display for TensorShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.channels, self.height, self.width)
    }
}

/// A CHW tensor of pixel values.
///
/// Raw images hold values in `[0, 1]`; the same type also carries
/// standardized network inputs and gradients, which are unbounded.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    shape: TensorShape,
    data: Vec<f64>,
}

impl Image {
    pub fn new(shape: TensorShape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::shape(format!(
                "{} values supplied for a {shape} image",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: TensorShape) -> Self {
        Self::filled(shape, 0.0)
    }

    pub fn filled(shape: TensorShape, value: f64) -> Self {
        Self {
            shape,
            data: vec![value; shape.len()],
        }
    }

    /// Image whose every pixel is `color` (one value per channel).
    pub fn solid(shape: TensorShape, color: &[f64]) -> Result<Self> {
        if color.len() != shape.channels {
            return Err(Error::shape("color length differs from channel count"));
        }
        let mut img = Self::zeros(shape);
        for (c, &v) in color.iter().enumerate() {
            img.channel_mut(c).fill(v);
        }
        Ok(img)
    }

    pub fn shape(&self) -> TensorShape {
        self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.shape.plane();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.shape.plane();
        &mut self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn index(&self, c: usize, y: usize, x: usize) -> usize {
        (c * self.shape.height + y) * self.shape.width + x
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[self.index(c, y, x)]
    }

    #[inline]
    pub fn set(&mut self, c: usize, y: usize, x: usize, v: f64) {
        let i = self.index(c, y, x);
        self.data[i] = v;
    }

    /// All channel values of the pixel at flat position `p = y * width + x`.
    pub fn pixel(&self, p: usize) -> Vec<f64> {
        let n = self.shape.plane();
        (0..self.shape.channels)
            .map(|c| self.data[c * n + p])
            .collect()
    }

    pub fn set_pixel(&mut self, p: usize, color: &[f64]) {
        let n = self.shape.plane();
        for (c, &v) in color.iter().enumerate() {
            self.data[c * n + p] = v;
        }
    }

    pub fn max_abs_diff(&self, other: &Image) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn clamped(&self, lo: f64, hi: f64) -> Image {
        Image {
            shape: self.shape,
            data: self.data.iter().map(|v| v.clamp(lo, hi)).collect(),
        }
    }
}

/// GAP-layer activations of one image.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Softmax output of the classifier.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassProbs(pub Vec<f64>);

impl ClassProbs {
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate() {
            if p > self.0[best] {
                best = i;
            }
        }
        best
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledImage {
    pub image: Image,
    pub label: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub classes: Vec<String>,
    pub samples: Vec<LabeledImage>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn images_of(&self, label: usize) -> impl Iterator<Item = &Image> {
        self.samples
            .iter()
            .filter(move |s| s.label == label)
            .map(|s| &s.image)
    }
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Fraction of samples whose argmax prediction matches the label.
pub fn accuracy(model: &CnnModel, samples: &[LabeledImage]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut hits = 0usize;
    for s in samples {
        if model.predict(&s.image)?.argmax() == s.label {
            hits += 1;
        }
    }
    Ok(hits as f64 / samples.len() as f64)
}
