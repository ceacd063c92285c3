use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::kernels::{conv_backward, conv_forward, maxpool_forward, ConvGeom};
use super::{softmax, ClassProbs, FeatureVector, Image, TensorShape};
use crate::error::{Error, Result};
use crate::semspace::tv_regularizer;

/// Declarative description of one layer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    /// Same-padded, stride-1 convolution with an odd square kernel.
    Conv {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
    },
    Relu,
    /// 2x2 max pooling with stride 2.
    MaxPool,
    /// Global average pooling; its output is the feature vector.
    Gap,
    Dense {
        inputs: usize,
        outputs: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub layers: Vec<LayerSpec>,
}

impl Architecture {
    /// Three conv blocks (3->16->32->64, 3x3, ReLU, 2x2 max-pool) -> GAP -> dense.
    pub fn desk(classes: usize) -> Self {
        let mut layers = Vec::new();
        let mut c = 3;
        for out in [16, 32, 64] {
            layers.push(LayerSpec::Conv {
                in_channels: c,
                out_channels: out,
                kernel: 3,
            });
            layers.push(LayerSpec::Relu);
            layers.push(LayerSpec::MaxPool);
            c = out;
        }
        layers.push(LayerSpec::Gap);
        layers.push(LayerSpec::Dense {
            inputs: c,
            outputs: classes,
        });
        Self { layers }
    }
}

/// Per-channel input standardization `(x - mean) / std`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardization {
    pub fn identity(channels: usize) -> Self {
        Self {
            mean: vec![0.0; channels],
            std: vec![1.0; channels],
        }
    }

    /// Corpus statistics (population std). A zero-variance channel gets std 1.
    pub fn from_images<'a>(images: impl IntoIterator<Item = &'a Image>) -> Result<Self> {
        let mut sums: Vec<f64> = Vec::new();
        let mut sq: Vec<f64> = Vec::new();
        let mut count = 0usize;
        let mut shape: Option<TensorShape> = None;
        for img in images {
            let s = img.shape();
            match shape {
                None => {
                    shape = Some(s);
                    sums = vec![0.0; s.channels];
                    sq = vec![0.0; s.channels];
                }
                Some(prev) if prev != s => {
                    return Err(Error::shape(format!(
                        "image {s} differs from corpus shape {prev}"
                    )))
                }
                _ => {}
            }
            for c in 0..s.channels {
                for &v in img.channel(c) {
                    sums[c] += v;
                    sq[c] += v * v;
                }
            }
            count += s.plane();
        }
        if count == 0 {
            return Err(Error::EmptyDataset);
        }
        let n = count as f64;
        let mean: Vec<f64> = sums.iter().map(|s| s / n).collect();
        let std = sq
            .iter()
            .zip(&mean)
            .map(|(q, m)| {
                let var = (q / n - m * m).max(0.0);
                if var > 0.0 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn validate(&self, channels: usize) -> Result<()> {
        if self.mean.len() != channels || self.std.len() != channels {
            return Err(Error::shape(
                "standardization length differs from channel count",
            ));
        }
        if self.mean.iter().any(|m| !m.is_finite())
            || self.std.iter().any(|s| !(s.is_finite() && *s > 0.0))
        {
            return Err(Error::InvalidInput(
                "standardization must be finite with std > 0".into(),
            ));
        }
        Ok(())
    }

    pub fn apply(&self, image: &Image) -> Image {
        let mut out = image.clone();
        for c in 0..image.shape().channels {
            let (m, s) = (self.mean[c], self.std[c]);
            out.channel_mut(c)
                .iter_mut()
                .for_each(|v| *v = (*v - m) / s);
        }
        out
    }

    pub fn invert(&self, standardized: &Image) -> Image {
        let mut out = standardized.clone();
        for c in 0..standardized.shape().channels {
            let (m, s) = (self.mean[c], self.std[c]);
            out.channel_mut(c).iter_mut().for_each(|v| *v = *v * s + m);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Conv2d {
    pub in_c: usize,
    pub out_c: usize,
    pub k: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Layer {
    Conv(Conv2d),
    Relu,
    MaxPool,
    Gap,
    Dense(Dense),
}

impl Layer {
    fn spec(&self) -> LayerSpec {
        match self {
            Layer::Conv(c) => LayerSpec::Conv {
                in_channels: c.in_c,
                out_channels: c.out_c,
                kernel: c.k,
            },
            Layer::Relu => LayerSpec::Relu,
            Layer::MaxPool => LayerSpec::MaxPool,
            Layer::Gap => LayerSpec::Gap,
            Layer::Dense(d) => LayerSpec::Dense {
                inputs: d.inputs,
                outputs: d.outputs,
            },
        }
    }
}

/// Activations recorded during a forward pass through the feature stack.
pub(crate) struct Trace {
    /// `acts[i]` is the input to feature layer `i`; the last entry is the
    /// map entering the GAP layer.
    acts: Vec<(TensorShape, Vec<f64>)>,
    pool_args: Vec<Option<Vec<usize>>>,
    pub features: Vec<f64>,
}

/// Parameter gradients laid out like [`CnnModel::parameters`].
pub(crate) type Grads = Vec<Vec<f64>>;

/// A conv/pool/GAP/dense classifier. Immutable after training; every
/// inference method is pure.
#[derive(Clone, Debug, PartialEq)]
pub struct CnnModel {
    input: TensorShape,
    classes: Vec<String>,
    pub(crate) layers: Vec<Layer>,
    norm: Standardization,
    seed: u64,
    gap_index: usize,
}

impl CnnModel {
    /// Builds a model with seeded fan-in-scaled uniform weights and zero biases.
    /// Weights are rounded to single precision so checkpoints round-trip exactly.
    pub fn new(
        arch: &Architecture,
        input: TensorShape,
        classes: Vec<String>,
        norm: Standardization,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(arch.layers.len());
        for spec in &arch.layers {
            layers.push(match *spec {
                LayerSpec::Conv {
                    in_channels,
                    out_channels,
                    kernel,
                } => {
                    let fan_in = in_channels * kernel * kernel;
                    Layer::Conv(Conv2d {
                        in_c: in_channels,
                        out_c: out_channels,
                        k: kernel,
                        weight: init_uniform(&mut rng, out_channels * fan_in, fan_in),
                        bias: vec![0.0; out_channels],
                    })
                }
                LayerSpec::Relu => Layer::Relu,
                LayerSpec::MaxPool => Layer::MaxPool,
                LayerSpec::Gap => Layer::Gap,
                LayerSpec::Dense { inputs, outputs } => Layer::Dense(Dense {
                    inputs,
                    outputs,
                    weight: init_uniform(&mut rng, inputs * outputs, inputs),
                    bias: vec![0.0; outputs],
                }),
            });
        }
        Self::from_parts(input, classes, layers, norm, seed)
    }

    pub(crate) fn from_parts(
        input: TensorShape,
        classes: Vec<String>,
        layers: Vec<Layer>,
        norm: Standardization,
        seed: u64,
    ) -> Result<Self> {
        norm.validate(input.channels)?;
        let gap_index = validate_layers(input, classes.len(), &layers)?;
        let model = Self {
            input,
            classes,
            layers,
            norm,
            seed,
            gap_index,
        };
        if model
            .parameters()
            .iter()
            .any(|p| p.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::InvalidInput("non-finite weight".into()));
        }
        Ok(model)
    }

    pub fn input_shape(&self) -> TensorShape {
        self.input
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn standardization(&self) -> &Standardization {
        &self.norm
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn architecture(&self) -> Architecture {
        Architecture {
            layers: self.layers.iter().map(Layer::spec).collect(),
        }
    }

    /// Width C of the GAP output.
    pub fn feature_width(&self) -> usize {
        match &self.layers[self.gap_index + 1] {
            Layer::Dense(d) => d.inputs,
            _ => unreachable!("validated: dense follows GAP"),
        }
    }

    pub fn parameters(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::Conv(c) => {
                    out.push(&c.weight);
                    out.push(&c.bias);
                }
                Layer::Dense(d) => {
                    out.push(&d.weight);
                    out.push(&d.bias);
                }
                _ => {}
            }
        }
        out
    }

    pub(crate) fn parameters_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            match layer {
                Layer::Conv(c) => {
                    out.push(&mut c.weight);
                    out.push(&mut c.bias);
                }
                Layer::Dense(d) => {
                    out.push(&mut d.weight);
                    out.push(&mut d.bias);
                }
                _ => {}
            }
        }
        out
    }

    pub(crate) fn zero_grads(&self) -> Grads {
        self.parameters()
            .iter()
            .map(|p| vec![0.0; p.len()])
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.parameters().iter().map(|p| p.len()).sum()
    }

    fn dense(&self) -> &Dense {
        match self.layers.last() {
            Some(Layer::Dense(d)) => d,
            _ => unreachable!("validated: last layer is dense"),
        }
    }

    fn check_input(&self, image: &Image) -> Result<()> {
        if image.shape() != self.input {
            return Err(Error::shape(format!(
                "image is {} but model expects {}",
                image.shape(),
                self.input
            )));
        }
        Ok(())
    }

    pub fn standardize(&self, image: &Image) -> Result<Image> {
        self.check_input(image)?;
        Ok(self.norm.apply(image))
    }

    pub fn destandardize(&self, z: &Image) -> Result<Image> {
        self.check_input(z)?;
        Ok(self.norm.invert(z))
    }

    /// GAP activations for a raw image.
    pub fn forward_features(&self, image: &Image) -> Result<FeatureVector> {
        let z = self.standardize(image)?;
        Ok(FeatureVector(self.trace(z.data()).features))
    }

    /// GAP activations for an already standardized network input.
    pub fn features_standardized(&self, z: &Image) -> Result<FeatureVector> {
        self.check_input(z)?;
        Ok(FeatureVector(self.trace(z.data()).features))
    }

    /// Dense-layer output for a feature vector.
    pub fn logits_from_features(&self, features: &FeatureVector) -> Result<Vec<f64>> {
        let d = self.dense();
        if features.len() != d.inputs {
            return Err(Error::shape(format!(
                "feature vector has {} entries, dense layer expects {}",
                features.len(),
                d.inputs
            )));
        }
        Ok(dense_forward(d, features.as_slice()))
    }

    pub fn predict(&self, image: &Image) -> Result<ClassProbs> {
        let f = self.forward_features(image)?;
        Ok(ClassProbs(softmax(&self.logits_from_features(&f)?)))
    }

    /// Value and input gradient of `||features(z) - target||^2 + lambda * TV_beta(z)`,
    /// where `z` is a standardized network input.
    pub fn objective_gradient(
        &self,
        z: &Image,
        target: &[f64],
        lambda: f64,
        beta: f64,
    ) -> Result<(f64, Image)> {
        self.check_input(z)?;
        if target.len() != self.feature_width() {
            return Err(Error::shape(format!(
                "target has {} entries, feature width is {}",
                target.len(),
                self.feature_width()
            )));
        }
        if !(lambda >= 0.0) || !(beta > 0.0) {
            return Err(Error::param("need lambda >= 0 and beta > 0"));
        }
        let trace = self.trace(z.data());
        let mut value = 0.0;
        let grad_f: Vec<f64> = trace
            .features
            .iter()
            .zip(target)
            .map(|(f, t)| {
                value += (f - t) * (f - t);
                2.0 * (f - t)
            })
            .collect();
        let mut grad = self.backward(&trace, &grad_f, None, true);
        if lambda > 0.0 {
            let (r, rg) = tv_regularizer(z, beta)?;
            value += lambda * r;
            for (g, t) in grad.iter_mut().zip(rg.data()) {
                *g += lambda * t;
            }
        }
        Ok((value, Image::new(self.input, grad)?))
    }

    /// Cross-entropy of `label` and its gradient with respect to the
    /// standardized input.
    pub fn loss_input_gradient(&self, z: &Image, label: usize) -> Result<(f64, Image)> {
        self.check_input(z)?;
        if label >= self.num_classes() {
            return Err(Error::param(format!("class {label} out of range")));
        }
        let trace = self.trace(z.data());
        let d = self.dense();
        let probs = softmax(&dense_forward(d, &trace.features));
        let loss = -probs[label].max(f64::MIN_POSITIVE).ln();
        let dlogits: Vec<f64> = probs
            .iter()
            .enumerate()
            .map(|(i, p)| p - if i == label { 1.0 } else { 0.0 })
            .collect();
        let grad_f = dense_backward_input(d, &dlogits);
        let grad = self.backward(&trace, &grad_f, None, true);
        Ok((loss, Image::new(self.input, grad)?))
    }

    /// Loss and parameter gradients for one standardized training sample.
    pub(crate) fn sample_gradients(&self, z: &[f64], label: usize) -> (f64, Grads) {
        let trace = self.trace(z);
        let d = self.dense();
        let probs = softmax(&dense_forward(d, &trace.features));
        let loss = -probs[label].max(f64::MIN_POSITIVE).ln();
        let dlogits: Vec<f64> = probs
            .iter()
            .enumerate()
            .map(|(i, p)| p - if i == label { 1.0 } else { 0.0 })
            .collect();
        let mut grads = self.zero_grads();
        let n = grads.len();
        {
            let (gw, gb) = grads.split_at_mut(n - 1);
            let gw = &mut gw[n - 2];
            let gb = &mut gb[0];
            for (o, &dl) in dlogits.iter().enumerate() {
                gb[o] += dl;
                for (j, &f) in trace.features.iter().enumerate() {
                    gw[o * d.inputs + j] += dl * f;
                }
            }
        }
        let grad_f = dense_backward_input(d, &dlogits);
        self.backward(&trace, &grad_f, Some(&mut grads), false);
        (loss, grads)
    }

    pub(crate) fn trace(&self, z: &[f64]) -> Trace {
        let mut shape = self.input;
        let mut cur = z.to_vec();
        let mut acts = Vec::with_capacity(self.gap_index + 1);
        let mut pool_args = Vec::with_capacity(self.gap_index);
        for layer in &self.layers[..self.gap_index] {
            let (next_shape, next, arg) = match layer {
                Layer::Conv(c) => {
                    let g = ConvGeom {
                        in_c: c.in_c,
                        out_c: c.out_c,
                        k: c.k,
                        h: shape.height,
                        w: shape.width,
                    };
                    let mut out = vec![0.0; c.out_c * shape.plane()];
                    conv_forward(&g, &c.weight, &c.bias, &cur, &mut out);
                    let s = TensorShape {
                        channels: c.out_c,
                        ..shape
                    };
                    (s, out, None)
                }
                Layer::Relu => (shape, cur.iter().map(|&v| v.max(0.0)).collect(), None),
                Layer::MaxPool => {
                    let s = TensorShape {
                        channels: shape.channels,
                        height: shape.height / 2,
                        width: shape.width / 2,
                    };
                    let mut out = vec![0.0; s.len()];
                    let arg =
                        maxpool_forward(shape.channels, shape.height, shape.width, &cur, &mut out);
                    (s, out, Some(arg))
                }
                Layer::Gap | Layer::Dense(_) => unreachable!("validated: feature stack only"),
            };
            acts.push((shape, std::mem::replace(&mut cur, next)));
            pool_args.push(arg);
            shape = next_shape;
        }
        let plane = shape.plane() as f64;
        let features = (0..shape.channels)
            .map(|c| {
                cur[c * shape.plane()..(c + 1) * shape.plane()]
                    .iter()
                    .sum::<f64>()
                    / plane
            })
            .collect();
        acts.push((shape, cur));
        Trace {
            acts,
            pool_args,
            features,
        }
    }

    /// Backpropagates a feature-vector gradient through GAP and the feature
    /// stack. Returns the input gradient when `need_input` is set (otherwise
    /// an empty vector) and accumulates parameter gradients into `grads`.
    fn backward(
        &self,
        trace: &Trace,
        grad_features: &[f64],
        mut grads: Option<&mut Grads>,
        need_input: bool,
    ) -> Vec<f64> {
        let (shape, _) = &trace.acts[self.gap_index];
        let plane = shape.plane();
        let mut g = vec![0.0; shape.len()];
        for (c, &gf) in grad_features.iter().enumerate() {
            g[c * plane..(c + 1) * plane].fill(gf / plane as f64);
        }
        // parameter slot index of each conv layer
        let mut slot = 0usize;
        let mut conv_slots = vec![usize::MAX; self.gap_index];
        for (i, layer) in self.layers[..self.gap_index].iter().enumerate() {
            if let Layer::Conv(_) = layer {
                conv_slots[i] = slot;
                slot += 2;
            }
        }
        for i in (0..self.gap_index).rev() {
            let (in_shape, input) = &trace.acts[i];
            match &self.layers[i] {
                Layer::Conv(c) => {
                    let geom = ConvGeom {
                        in_c: c.in_c,
                        out_c: c.out_c,
                        k: c.k,
                        h: in_shape.height,
                        w: in_shape.width,
                    };
                    let want_input = i > 0 || need_input;
                    let mut gin = if want_input {
                        vec![0.0; in_shape.len()]
                    } else {
                        Vec::new()
                    };
                    let params = grads.as_deref_mut().map(|gr| {
                        let s = conv_slots[i];
                        let (a, b) = gr.split_at_mut(s + 1);
                        (a[s].as_mut_slice(), b[0].as_mut_slice())
                    });
                    conv_backward(
                        &geom,
                        &c.weight,
                        input,
                        &g,
                        if want_input { Some(&mut gin) } else { None },
                        params,
                    );
                    g = gin;
                }
                Layer::Relu => {
                    for (gv, &x) in g.iter_mut().zip(input) {
                        if x <= 0.0 {
                            *gv = 0.0;
                        }
                    }
                }
                Layer::MaxPool => {
                    let arg = trace.pool_args[i].as_ref().expect("pool argmax recorded");
                    let mut gin = vec![0.0; in_shape.len()];
                    for (gv, &a) in g.iter().zip(arg) {
                        gin[a] += gv;
                    }
                    g = gin;
                }
                Layer::Gap | Layer::Dense(_) => unreachable!(),
            }
            if g.is_empty() {
                break;
            }
        }
        g
    }
}

fn init_uniform(rng: &mut ChaCha8Rng, n: usize, fan_in: usize) -> Vec<f64> {
    let bound = (6.0 / fan_in as f64).sqrt();
    (0..n)
        .map(|_| (rng.random_range(-bound..bound) as f32) as f64)
        .collect()
}

fn dense_forward(d: &Dense, f: &[f64]) -> Vec<f64> {
    (0..d.outputs)
        .map(|o| {
            d.bias[o]
                + d.weight[o * d.inputs..(o + 1) * d.inputs]
                    .iter()
                    .zip(f)
                    .map(|(w, x)| w * x)
                    .sum::<f64>()
        })
        .collect()
}

fn dense_backward_input(d: &Dense, dlogits: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; d.inputs];
    for (o, &dl) in dlogits.iter().enumerate() {
        for (j, gj) in g.iter_mut().enumerate() {
            *gj += dl * d.weight[o * d.inputs + j];
        }
    }
    g
}

/// Checks the layer chain and returns the index of the GAP layer.
fn validate_layers(input: TensorShape, classes: usize, layers: &[Layer]) -> Result<usize> {
    let gaps: Vec<usize> = layers
        .iter()
        .enumerate()
        .filter(|(_, l)| matches!(l, Layer::Gap))
        .map(|(i, _)| i)
        .collect();
    if gaps.len() != 1 {
        return Err(Error::param(format!(
            "expected exactly one GAP layer, found {}",
            gaps.len()
        )));
    }
    let gap = gaps[0];
    if gap + 2 != layers.len() || !matches!(layers[gap + 1], Layer::Dense(_)) {
        return Err(Error::param(
            "GAP must be followed by exactly one dense layer at the end",
        ));
    }
    let mut shape = input;
    for layer in &layers[..gap] {
        match layer {
            Layer::Conv(c) => {
                if c.in_c != shape.channels {
                    return Err(Error::shape(format!(
                        "conv expects {} input channels, got {}",
                        c.in_c, shape.channels
                    )));
                }
                if c.k % 2 == 0 || c.out_c == 0 {
                    return Err(Error::param(
                        "conv kernel must be odd and output channels >= 1",
                    ));
                }
                if c.weight.len() != c.out_c * c.in_c * c.k * c.k || c.bias.len() != c.out_c {
                    return Err(Error::shape("conv parameter length"));
                }
                shape.channels = c.out_c;
            }
            Layer::Relu => {}
            Layer::MaxPool => {
                if shape.height < 2 || shape.width < 2 {
                    return Err(Error::shape(format!("cannot pool a {shape} map")));
                }
                shape.height /= 2;
                shape.width /= 2;
            }
            Layer::Gap | Layer::Dense(_) => {
                return Err(Error::param("dense layers must follow GAP"));
            }
        }
    }
    match &layers[gap + 1] {
        Layer::Dense(d) => {
            if d.inputs != shape.channels {
                return Err(Error::shape(format!(
                    "dense expects {} inputs, GAP yields {}",
                    d.inputs, shape.channels
                )));
            }
            if d.outputs != classes || classes < 1 {
                return Err(Error::shape(format!(
                    "dense has {} outputs for {classes} classes",
                    d.outputs
                )));
            }
            if d.weight.len() != d.inputs * d.outputs || d.bias.len() != d.outputs {
                return Err(Error::shape("dense parameter length"));
            }
        }
        _ => unreachable!(),
    }
    Ok(gap)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn two_classes() -> Vec<String> {
        vec!["a".into(), "b".into()]
    }

    pub(crate) fn small_model(h: usize, w: usize, seed: u64) -> CnnModel {
        let shape = TensorShape::rgb(h, w).unwrap();
        CnnModel::new(
            &Architecture::desk(2),
            shape,
            two_classes(),
            Standardization::identity(3),
            seed,
        )
        .unwrap()
    }

    #[test]
    fn rejects_missing_gap() {
        let arch = Architecture {
            layers: vec![LayerSpec::Dense {
                inputs: 3,
                outputs: 2,
            }],
        };
        let shape = TensorShape::rgb(4, 4).unwrap();
        let err = CnnModel::new(&arch, shape, two_classes(), Standardization::identity(3), 0);
        assert!(err.is_err());
    }

    #[test]
    fn rejects_dense_before_gap() {
        let arch = Architecture {
            layers: vec![
                LayerSpec::Dense {
                    inputs: 3,
                    outputs: 3,
                },
                LayerSpec::Gap,
                LayerSpec::Dense {
                    inputs: 3,
                    outputs: 2,
                },
            ],
        };
        let shape = TensorShape::rgb(4, 4).unwrap();
        assert!(
            CnnModel::new(&arch, shape, two_classes(), Standardization::identity(3), 0).is_err()
        );
    }

    #[test]
    fn weights_are_single_precision() {
        let m = small_model(8, 8, 3);
        for p in m.parameters() {
            for &v in p {
                assert_eq!((v as f32) as f64, v);
            }
        }
    }

    #[test]
    fn wrong_input_shape_is_rejected() {
        let m = small_model(8, 8, 3);
        let img = Image::zeros(TensorShape::rgb(16, 8).unwrap());
        assert!(matches!(
            m.forward_features(&img),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(matches!(m.predict(&img), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn objective_rejects_bad_target() {
        let m = small_model(8, 8, 3);
        let z = Image::zeros(m.input_shape());
        assert!(m.objective_gradient(&z, &[0.0; 3], 1.0, 2.0).is_err());
    }
}
