use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{Architecture, CnnModel, Grads, Standardization};
use super::Dataset;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 3,
            batch_size: 16,
            learning_rate: 2e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::param("batch size must be >= 1"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::param("learning rate must be > 0"));
        }
        if !(0.0..1.0).contains(&self.beta1)
            || !(0.0..1.0).contains(&self.beta2)
            || !(self.epsilon > 0.0)
        {
            return Err(Error::param(
                "Adam betas must lie in [0, 1) and epsilon > 0",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainReport {
    /// Mean cross-entropy of every mini-batch, in training order.
    pub batch_losses: Vec<f64>,
}

struct Adam {
    m: Grads,
    v: Grads,
    t: i32,
}

/// Trains a freshly seeded model with mini-batch Adam on cross-entropy.
///
/// Standardization statistics come from the training corpus. Per-sample
/// gradients are computed in parallel but summed in sample order, so the
/// result is bit-reproducible for a given seed.
pub fn train(
    dataset: &Dataset,
    arch: &Architecture,
    config: &TrainConfig,
) -> Result<(CnnModel, TrainReport)> {
    config.validate()?;
    let first = dataset.samples.first().ok_or(Error::EmptyDataset)?;
    let shape = first.image.shape();
    for s in &dataset.samples {
        if s.image.shape() != shape {
            return Err(Error::shape(format!(
                "sample {} differs from first sample {shape}",
                s.image.shape()
            )));
        }
        if s.label >= dataset.classes.len() {
            return Err(Error::param(format!("label {} has no class name", s.label)));
        }
    }
    let norm = Standardization::from_images(dataset.samples.iter().map(|s| &s.image))?;
    let mut model = CnnModel::new(arch, shape, dataset.classes.clone(), norm, config.seed)?;
    let inputs: Vec<Vec<f64>> = dataset
        .samples
        .iter()
        .map(|s| model.standardization().apply(&s.image).into_data())
        .collect();

    let mut adam = Adam {
        m: model.zero_grads(),
        v: model.zero_grads(),
        t: 0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x005e_ed0f_7a1e);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut report = TrainReport::default();

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let per_sample: Vec<(f64, Grads)> = batch
                .par_iter()
                .map(|&i| model.sample_gradients(&inputs[i], dataset.samples[i].label))
                .collect();
            let mut total = model.zero_grads();
            let mut loss = 0.0;
            for (l, g) in &per_sample {
                loss += l;
                for (acc, gi) in total.iter_mut().zip(g) {
                    for (a, b) in acc.iter_mut().zip(gi) {
                        *a += b;
                    }
                }
            }
            let scale = 1.0 / batch.len() as f64;
            total.iter_mut().flatten().for_each(|g| *g *= scale);
            adam_step(&mut model, &mut adam, &total, config);
            report.batch_losses.push(loss * scale);
        }
    }
    Ok((model, report))
}

fn adam_step(model: &mut CnnModel, adam: &mut Adam, grads: &Grads, cfg: &TrainConfig) {
    adam.t += 1;
    let bc1 = 1.0 - cfg.beta1.powi(adam.t);
    let bc2 = 1.0 - cfg.beta2.powi(adam.t);
    for (((p, g), m), v) in model
        .parameters_mut()
        .into_iter()
        .zip(grads)
        .zip(adam.m.iter_mut())
        .zip(adam.v.iter_mut())
    {
        for i in 0..p.len() {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            let step = cfg.learning_rate * (m[i] / bc1) / ((v[i] / bc2).sqrt() + cfg.epsilon);
            // parameters stay representable in single precision
            p[i] = ((p[i] - step) as f32) as f64;
        }
    }
}
