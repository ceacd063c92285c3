use serde::{Deserialize, Serialize};

use super::TargetEncoding;
use crate::error::{Error, Result};
use crate::nn::{CnnModel, Image};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VisConfig {
    pub lambda: f64,
    pub beta: f64,
    pub learning_rate: f64,
    /// The learning rate halves every this many iterations.
    pub halving_interval: usize,
    pub max_iterations: usize,
}

impl Default for VisConfig {
    fn default() -> Self {
        Self {
            lambda: 2.0,
            beta: 2.0,
            learning_rate: 0.05,
            halving_interval: 1000,
            max_iterations: 4000,
        }
    }
}

impl VisConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.lambda) || !positive(self.beta) || !positive(self.learning_rate) {
            return Err(Error::param("lambda, beta and learning rate must be > 0"));
        }
        if self.halving_interval == 0 || self.max_iterations == 0 {
            return Err(Error::param(
                "halving interval and max iterations must be >= 1",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Visualization {
    /// Optimized network input.
    pub standardized: Image,
    /// `standardized` mapped back to pixel space, not clamped.
    pub image: Image,
    /// Objective at every iterate, including the final one.
    pub objective: Vec<f64>,
}

impl Visualization {
    /// Pixel image clamped to `[0, 1]` for export.
    pub fn export_image(&self) -> Image {
        self.image.clamped(0.0, 1.0)
    }
}

/// Gradient descent on `||features(z) - target||^2 + lambda * TV_beta(z)`
/// starting from the all-zero standardized input.
pub fn visualize(
    model: &CnnModel,
    target: &TargetEncoding,
    config: &VisConfig,
) -> Result<Visualization> {
    config.validate()?;
    if target.values.len() != model.feature_width() {
        return Err(Error::shape(format!(
            "target has {} entries, feature width is {}",
            target.values.len(),
            model.feature_width()
        )));
    }
    let mut z = Image::zeros(model.input_shape());
    let mut lr = config.learning_rate;
    let mut objective = Vec::with_capacity(config.max_iterations + 1);
    for it in 0..config.max_iterations {
        if it > 0 && it % config.halving_interval == 0 {
            lr *= 0.5;
        }
        let (value, grad) =
            model.objective_gradient(&z, &target.values, config.lambda, config.beta)?;
        if !value.is_finite() {
            return Err(Error::DivergedOptimization { iteration: it });
        }
        objective.push(value);
        for (zi, gi) in z.data_mut().iter_mut().zip(grad.data()) {
            *zi -= lr * gi;
        }
    }
    let (last, _) = model.objective_gradient(&z, &target.values, config.lambda, config.beta)?;
    if !last.is_finite() {
        return Err(Error::DivergedOptimization {
            iteration: config.max_iterations,
        });
    }
    objective.push(last);
    let image = model.destandardize(&z)?;
    Ok(Visualization {
        standardized: z,
        image,
        objective,
    })
}
