use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Radar;
use crate::error::{Error, Result};
use crate::nn::{CnnModel, Image};

/// Thresholds of the adversarial flag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdversarialCriterion {
    /// A single probability above this flags the input.
    pub single: f64,
    /// `multi_count` or more probabilities above this flag the input.
    pub multi: f64,
    pub multi_count: usize,
}

impl Default for AdversarialCriterion {
    fn default() -> Self {
        Self {
            single: 0.99,
            multi: 0.9,
            multi_count: 2,
        }
    }
}

impl AdversarialCriterion {
    pub fn flags(&self, probabilities: &[f64]) -> bool {
        probabilities.iter().any(|&p| p > self.single)
            || probabilities.iter().filter(|&&p| p > self.multi).count() >= self.multi_count
    }
}

pub fn flag_adversarial(radar: &Radar, criterion: &AdversarialCriterion) -> Result<bool> {
    radar.ensure_complete()?;
    Ok(criterion.flags(&radar.values()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackConfig {
    /// L-infinity budget in pixel units (pixels span `[0, 1]`).
    pub epsilon: f64,
    pub steps: usize,
    pub step_size: f64,
    /// Seeds the uniform random start inside the budget.
    pub seed: u64,
    pub random_start: bool,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.05,
            steps: 20,
            step_size: 0.01,
            seed: 0,
            random_start: true,
        }
    }
}

/// Targeted PGD: signed-gradient descent on the cross-entropy of `target`,
/// projected onto the epsilon ball around `image` and onto `[0, 1]`.
pub fn pgd_attack(
    model: &CnnModel,
    image: &Image,
    target: usize,
    config: &AttackConfig,
) -> Result<Image> {
    if target >= model.num_classes() {
        return Err(Error::param(format!("class {target} out of range")));
    }
    if !(config.epsilon >= 0.0) || config.steps == 0 || !(config.step_size >= 0.0) {
        return Err(Error::param(
            "need epsilon >= 0, steps >= 1, step size >= 0",
        ));
    }
    model.standardize(image)?;
    if config.epsilon == 0.0 {
        return Ok(image.clone());
    }
    let eps = config.epsilon;
    let origin = image.data();
    let project = |i: usize, v: f64| v.clamp(origin[i] - eps, origin[i] + eps).clamp(0.0, 1.0);
    let mut x = image.clone();
    if config.random_start {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        for (i, v) in x.data_mut().iter_mut().enumerate() {
            *v = project(i, *v + rng.random_range(-eps..=eps));
        }
    }
    for _ in 0..config.steps {
        let z = model.standardize(&x)?;
        let (_, grad) = model.loss_input_gradient(&z, target)?;
        // std > 0, so the pixel-space gradient has the same sign
        for (i, (v, g)) in x.data_mut().iter_mut().zip(grad.data()).enumerate() {
            let step = if *g > 0.0 {
                -config.step_size
            } else if *g < 0.0 {
                config.step_size
            } else {
                0.0
            };
            *v = project(i, *v + step);
        }
    }
    Ok(x)
}
