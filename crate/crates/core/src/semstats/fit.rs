use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};

/// Smallest sample accepted for fitting.
pub const MIN_FIT_SAMPLES: usize = 30;
const WARN_FIT_SAMPLES: usize = 300;

/// Normal fit of a space's weighted average activation over natural samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedActivation {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub samples: usize,
}

impl FittedActivation {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.mean, self.std, self.min, self.max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || !(self.std > 0.0) || !(self.min < self.max) {
            return Err(Error::DegenerateDistribution(format!(
                "need finite parameters with std > 0 and min < max, got {self:?}"
            )));
        }
        Ok(())
    }
}

fn check_sample(values: &[f64]) -> Result<()> {
    if values.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MIN_FIT_SAMPLES,
            got: values.len(),
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite activation".into()));
    }
    Ok(())
}

/// Maximum-likelihood normal fit (population std) plus empirical extremes.
pub fn fit_activation_distribution(values: &[f64]) -> Result<FittedActivation> {
    check_sample(values)?;
    if values.len() < WARN_FIT_SAMPLES {
        log::warn!(
            "fitting an activation distribution from only {} samples",
            values.len()
        );
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(var > 0.0) || min == max {
        return Err(Error::DegenerateDistribution(
            "activation values are constant".into(),
        ));
    }
    Ok(FittedActivation {
        mean,
        std: var.sqrt(),
        min,
        max,
        samples: values.len(),
    })
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal upper tail `1 - cdf(z)`, accurate for large `z`.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    let x = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
    if !x.is_finite() {
        return x;
    }
    // one Newton step; erfc_inv alone is only good to about 1e-11
    let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let resid = if p < 0.5 {
        normal_cdf(x) - p
    } else {
        (1.0 - p) - normal_sf(x)
    };
    if pdf > 0.0 {
        x - resid / pdf
    } else {
        x
    }
}

/// Position of `a` between the fitted extremes under the fitted normal CDF:
/// `(cdf(a) - cdf(min)) / (cdf(max) - cdf(min))`.
///
/// Not clamped; activations beyond the fitted maximum give values above 1.
pub fn semantic_probability(a: f64, fit: &FittedActivation) -> f64 {
    let z = |x: f64| (x - fit.mean) / fit.std;
    if 0.5 * (fit.min + fit.max) <= fit.mean {
        let lo = normal_cdf(z(fit.min));
        (normal_cdf(z(a)) - lo) / (normal_cdf(z(fit.max)) - lo)
    } else {
        // same quantity via the upper tail, which keeps precision above the mean
        let lo = normal_sf(z(fit.min));
        (lo - normal_sf(z(a))) / (lo - normal_sf(z(fit.max)))
    }
}

/// Coefficient of determination of the normal q-q line.
///
/// Sorted values are regressed on standard normal quantiles at Blom plotting
/// positions `(i - 3/8) / (n + 1/4)`.
pub fn qq_r2(values: &[f64]) -> Result<f64> {
    check_sample(values)?;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let q: Vec<f64> = (0..sorted.len())
        .map(|i| normal_quantile((i as f64 + 1.0 - 0.375) / (n + 0.25)))
        .collect();
    let mq = q.iter().sum::<f64>() / n;
    let mx = sorted.iter().sum::<f64>() / n;
    let (mut sqx, mut sqq, mut sxx) = (0.0, 0.0, 0.0);
    for (qi, xi) in q.iter().zip(&sorted) {
        sqx += (qi - mq) * (xi - mx);
        sqq += (qi - mq) * (qi - mq);
        sxx += (xi - mx) * (xi - mx);
    }
    if !(sxx > 0.0) {
        return Err(Error::DegenerateDistribution(
            "activation values are constant".into(),
        ));
    }
    Ok(((sqx * sqx) / (sqq * sxx)).min(1.0))
}
