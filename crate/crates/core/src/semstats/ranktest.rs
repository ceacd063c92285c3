use super::normal_cdf;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MannWhitney {
    /// U statistic of the first sample.
    pub u: f64,
    pub z: f64,
    /// One-sided p-value for "first sample tends to be smaller".
    pub p_value: f64,
}

/// One-sided Mann-Whitney U test (normal approximation with tie and
/// continuity corrections) of `x` being stochastically smaller than `y`.
pub fn mann_whitney_less(x: &[f64], y: &[f64]) -> Result<MannWhitney> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::InsufficientSamples {
            needed: 1,
            got: x.len().min(y.len()),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite value in rank test".into()));
    }
    let mut pooled: Vec<(f64, bool)> = x
        .iter()
        .map(|&v| (v, true))
        .chain(y.iter().map(|&v| (v, false)))
        .collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = pooled.len();
    let mut rank_sum_x = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        for item in &pooled[i..=j] {
            if item.1 {
                rank_sum_x += mid;
            }
        }
        i = j + 1;
    }
    let (nx, ny, nn) = (x.len() as f64, y.len() as f64, n as f64);
    let u = rank_sum_x - nx * (nx + 1.0) / 2.0;
    let mean = nx * ny / 2.0;
    let var = nx * ny / 12.0 * ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
    if !(var > 0.0) {
        return Err(Error::DegenerateDistribution("all values tied".into()));
    }
    let z = (u - mean + 0.5) / var.sqrt();
    Ok(MannWhitney {
        u,
        z,
        p_value: normal_cdf(z),
    })
}
