use crate::error::{Error, Result};
use crate::nn::Image;

/// Total-variation prior and its gradient.
///
/// `R(z) = sum_k sum_{i,j} ((z[k,i,j+1] - z[k,i,j])^2 + (z[k,i+1,j] - z[k,i,j])^2)^(beta/2)`.
/// A difference whose neighbor lies outside the image is left out of its
/// term; the bottom-right pixel of each channel contributes no term.
pub fn tv_regularizer(image: &Image, beta: f64) -> Result<(f64, Image)> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::param("beta must be > 0"));
    }
    let s = image.shape();
    let (h, w) = (s.height, s.width);
    let z = image.data();
    let mut grad = vec![0.0; z.len()];
    let mut value = 0.0;
    let half = beta / 2.0;
    for c in 0..s.channels {
        let base = c * h * w;
        for i in 0..h {
            for j in 0..w {
                let p = base + i * w + j;
                let right = (j + 1 < w).then(|| p + 1);
                let down = (i + 1 < h).then(|| p + w);
                if right.is_none() && down.is_none() {
                    continue;
                }
                let dx = right.map_or(0.0, |r| z[r] - z[p]);
                let dy = down.map_or(0.0, |d| z[d] - z[p]);
                let t = dx * dx + dy * dy;
                value += t.powf(half);
                if t > 0.0 {
                    let q = half * t.powf(half - 1.0) * 2.0;
                    if let Some(r) = right {
                        grad[r] += q * dx;
                    }
                    if let Some(d) = down {
                        grad[d] += q * dy;
                    }
                    grad[p] -= q * (dx + dy);
                }
            }
        }
    }
    Ok((value, Image::new(s, grad)?))
}
