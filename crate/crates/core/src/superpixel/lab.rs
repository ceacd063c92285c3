use crate::error::{Error, Result};
use crate::nn::Image;

/// D65 reference white in XYZ.
const WHITE: [f64; 3] = [0.95047, 1.0, 1.08883];

/// Per-pixel CIELAB triplets in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct LabImage {
    pub height: usize,
    pub width: usize,
    pub data: Vec<[f64; 3]>,
}

impl LabImage {
    #[inline]
    pub fn at(&self, y: usize, x: usize) -> [f64; 3] {
        self.data[y * self.width + x]
    }
}

fn srgb_to_linear(c: f64) -> f64 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn lab_f(t: f64) -> f64 {
    const D: f64 = 6.0 / 29.0;
    if t > D * D * D {
        t.cbrt()
    } else {
        t / (3.0 * D * D) + 4.0 / 29.0
    }
}

/// sRGB (values in `[0, 1]`) to CIELAB under D65.
pub fn srgb_pixel_to_lab(rgb: [f64; 3]) -> [f64; 3] {
    let [r, g, b] = rgb.map(srgb_to_linear);
    let x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    let y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    let z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
    let (fx, fy, fz) = (
        lab_f(x / WHITE[0]),
        lab_f(y / WHITE[1]),
        lab_f(z / WHITE[2]),
    );
    [
        (116.0 * fy - 16.0).clamp(0.0, 100.0),
        500.0 * (fx - fy),
        200.0 * (fy - fz),
    ]
}

pub fn rgb_to_lab(image: &Image) -> Result<LabImage> {
    let s = image.shape();
    if s.channels != 3 {
        return Err(Error::shape(format!(
            "CIELAB conversion needs 3 channels, got {}",
            s.channels
        )));
    }
    let (r, g, b) = (image.channel(0), image.channel(1), image.channel(2));
    let data = (0..s.plane())
        .map(|p| srgb_pixel_to_lab([r[p], g[p], b[p]]))
        .collect();
    Ok(LabImage {
        height: s.height,
        width: s.width,
        data,
    })
}
