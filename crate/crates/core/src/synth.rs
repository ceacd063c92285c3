//! Procedural two-class corpus ("cat" and "dog") with ground-truth parts.
//!
//! Each image is a stack of flat-colored shapes drawn in a fixed order over a
//! noisy background. A part's annotation is the set of pixels where it ends up
//! on top, so rendering the scene without that part changes exactly those
//! pixels.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Dataset, Image, LabeledImage, TensorShape};

pub const SYNTH_CLASSES: [&str; 2] = ["cat", "dog"];
/// Smallest edge length the part layout fits in.
pub const MIN_SYNTH_SIZE: usize = 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    /// Images per class.
    pub per_class: usize,
    pub size: usize,
    pub seed: u64,
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<()> {
        if self.per_class == 0 {
            return Err(Error::param("per-class sample count must be at least 1"));
        }
        if self.size < MIN_SYNTH_SIZE {
            return Err(Error::param(format!(
                "image size {} is too small for the part layout (minimum {MIN_SYNTH_SIZE})",
                self.size
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
enum Shape {
    Ellipse { cx: f64, cy: f64, rx: f64, ry: f64 },
    Rect { x0: f64, y0: f64, x1: f64, y1: f64 },
    Triangle { pts: [(f64, f64); 3] },
}

impl Shape {
    fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Shape::Ellipse { cx, cy, rx, ry } => {
                ((x - cx) / rx).powi(2) + ((y - cy) / ry).powi(2) <= 1.0
            }
            Shape::Rect { x0, y0, x1, y1 } => x >= x0 && x <= x1 && y >= y0 && y <= y1,
            Shape::Triangle { pts } => {
                let side = |a: (f64, f64), b: (f64, f64)| {
                    (b.0 - a.0) * (y - a.1) - (b.1 - a.1) * (x - a.0)
                };
                let (d0, d1, d2) = (
                    side(pts[0], pts[1]),
                    side(pts[1], pts[2]),
                    side(pts[2], pts[0]),
                );
                (d0 >= 0.0 && d1 >= 0.0 && d2 >= 0.0) || (d0 <= 0.0 && d1 <= 0.0 && d2 <= 0.0)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Layer {
    part: String,
    color: [f64; 3],
    shapes: Vec<Shape>,
}

/// Everything needed to re-render one image, with or without a part.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    size: usize,
    background: [f64; 3],
    noise_seed: u64,
    noise: f64,
    layers: Vec<Layer>,
}

impl Scene {
    pub fn parts(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for l in &self.layers {
            if !out.contains(&l.part.as_str()) {
                out.push(&l.part);
            }
        }
        out
    }

    /// Renders the scene, leaving out every layer of `omit`; also returns the
    /// topmost part per pixel.
    fn raster(&self, omit: Option<&str>) -> (Image, Vec<Option<usize>>) {
        let s = self.size;
        let shape = TensorShape::rgb(s, s).expect("size checked");
        let mut img = Image::zeros(shape);
        let mut owner = vec![None; s * s];
        let mut rng = ChaCha8Rng::seed_from_u64(self.noise_seed);
        for p in 0..s * s {
            let (y, x) = ((p / s) as f64 + 0.5, (p % s) as f64 + 0.5);
            let mut color = self.background;
            for (li, layer) in self.layers.iter().enumerate() {
                if Some(layer.part.as_str()) == omit {
                    continue;
                }
                if layer.shapes.iter().any(|sh| sh.contains(x, y)) {
                    color = layer.color;
                    owner[p] = Some(li);
                }
            }
            // noise is drawn for every pixel so omission does not shift it
            let n: [f64; 3] = std::array::from_fn(|_| rng.random_range(-self.noise..=self.noise));
            let px: Vec<f64> = (0..3).map(|c| (color[c] + n[c]).clamp(0.0, 1.0)).collect();
            img.set_pixel(p, &px);
        }
        (img, owner)
    }

    pub fn render(&self) -> Image {
        self.raster(None).0
    }

    pub fn render_without(&self, part: &str) -> Image {
        self.raster(Some(part)).0
    }

    /// Visible pixels of each part.
    pub fn annotations(&self) -> BTreeMap<String, Vec<bool>> {
        let (_, owner) = self.raster(None);
        let mut out = BTreeMap::new();
        for part in self.parts() {
            let region = owner
                .iter()
                .map(|o| o.is_some_and(|li| self.layers[li].part == part))
                .collect();
            out.insert(part.to_string(), region);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSample {
    pub image: Image,
    pub label: usize,
    pub scene: Scene,
    /// Visible pixels per part (row-major, one flag per pixel).
    pub parts: BTreeMap<String, Vec<bool>>,
}

impl SyntheticSample {
    /// The image with one part removed (what lies beneath shows through).
    pub fn masked(&self, part: &str) -> Result<Image> {
        if !self.parts.contains_key(part) {
            return Err(Error::param(format!("sample has no part named {part:?}")));
        }
        Ok(self.scene.render_without(part))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticCorpus {
    pub classes: Vec<String>,
    pub samples: Vec<SyntheticSample>,
}

impl SyntheticCorpus {
    pub fn dataset(&self) -> Dataset {
        Dataset {
            classes: self.classes.clone(),
            samples: self
                .samples
                .iter()
                .map(|s| LabeledImage {
                    image: s.image.clone(),
                    label: s.label,
                })
                .collect(),
        }
    }

    pub fn of_class(&self, label: usize) -> impl Iterator<Item = &SyntheticSample> {
        self.samples.iter().filter(move |s| s.label == label)
    }
}

fn jitter(rng: &mut ChaCha8Rng, base: [f64; 3], amount: f64) -> [f64; 3] {
    base.map(|c| (c + rng.random_range(-amount..=amount)).clamp(0.0, 1.0))
}

fn scene(rng: &mut ChaCha8Rng, label: usize, size: usize) -> Scene {
    let s = size as f64;
    let k = rng.random_range(0.9..1.1) * s;
    let cx = s * 0.5 + rng.random_range(-0.05..0.05) * s;
    let cy = s * 0.36 + rng.random_range(-0.04..0.04) * s;
    let by = s * 0.68 + rng.random_range(-0.03..0.03) * s;
    let cat = label == 0;
    let background = [
        rng.random_range(0.55..0.95),
        rng.random_range(0.55..0.95),
        rng.random_range(0.55..0.95),
    ];
    let furs: &[[f64; 3]] = if cat {
        &[
            [0.55, 0.55, 0.58],
            [0.9, 0.55, 0.2],
            [0.2, 0.2, 0.22],
            [0.85, 0.85, 0.82],
        ]
    } else {
        &[
            [0.5, 0.32, 0.15],
            [0.8, 0.65, 0.4],
            [0.2, 0.2, 0.22],
            [0.85, 0.85, 0.82],
        ]
    };
    let base = furs[rng.random_range(0..furs.len())];
    let fur = jitter(rng, base, 0.06);
    let dark = fur.map(|c| c * 0.6);

    let mut layers = vec![Layer {
        part: "body".into(),
        color: fur,
        shapes: vec![Shape::Ellipse {
            cx,
            cy: by,
            rx: 0.28 * k,
            ry: 0.15 * k,
        }],
    }];
    let (leg_w, leg_end) = if cat { (0.05, 0.9) } else { (0.085, 0.96) };
    layers.push(Layer {
        part: "legs".into(),
        color: dark,
        shapes: [-0.2, -0.08, 0.08, 0.2]
            .iter()
            .map(|dx| Shape::Rect {
                x0: cx + dx * k - leg_w * k / 2.0,
                x1: cx + dx * k + leg_w * k / 2.0,
                y0: by + 0.06 * k,
                y1: (leg_end * s).min(s - 1.0),
            })
            .collect(),
    });
    let head = if cat {
        Shape::Ellipse {
            cx,
            cy,
            rx: 0.2 * k,
            ry: 0.19 * k,
        }
    } else {
        Shape::Ellipse {
            cx,
            cy,
            rx: 0.16 * k,
            ry: 0.22 * k,
        }
    };
    layers.push(Layer {
        part: "head".into(),
        color: fur,
        shapes: vec![head],
    });
    let ears = if cat {
        [-1.0, 1.0]
            .iter()
            .map(|sd| Shape::Triangle {
                pts: [
                    (cx + sd * 0.18 * k, cy - 0.06 * k),
                    (cx + sd * 0.15 * k, cy - 0.3 * k),
                    (cx + sd * 0.03 * k, cy - 0.17 * k),
                ],
            })
            .collect()
    } else {
        [-1.0, 1.0]
            .iter()
            .map(|sd| Shape::Ellipse {
                cx: cx + sd * 0.17 * k,
                cy: cy + 0.02 * k,
                rx: 0.06 * k,
                ry: 0.15 * k,
            })
            .collect()
    };
    layers.push(Layer {
        part: "ears".into(),
        color: if cat { fur } else { dark },
        shapes: ears,
    });
    let ey = cy - 0.03 * k;
    if cat {
        let iris = jitter(rng, [0.35, 0.8, 0.2], 0.08);
        for (color, rx, ry) in [(iris, 0.05, 0.038), ([0.05, 0.05, 0.05], 0.014, 0.034)] {
            layers.push(Layer {
                part: "eyes".into(),
                color,
                shapes: [-1.0, 1.0]
                    .iter()
                    .map(|sd| Shape::Ellipse {
                        cx: cx + sd * 0.08 * k,
                        cy: ey,
                        rx: rx * k,
                        ry: ry * k,
                    })
                    .collect(),
            });
        }
    } else {
        for (color, r, dx, dy) in [
            ([0.05, 0.04, 0.03], 0.04, 0.0, 0.0),
            ([0.95, 0.95, 0.95], 0.013, 0.012, -0.012),
        ] {
            layers.push(Layer {
                part: "eyes".into(),
                color,
                shapes: [-1.0, 1.0]
                    .iter()
                    .map(|sd| Shape::Ellipse {
                        cx: cx + sd * 0.075 * k + dx * k,
                        cy: ey + dy * k,
                        rx: r * k,
                        ry: r * k,
                    })
                    .collect(),
            });
        }
    }
    let nose = if cat {
        Shape::Triangle {
            pts: [
                (cx - 0.05 * k, cy + 0.045 * k),
                (cx + 0.05 * k, cy + 0.045 * k),
                (cx, cy + 0.11 * k),
            ],
        }
    } else {
        Shape::Ellipse {
            cx,
            cy: cy + 0.09 * k,
            rx: 0.05 * k,
            ry: 0.035 * k,
        }
    };
    layers.push(Layer {
        part: "nose".into(),
        color: if cat {
            [0.95, 0.55, 0.6]
        } else {
            [0.05, 0.05, 0.05]
        },
        shapes: vec![nose],
    });
    Scene {
        size,
        background,
        noise_seed: rng.random(),
        noise: 0.03,
        layers,
    }
}

/// Samples alternate between classes; the whole corpus is a function of the
/// spec.
pub fn generate_synthetic_corpus(spec: &CorpusSpec) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut samples = Vec::with_capacity(2 * spec.per_class);
    for _ in 0..spec.per_class {
        for label in 0..2 {
            let scene = scene(&mut rng, label, spec.size);
            samples.push(SyntheticSample {
                image: scene.render(),
                label,
                parts: scene.annotations(),
                scene,
            });
        }
    }
    Ok(SyntheticCorpus {
        classes: SYNTH_CLASSES.iter().map(|c| c.to_string()).collect(),
        samples,
    })
}
