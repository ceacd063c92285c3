//! Train/test corpora for the pipeline: generated synthetic scenes or a
//! folder of PNGs, with per-concept masks where available.
//!
//! Folder layout: `<root>/{train,test}/<class>/<stem>.png`. A sample may carry
//! superpixel masks as `<stem>.labels.png` (16-bit label map) plus one
//! `<stem>.<concept>.toml` MaskSpec per concept. Files are only read.

use std::fs;
use std::path::{Path, PathBuf};

use crate::config::{CorpusConfig, CorpusSource, MaskMethod, SemspaceConfig};
use crate::error::{Error, Result};
use crate::io::{load_image, read_label_map, read_png, read_toml, resize_nearest};
use crate::nn::{Dataset, Image, LabeledImage};
use crate::superpixel::{
    mask_segments, region_mask_spec, slic_segment, MaskSpec, Segmentation, DEFAULT_COMPACTNESS,
    DEFAULT_MAX_ITER,
};
use crate::synth::{generate_synthetic_corpus, CorpusSpec, SyntheticSample};

/// Offset between the train and test seeds of a synthetic corpus.
const TEST_SEED_OFFSET: u64 = 0x5eed_7e57;

#[derive(Clone, Debug)]
enum MaskSource {
    Synthetic(Box<SyntheticSample>),
    Folder { stem: PathBuf },
}

#[derive(Clone, Debug)]
pub struct CorpusItem {
    pub id: String,
    pub image: Image,
    pub label: usize,
    masks: MaskSource,
}

impl CorpusItem {
    /// The image with `concept` masked out, or `None` when the sample has no
    /// mask for it.
    pub fn masked(&self, concept: &str, cfg: &SemspaceConfig) -> Result<Option<Image>> {
        match &self.masks {
            MaskSource::Synthetic(sample) => {
                let Some(region) = sample.parts.get(concept) else {
                    return Ok(None);
                };
                if !region.iter().any(|&r| r) {
                    return Ok(None);
                }
                match cfg.mask_method {
                    MaskMethod::Omit => sample.masked(concept).map(Some),
                    MaskMethod::Superpixel => {
                        let seg = slic_segment(
                            &self.image,
                            cfg.mask_segments,
                            DEFAULT_COMPACTNESS,
                            DEFAULT_MAX_ITER,
                        )?;
                        let spec = region_mask_spec(&seg, region)?;
                        mask_segments(&self.image, &seg, &spec).map(Some)
                    }
                }
            }
            MaskSource::Folder { stem } => {
                let spec_path = with_suffix(stem, &format!(".{concept}.toml"));
                if !spec_path.exists() {
                    return Ok(None);
                }
                // mask at native resolution, then resize like the image itself
                let native = read_png(&with_suffix(stem, ".png"))?;
                let (h, w, labels) = read_label_map(&with_suffix(stem, ".labels.png"))?;
                let ns = native.shape();
                if (h, w) != (ns.height, ns.width) {
                    return Err(Error::shape(format!(
                        "{}: label map is {h}x{w}, image is {}x{}",
                        stem.display(),
                        ns.height,
                        ns.width
                    )));
                }
                let seg = Segmentation::from_labels(&native, labels)?;
                let spec: MaskSpec = read_toml(&spec_path)?;
                let s = self.image.shape();
                let masked = mask_segments(&native, &seg, &spec)?;
                resize_nearest(&masked, s.height, s.width).map(Some)
            }
        }
    }
}

fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

#[derive(Clone, Debug)]
pub struct Corpus {
    pub classes: Vec<String>,
    pub train: Vec<CorpusItem>,
    pub test: Vec<CorpusItem>,
}

impl Corpus {
    pub fn load(cfg: &CorpusConfig) -> Result<Self> {
        match cfg.source {
            CorpusSource::Synthetic => Self::synthetic(cfg),
            CorpusSource::Folder => {
                let root = cfg
                    .folder
                    .as_deref()
                    .ok_or_else(|| Error::param("corpus.folder is not set"))?;
                Self::folder(root, cfg.size)
            }
        }
    }

    fn synthetic(cfg: &CorpusConfig) -> Result<Self> {
        let split = |per_class, seed, prefix: &str| -> Result<(Vec<String>, Vec<CorpusItem>)> {
            let corpus = generate_synthetic_corpus(&CorpusSpec {
                per_class,
                size: cfg.size,
                seed,
            })?;
            let mut counters = vec![0usize; corpus.classes.len()];
            let items = corpus
                .samples
                .into_iter()
                .map(|s| {
                    let n = counters[s.label];
                    counters[s.label] += 1;
                    CorpusItem {
                        id: format!("{prefix}-{}-{n:04}", corpus.classes[s.label]),
                        image: s.image.clone(),
                        label: s.label,
                        masks: MaskSource::Synthetic(Box::new(s)),
                    }
                })
                .collect();
            Ok((corpus.classes, items))
        };
        let (classes, train) = split(cfg.train_per_class, cfg.seed, "train")?;
        let (_, test) = split(
            cfg.test_per_class,
            cfg.seed.wrapping_add(TEST_SEED_OFFSET),
            "test",
        )?;
        Ok(Self {
            classes,
            train,
            test,
        })
    }

    fn folder(root: &Path, size: usize) -> Result<Self> {
        let train_dir = root.join("train");
        let classes = sorted_entries(&train_dir)?
            .into_iter()
            .filter(|p| p.is_dir())
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect::<Vec<_>>();
        if classes.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "{}: need at least two class folders",
                train_dir.display()
            )));
        }
        let split = |name: &str| -> Result<Vec<CorpusItem>> {
            let mut items = Vec::new();
            for (label, class) in classes.iter().enumerate() {
                let dir = root.join(name).join(class);
                if !dir.is_dir() {
                    continue;
                }
                for path in sorted_entries(&dir)? {
                    let file = path
                        .file_name()
                        .map(|n| n.to_string_lossy().into_owned())
                        .unwrap_or_default();
                    let Some(stem) = file.strip_suffix(".png") else {
                        continue;
                    };
                    if stem.ends_with(".labels") {
                        continue;
                    }
                    items.push(CorpusItem {
                        id: format!("{name}-{class}-{stem}"),
                        image: load_image(&path, size, size)?,
                        label,
                        masks: MaskSource::Folder {
                            stem: dir.join(stem),
                        },
                    });
                }
            }
            Ok(items)
        };
        let train = split("train")?;
        let test = split("test")?;
        if train.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Self {
            classes,
            train,
            test,
        })
    }

    pub fn class_index(&self, class: &str) -> Result<usize> {
        self.classes.iter().position(|c| c == class).ok_or_else(|| {
            Error::param(format!(
                "unknown class {class:?}; corpus has {:?}",
                self.classes
            ))
        })
    }

    pub fn train_of(&self, label: usize) -> impl Iterator<Item = &CorpusItem> {
        self.train.iter().filter(move |s| s.label == label)
    }

    pub fn train_dataset(&self) -> Dataset {
        to_dataset(&self.classes, &self.train)
    }

    pub fn test_dataset(&self) -> Dataset {
        to_dataset(&self.classes, &self.test)
    }
}

fn to_dataset(classes: &[String], items: &[CorpusItem]) -> Dataset {
    Dataset {
        classes: classes.to_vec(),
        samples: items
            .iter()
            .map(|s| LabeledImage {
                image: s.image.clone(),
                label: s.label,
            })
            .collect(),
    }
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|e| Error::io(dir, e)))
        .collect::<Result<Vec<_>>>()?;
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{write_label_map, write_png, write_toml};
    use crate::nn::TensorShape;
    use std::collections::BTreeSet;

    fn small_cfg() -> CorpusConfig {
        CorpusConfig {
            train_per_class: 3,
            test_per_class: 2,
            size: 32,
            ..CorpusConfig::default()
        }
    }

    #[test]
    fn synthetic_splits_differ_and_mask() {
        let c = Corpus::load(&small_cfg()).unwrap();
        assert_eq!(c.train.len(), 6);
        assert_eq!(c.test.len(), 4);
        assert_ne!(c.train[0].image, c.test[0].image);
        assert_eq!(c.train[0].id, "train-cat-0000");
        let sem = SemspaceConfig::default();
        let m = c.train[0].masked("eyes", &sem).unwrap().unwrap();
        assert_ne!(m, c.train[0].image);
        assert!(c.train[0].masked("wings", &sem).unwrap().is_none());
        let sp = SemspaceConfig {
            mask_method: MaskMethod::Superpixel,
            ..sem
        };
        let m2 = c.train[0].masked("eyes", &sp).unwrap().unwrap();
        assert_ne!(m2, c.train[0].image);
    }

    #[test]
    fn folder_corpus_reads_masks_and_resizes() {
        let dir = tempfile::tempdir().unwrap();
        let shape = TensorShape::rgb(4, 4).unwrap();
        for (class, v) in [("a", 0.2), ("b", 0.8)] {
            let d = dir.path().join("train").join(class);
            let mut img = Image::filled(shape, v);
            img.set(0, 0, 0, 1.0);
            write_png(&d.join("x.png"), &img).unwrap();
        }
        let stem = dir.path().join("train/a/x");
        let labels: Vec<u32> = (0..16).map(|i| if i % 4 < 2 { 0 } else { 1 }).collect();
        write_label_map(&with_suffix(&stem, ".labels.png"), &labels, 4, 4).unwrap();
        write_toml(
            &with_suffix(&stem, ".eyes.toml"),
            &MaskSpec {
                targets: BTreeSet::from([0]),
                fill: 1,
            },
        )
        .unwrap();
        let cfg = CorpusConfig {
            source: CorpusSource::Folder,
            folder: Some(dir.path().to_path_buf()),
            size: 8,
            ..CorpusConfig::default()
        };
        let c = Corpus::load(&cfg).unwrap();
        assert_eq!(c.classes, vec!["a", "b"]);
        assert_eq!(c.train.len(), 2);
        assert!(c.test.is_empty());
        assert_eq!(c.train[0].image.shape().height, 8);
        let m = c.train[0]
            .masked("eyes", &SemspaceConfig::default())
            .unwrap()
            .unwrap();
        // left half now carries the right half's colour
        assert!((m.get(0, 0, 0) - m.get(0, 0, 7)).abs() < 1e-12);
        assert!(c.train[1]
            .masked("eyes", &SemspaceConfig::default())
            .unwrap()
            .is_none());
    }

    #[test]
    fn folder_needs_two_classes() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir_all(dir.path().join("train/a")).unwrap();
        let cfg = CorpusConfig {
            source: CorpusSource::Folder,
            folder: Some(dir.path().to_path_buf()),
            ..CorpusConfig::default()
        };
        assert!(Corpus::load(&cfg).is_err());
    }
}
