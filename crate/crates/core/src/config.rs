//! One TOML document holding every pipeline setting.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_bytes, sha256_hex};
use crate::nn::TrainConfig;
use crate::pca::{GaPreprocess, Retention};
use crate::semspace::{VisConfig, DEFAULT_SSN_COUNT, DEFAULT_TARGET_SCALE};
use crate::semstats::{AdversarialCriterion, AttackConfig, Predicate};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusSource {
    Synthetic,
    Folder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub source: CorpusSource,
    /// Root with `train/<class>/*.png` and `test/<class>/*.png`.
    pub folder: Option<PathBuf>,
    /// Synthetic only.
    pub train_per_class: usize,
    pub test_per_class: usize,
    /// Edge length every image is resized to.
    pub size: usize,
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            source: CorpusSource::Synthetic,
            folder: None,
            train_per_class: 300,
            test_per_class: 100,
            size: 64,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraitsConfig {
    /// `N_s`, samples per class.
    pub samples: usize,
    pub retention: Retention,
    pub use_ga: bool,
    pub ga: GaPreprocess,
}

impl Default for TraitsConfig {
    fn default() -> Self {
        Self {
            samples: 200,
            retention: Retention::default(),
            use_ga: false,
            ga: GaPreprocess::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskMethod {
    /// Redraw the synthetic scene without the part.
    Omit,
    /// Cover the annotated region with superpixels filled from a neighbour.
    Superpixel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SemspaceConfig {
    /// Masked/unmasked pairs per class.
    pub pairs: usize,
    pub ssn_count: usize,
    pub target_scale: f64,
    pub mask_method: MaskMethod,
    /// Superpixel count when masking with superpixels.
    pub mask_segments: usize,
}

impl Default for SemspaceConfig {
    fn default() -> Self {
        Self {
            pairs: 100,
            ssn_count: DEFAULT_SSN_COUNT,
            target_scale: DEFAULT_TARGET_SCALE,
            mask_method: MaskMethod::Omit,
            mask_segments: 20,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsConfig {
    /// Natural samples per class used for fitting; 0 uses all.
    pub fit_samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssessConfig {
    /// Test images assessed when `images` is empty.
    pub samples: usize,
    pub images: Vec<PathBuf>,
}

impl Default for AssessConfig {
    fn default() -> Self {
        Self {
            samples: 10,
            images: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub class: String,
    pub concept: String,
    pub predicate: Predicate,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            class: "cat".into(),
            concept: "eyes".into(),
            predicate: Predicate::Above(0.9),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdversarialConfig {
    pub pairs: usize,
    pub criterion: AdversarialCriterion,
    pub attack: AttackConfig,
}

impl Default for AdversarialConfig {
    fn default() -> Self {
        Self {
            pairs: 50,
            criterion: AdversarialCriterion::default(),
            attack: AttackConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub schema_version: u32,
    pub run_name: String,
    pub corpus: CorpusConfig,
    pub train: TrainConfig,
    pub traits: TraitsConfig,
    pub semspace: SemspaceConfig,
    pub visualize: VisConfig,
    pub stats: StatsConfig,
    pub assess: AssessConfig,
    pub search: SearchConfig,
    pub adversarial: AdversarialConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            run_name: "default".into(),
            corpus: CorpusConfig::default(),
            train: TrainConfig::default(),
            traits: TraitsConfig::default(),
            semspace: SemspaceConfig::default(),
            visualize: VisConfig::default(),
            stats: StatsConfig::default(),
            assess: AssessConfig::default(),
            search: SearchConfig::default(),
            adversarial: AdversarialConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::param(format!(
                "config schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.run_name.is_empty() || self.run_name.contains(['/', '\\']) {
            return Err(Error::param("run_name must be a non-empty plain name"));
        }
        let c = &self.corpus;
        if c.source == CorpusSource::Folder && c.folder.is_none() {
            return Err(Error::param(
                "corpus.folder is required when corpus.source = \"folder\"",
            ));
        }
        if c.train_per_class == 0 || c.test_per_class == 0 {
            return Err(Error::param("corpus sample counts must be at least 1"));
        }
        if c.size < 8 {
            return Err(Error::param("corpus.size must be at least 8"));
        }
        self.train.validate()?;
        if self.traits.samples < 2 {
            return Err(Error::param("traits.samples must be at least 2"));
        }
        if self.traits.use_ga {
            self.traits.ga.ga.validate()?;
        }
        if self.semspace.pairs < 2 || self.semspace.ssn_count == 0 {
            return Err(Error::param(
                "semspace.pairs >= 2 and semspace.ssn_count >= 1 required",
            ));
        }
        if !(self.semspace.target_scale > 0.0) {
            return Err(Error::param("semspace.target_scale must be > 0"));
        }
        self.visualize.validate()?;
        if self.adversarial.pairs == 0 {
            return Err(Error::param("adversarial.pairs must be at least 1"));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::InvalidInput(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::InvalidInput(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = read_bytes(path)?;
        let text = String::from_utf8(bytes).map_err(|e| Error::io(path, e))?;
        let cfg: Self = toml::from_str(&text).map_err(|e| Error::io(path, e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies `section.key=value` overrides; values are parsed as TOML and
    /// fall back to strings.
    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self> {
        let mut doc: toml::Table =
            toml::from_str(&self.to_toml()?).map_err(|e| Error::InvalidInput(e.to_string()))?;
        for item in overrides {
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| Error::param(format!("override {item:?} is not key=value")))?;
            let value: toml::Value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
                .ok()
                .and_then(|mut t| t.remove("v"))
                .unwrap_or_else(|| toml::Value::String(raw.to_string()));
            let mut path: Vec<&str> = key.trim().split('.').collect();
            let last = path
                .pop()
                .filter(|k| !k.is_empty())
                .ok_or_else(|| Error::param("empty override key"))?;
            let mut table = &mut doc;
            for part in path {
                table = table
                    .entry(part)
                    .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                    .as_table_mut()
                    .ok_or_else(|| Error::param(format!("{key}: {part} is not a section")))?;
            }
            table.insert(last.to_string(), value);
        }
        let text = toml::to_string(&doc).map_err(|e| Error::InvalidInput(e.to_string()))?;
        Self::from_toml(&text)
    }

    pub fn sha256(&self) -> Result<String> {
        Ok(sha256_hex(self.to_toml()?.as_bytes()))
    }
}
