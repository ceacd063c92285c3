use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Concepts every class is interpreted through.
pub const CONCEPTS: [&str; 3] = ["eyes", "nose", "legs"];

/// Semantic probabilities per (class, concept).
#[derive(Clone, Debug, PartialEq)]
pub struct Radar {
    classes: Vec<String>,
    entries: BTreeMap<(String, String), f64>,
}

impl Radar {
    pub fn new(classes: Vec<String>) -> Self {
        Self {
            classes,
            entries: BTreeMap::new(),
        }
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn set(&mut self, class: &str, concept: &str, p: f64) {
        self.entries
            .insert((class.to_string(), concept.to_string()), p);
    }

    pub fn get(&self, class: &str, concept: &str) -> Option<f64> {
        self.entries
            .get(&(class.to_string(), concept.to_string()))
            .copied()
    }

    fn missing(&self) -> Vec<String> {
        let mut out = Vec::new();
        for class in &self.classes {
            for concept in CONCEPTS {
                if self.get(class, concept).is_none() {
                    out.push(format!("{class}/{concept}"));
                }
            }
        }
        out
    }

    pub fn is_complete(&self) -> bool {
        self.classes.len() == 2 && self.missing().is_empty()
    }

    pub fn ensure_complete(&self) -> Result<()> {
        if self.classes.len() != 2 {
            return Err(Error::IncompleteRadar(format!(
                "expected 2 classes, radar has {}",
                self.classes.len()
            )));
        }
        let missing = self.missing();
        if !missing.is_empty() {
            return Err(Error::IncompleteRadar(missing.join(", ")));
        }
        Ok(())
    }

    /// Values in class-major, [`CONCEPTS`] order.
    pub fn values(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(6);
        for class in &self.classes {
            for concept in CONCEPTS {
                if let Some(p) = self.get(class, concept) {
                    out.push(p);
                }
            }
        }
        out
    }

    /// `(concept, class, probability)` rows in class-major order.
    pub fn rows(&self) -> Vec<(String, String, f64)> {
        let mut out = Vec::new();
        for class in &self.classes {
            for concept in CONCEPTS {
                if let Some(p) = self.get(class, concept) {
                    out.push((concept.to_string(), class.clone(), p));
                }
            }
        }
        out
    }

    /// Builds a complete radar from six values in class-major order.
    pub fn from_values(classes: [&str; 2], values: &[f64]) -> Result<Self> {
        if values.len() != 6 {
            return Err(Error::IncompleteRadar(format!(
                "got {} of 6 values",
                values.len()
            )));
        }
        let mut r = Radar::new(classes.iter().map(|c| c.to_string()).collect());
        for (ci, class) in classes.iter().enumerate() {
            for (k, concept) in CONCEPTS.iter().enumerate() {
                r.set(class, concept, values[ci * 3 + k]);
            }
        }
        Ok(r)
    }
}
