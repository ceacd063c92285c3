//! Radar of semantic probabilities, confidence indicators and the template
//! explanation built from them.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{CnnModel, FeatureVector, Image};
use crate::semspace::SemanticSpace;
use crate::semstats::{space_probability, Radar, CONCEPTS};

fn find_space<'a>(
    spaces: &'a [SemanticSpace],
    class: &str,
    concept: &str,
) -> Result<&'a SemanticSpace> {
    spaces
        .iter()
        .find(|s| s.class == class && s.concept == concept)
        .ok_or_else(|| Error::IncompleteRadar(format!("no semantic space for {class}/{concept}")))
}

/// Radar from precomputed GAP features.
pub fn radar_from_features(
    features: &FeatureVector,
    classes: &[String],
    spaces: &[SemanticSpace],
) -> Result<Radar> {
    let mut radar = Radar::new(classes.to_vec());
    for class in classes {
        for concept in CONCEPTS {
            let space = find_space(spaces, class, concept)?;
            radar.set(class, concept, space_probability(features, space)?);
        }
    }
    radar.ensure_complete()?;
    Ok(radar)
}

pub fn compute_radar(image: &Image, model: &CnnModel, spaces: &[SemanticSpace]) -> Result<Radar> {
    for class in model.classes() {
        for concept in CONCEPTS {
            find_space(spaces, class, concept)?.fitted()?;
        }
    }
    let features = model.forward_features(image)?;
    radar_from_features(&features, model.classes(), spaces)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Indicators {
    pub predicted: usize,
    pub predicted_class: String,
    pub p_max: f64,
    pub s_max: String,
    /// Predicted class minus the best other class, per concept.
    pub delta_p: BTreeMap<String, f64>,
    pub delta_max_p: f64,
}

pub fn derive_indicators(radar: &Radar, predicted: usize) -> Result<Indicators> {
    radar.ensure_complete()?;
    let classes = radar.classes();
    let class = classes
        .get(predicted)
        .ok_or_else(|| Error::param(format!("class {predicted} out of range")))?;
    let get = |cl: &str, co: &str| radar.get(cl, co).expect("radar is complete");
    let mut p_max = f64::NEG_INFINITY;
    let mut s_max = String::new();
    let mut delta_p = BTreeMap::new();
    for concept in CONCEPTS {
        let p = get(class, concept);
        if p > p_max {
            p_max = p;
            s_max = concept.to_string();
        }
        let other = classes
            .iter()
            .filter(|c| *c != class)
            .map(|c| get(c, concept))
            .fold(f64::NEG_INFINITY, f64::max);
        delta_p.insert(concept.to_string(), p - other);
    }
    let delta_max_p = delta_p.values().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(Indicators {
        predicted,
        predicted_class: class.clone(),
        p_max,
        s_max,
        delta_p,
        delta_max_p,
    })
}

/// Confidence of the overall assessment, by `Δ_maxP`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    Might,
    Probably,
    Sure,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Position {
    Vivid,
    Be,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Semanteme {
    Confusing,
    Perhaps,
    SomethingLike,
    Obviously,
}

impl Semanteme {
    pub fn word(self) -> &'static str {
        match self {
            Semanteme::Confusing => "confusing",
            Semanteme::Perhaps => "perhaps",
            Semanteme::SomethingLike => "something like",
            Semanteme::Obviously => "obviously",
        }
    }
}

impl Position {
    pub fn word(self) -> &'static str {
        match self {
            Position::Vivid => "vivid",
            Position::Be => "be",
        }
    }
}

// Bands are left-open, right-closed: (a, b].
pub const BAND_LOW: f64 = 0.2;
pub const BAND_MID: f64 = 0.35;
pub const BAND_HIGH: f64 = 0.5;

pub fn assessment_band(delta_max_p: f64) -> Band {
    if delta_max_p <= BAND_LOW {
        Band::Might
    } else if delta_max_p <= BAND_HIGH {
        Band::Probably
    } else {
        Band::Sure
    }
}

pub fn semanteme_band(delta_p: f64) -> Semanteme {
    if delta_p <= BAND_LOW {
        Semanteme::Confusing
    } else if delta_p <= BAND_MID {
        Semanteme::Perhaps
    } else if delta_p <= BAND_HIGH {
        Semanteme::SomethingLike
    } else {
        Semanteme::Obviously
    }
}

/// `None` when `P_max` is too low for any concept to be mentioned.
pub fn position_band(p_max: f64) -> Option<Position> {
    if p_max > BAND_HIGH {
        Some(Position::Vivid)
    } else if p_max > BAND_LOW {
        Some(Position::Be)
    } else {
        None
    }
}

/// The rule-table cell for one concept; `None` is the empty cell.
pub fn fragment_cell(p_max: f64, delta_p: f64) -> Option<(Position, Semanteme)> {
    let position = position_band(p_max)?;
    let semanteme = semanteme_band(delta_p);
    if position == Position::Be && semanteme == Semanteme::Confusing {
        return None;
    }
    Some((position, semanteme))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fragment {
    pub concept: String,
    pub position: Position,
    pub semanteme: Semanteme,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub band: Band,
    pub sentence: String,
    /// In sentence order (descending `ΔP`).
    pub fragments: Vec<Fragment>,
}

fn verb(concept: &str) -> &'static str {
    if concept.ends_with('s') {
        "are"
    } else {
        "is"
    }
}

fn supporting_text(f: &Fragment, class: &str) -> String {
    let c = &f.concept;
    let evidence = match f.semanteme {
        Semanteme::Obviously => format!("{class}'s {c} obviously"),
        s => format!("{} {class}'s {c}", s.word()),
    };
    match f.position {
        Position::Vivid => format!("its vivid {c}, which {} {evidence}", verb(c)),
        Position::Be => format!("it has {c}, which {} {evidence}", verb(c)),
    }
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Sentence from the rule table. The `might` band states the class without
/// evidence; otherwise supporting concepts follow "mainly because" in
/// descending `ΔP` and confusing concepts close the text.
pub fn generate_explanation(ind: &Indicators) -> Explanation {
    let class = &ind.predicted_class;
    let band = assessment_band(ind.delta_max_p);
    if band == Band::Might {
        return Explanation {
            band,
            sentence: format!("It might be a {class}, but I am not sure."),
            fragments: Vec::new(),
        };
    }
    let mut ordered: Vec<(&str, f64)> = CONCEPTS
        .iter()
        .filter_map(|c| ind.delta_p.get(*c).map(|&d| (*c, d)))
        .collect();
    // stable sort keeps the fixed concept order on ties
    ordered.sort_by(|a, b| b.1.total_cmp(&a.1));
    let fragments: Vec<Fragment> = ordered
        .iter()
        .filter_map(|&(concept, d)| {
            fragment_cell(ind.p_max, d).map(|(position, semanteme)| Fragment {
                concept: concept.to_string(),
                position,
                semanteme,
            })
        })
        .collect();

    let opening = match band {
        Band::Sure => format!("I am sure it is a {class}"),
        _ => format!("It is probably a {class}"),
    };
    let (confusing, supporting): (Vec<&Fragment>, Vec<&Fragment>) = fragments
        .iter()
        .partition(|f| f.semanteme == Semanteme::Confusing);
    let mut sentence = String::new();
    match supporting.split_first() {
        Some((first, rest)) => {
            let _ = write!(
                sentence,
                "{opening} mainly because {}.",
                supporting_text(first, class)
            );
            for f in rest {
                let _ = write!(sentence, " {}.", capitalize(&supporting_text(f, class)));
            }
        }
        None => {
            let _ = write!(sentence, "{opening}.");
        }
    }
    if !confusing.is_empty() {
        let names: Vec<&str> = confusing.iter().map(|f| f.concept.as_str()).collect();
        let v = if names.len() > 1 {
            "are"
        } else {
            verb(names[0])
        };
        let _ = write!(
            sentence,
            " However, its {} {v} a little confusing.",
            names.join(" and ")
        );
    }
    Explanation {
        band,
        sentence,
        fragments,
    }
}

/// Radar as CSV with columns `concept,class,probability`.
pub fn radar_csv(radar: &Radar) -> String {
    let mut out = String::from("concept,class,probability\n");
    for (concept, class, p) in radar.rows() {
        let _ = writeln!(out, "{concept},{class},{p}");
    }
    out
}

/// Static radar chart: one axis per (class, concept), radius = probability
/// clipped to [0, 1.2].
pub fn radar_svg(radar: &Radar) -> String {
    let rows = radar.rows();
    let n = rows.len().max(1);
    let (cx, cy, r) = (200.0, 200.0, 140.0);
    let point = |i: usize, v: f64| {
        let angle = std::f64::consts::TAU * i as f64 / n as f64 - std::f64::consts::FRAC_PI_2;
        (cx + r * v * angle.cos(), cy + r * v * angle.sin())
    };
    let mut svg = String::from(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"400\" height=\"400\" viewBox=\"0 0 400 400\">\n",
    );
    for ring in [0.25, 0.5, 0.75, 1.0] {
        let pts: Vec<String> = (0..n)
            .map(|i| {
                let (x, y) = point(i, ring);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            svg,
            "  <polygon points=\"{}\" fill=\"none\" stroke=\"#ccc\"/>",
            pts.join(" ")
        );
    }
    for (i, (concept, class, _)) in rows.iter().enumerate() {
        let (x, y) = point(i, 1.0);
        let (lx, ly) = point(i, 1.18);
        let _ = writeln!(
            svg,
            "  <line x1=\"{cx}\" y1=\"{cy}\" x2=\"{x:.2}\" y2=\"{y:.2}\" stroke=\"#ccc\"/>\n  <text x=\"{lx:.2}\" y=\"{ly:.2}\" font-size=\"12\" text-anchor=\"middle\">{class} {concept}</text>"
        );
    }
    let pts: Vec<String> = rows
        .iter()
        .enumerate()
        .map(|(i, (_, _, p))| {
            let (x, y) = point(i, p.clamp(0.0, 1.2));
            format!("{x:.2},{y:.2}")
        })
        .collect();
    let _ = writeln!(
        svg,
        "  <polygon points=\"{}\" fill=\"#4a90d9\" fill-opacity=\"0.35\" stroke=\"#1f5fa8\"/>",
        pts.join(" ")
    );
    svg.push_str("</svg>\n");
    svg
}
