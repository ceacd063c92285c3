//! Pipeline commands. Each reads the artifacts of earlier commands from the
//! run directory, writes its own, and records a manifest in
//! `manifests/<command>.json`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assessment::{
    compute_radar, derive_indicators, generate_explanation, radar_csv, radar_svg, Indicators,
};
use crate::config::{PipelineConfig, SCHEMA_VERSION};
use crate::corpus::{Corpus, CorpusItem};
use crate::error::{Error, Result};
use crate::io::{
    load_image, read_json, read_toml, write_atomic, write_json, write_png, write_toml, Manifest,
};
use crate::nn::{
    accuracy, load_checkpoint, save_checkpoint, train, Architecture, CnnModel, FeatureVector, Image,
};
use crate::pca::extract_common_traits;
use crate::semspace::{build_target_encoding, extract_semantic_space, visualize, SemanticSpace};
use crate::semstats::{
    fit_space, flag_adversarial, pgd_attack, qq_r2, search_samples, space_probability,
    AttackConfig, CONCEPTS,
};

/// Environment variable naming the directory that holds run directories.
pub const RUN_ROOT_ENV: &str = "SXAI_RUN_ROOT";

pub const MODEL_FILE: &str = "model.ckpt";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Command {
    Train,
    ExtractTraits,
    ExtractSemspace,
    Visualize,
    FitStats,
    Assess,
    Search,
    DetectAdv,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Train,
        Command::ExtractTraits,
        Command::ExtractSemspace,
        Command::Visualize,
        Command::FitStats,
        Command::Assess,
        Command::Search,
        Command::DetectAdv,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Train => "train",
            Command::ExtractTraits => "extract-traits",
            Command::ExtractSemspace => "extract-semspace",
            Command::Visualize => "visualize",
            Command::FitStats => "fit-stats",
            Command::Assess => "assess",
            Command::Search => "search",
            Command::DetectAdv => "detect-adv",
        }
    }

    /// The command whose artifacts this one reads.
    pub fn prerequisite(self) -> Option<Command> {
        match self {
            Command::Train => None,
            Command::ExtractTraits | Command::ExtractSemspace => Some(Command::Train),
            Command::Visualize | Command::FitStats => Some(Command::ExtractSemspace),
            Command::Assess | Command::Search | Command::DetectAdv => Some(Command::FitStats),
        }
    }
}

impl std::str::FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::param(format!("unknown command {s:?}")))
    }
}

/// `explicit`, else `$SXAI_RUN_ROOT/<run_name>`, else `runs/<run_name>`.
pub fn resolve_run_dir(explicit: Option<&Path>, run_name: &str) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    let root = std::env::var_os(RUN_ROOT_ENV).map_or_else(|| PathBuf::from("runs"), PathBuf::from);
    root.join(run_name)
}

#[derive(Clone, Debug)]
pub struct CommandReport {
    pub command: Command,
    pub manifest: Manifest,
    pub manifest_path: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainMetrics {
    pub classes: Vec<String>,
    pub train_samples: usize,
    pub test_samples: usize,
    pub parameters: usize,
    pub train_accuracy: f64,
    pub test_accuracy: Option<f64>,
    pub final_batch_loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraitsSummary {
    pub class: String,
    pub samples: usize,
    pub retained: usize,
    pub eigenvalues: Vec<f64>,
    pub information_ratios: Vec<f64>,
    pub total_variance: f64,
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssessRecord {
    pub id: String,
    pub predicted_class: String,
    pub probability: f64,
    pub indicators: Indicators,
    pub sentence: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversarialSummary {
    pub pairs: usize,
    pub natural_flagged: usize,
    pub attacked_flagged: usize,
    pub natural_rate: f64,
    pub attacked_rate: f64,
    /// Attacks that changed the prediction.
    pub attack_success: usize,
}

pub struct Pipeline {
    config: PipelineConfig,
    run_dir: PathBuf,
    corpus: Option<Corpus>,
}

impl Pipeline {
    pub fn new(config: PipelineConfig, run_dir: PathBuf) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            run_dir,
            corpus: None,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn run_dir(&self) -> &Path {
        &self.run_dir
    }

    pub fn manifest_path(&self, command: Command) -> PathBuf {
        self.run_dir
            .join("manifests")
            .join(format!("{}.json", command.name()))
    }

    pub fn run(&mut self, command: Command) -> Result<CommandReport> {
        if let Some(pre) = command.prerequisite() {
            if !self.manifest_path(pre).exists() {
                return Err(Error::MissingPrerequisite {
                    command: pre.name().to_string(),
                    detail: format!(
                        "`{}` needs its outputs in {}",
                        command.name(),
                        self.run_dir.display()
                    ),
                });
            }
        }
        info!("{} -> {}", command.name(), self.run_dir.display());
        let (inputs, outputs) = match command {
            Command::Train => self.train()?,
            Command::ExtractTraits => self.extract_traits()?,
            Command::ExtractSemspace => self.extract_semspace()?,
            Command::Visualize => self.visualize()?,
            Command::FitStats => self.fit_stats()?,
            Command::Assess => self.assess()?,
            Command::Search => self.search()?,
            Command::DetectAdv => self.detect_adv()?,
        };
        self.finish(command, &inputs, &outputs)
    }

    /// Every command in order.
    pub fn run_all(&mut self) -> Result<Vec<CommandReport>> {
        Command::ALL.into_iter().map(|c| self.run(c)).collect()
    }

    fn finish(
        &self,
        command: Command,
        inputs: &[PathBuf],
        outputs: &[PathBuf],
    ) -> Result<CommandReport> {
        write_atomic(
            &self.run_dir.join("config.toml"),
            self.config.to_toml()?.as_bytes(),
        )?;
        let c = &self.config;
        let mut seeds = BTreeMap::new();
        seeds.insert("corpus".to_string(), c.corpus.seed);
        seeds.insert("train".to_string(), c.train.seed);
        seeds.insert("ga".to_string(), c.traits.ga.ga.seed);
        seeds.insert("attack".to_string(), c.adversarial.attack.seed);
        let manifest = Manifest {
            command: command.name().to_string(),
            schema_version: SCHEMA_VERSION,
            config_sha256: c.sha256()?,
            seeds,
            inputs: Manifest::hash_files(&self.run_dir, inputs)?,
            outputs: Manifest::hash_files(&self.run_dir, outputs)?,
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        };
        let path = self.manifest_path(command);
        write_json(&path, &manifest)?;
        Ok(CommandReport {
            command,
            manifest,
            manifest_path: path,
        })
    }

    fn corpus(&mut self) -> Result<&Corpus> {
        if self.corpus.is_none() {
            self.corpus = Some(Corpus::load(&self.config.corpus)?);
        }
        Ok(self.corpus.as_ref().expect("loaded above"))
    }

    fn write_text(&self, rel: &str, text: &str) -> Result<PathBuf> {
        write_atomic(&self.run_dir.join(rel), text.as_bytes())?;
        Ok(PathBuf::from(rel))
    }

    fn model(&self) -> Result<CnnModel> {
        load_checkpoint(&self.run_dir.join(MODEL_FILE))
    }

    fn space_path(dir: &str, class: &str, concept: &str) -> String {
        format!("{dir}/{class}_{concept}.toml")
    }

    /// Spaces for every class and concept from `dir` (`spaces` or `stats`).
    fn load_spaces(
        &self,
        model: &CnnModel,
        dir: &str,
    ) -> Result<(Vec<SemanticSpace>, Vec<PathBuf>)> {
        let mut spaces = Vec::new();
        let mut paths = Vec::new();
        for class in model.classes() {
            for concept in CONCEPTS {
                let rel = Self::space_path(dir, class, concept);
                let space: SemanticSpace = read_toml(&self.run_dir.join(&rel))?;
                space.validate()?;
                spaces.push(space);
                paths.push(PathBuf::from(rel));
            }
        }
        Ok((spaces, paths))
    }

    fn train(&mut self) -> Result<(Vec<PathBuf>, Vec<PathBuf>)> {
        let cfg = self.config.train.clone();
        let corpus = self.corpus()?;
        let train_set = corpus.train_dataset();
        let test_set = corpus.test_dataset();
        let (model, report) = train(
            &train_set,
            &Architecture::desk(train_set.classes.len()),
            &cfg,
        )?;
        let train_accuracy = accuracy(&model, &train_set.samples)?;
        let test_accuracy = if test_set.is_empty() {
            None
        } else {
            Some(accuracy(&model, &test_set.samples)?)
        };
        info!("train accuracy {train_accuracy:.4}, test accuracy {test_accuracy:?}");
        save_checkpoint(&model, &self.run_dir.join(MODEL_FILE))?;
        let mut losses = String::from("batch,loss\n");
        for (i, l) in report.batch_losses.iter().enumerate() {
            let _ = writeln!(losses, "{i},{l}");
        }
        let metrics = TrainMetrics {
            classes: train_set.classes.clone(),
            train_samples: train_set.len(),
            test_samples: test_set.len(),
            parameters: model.parameter_count(),
            train_accuracy,
            test_accuracy,
            final_batch_loss: report.batch_losses.last().copied().unwrap_or(f64::NAN),
        };
        let outputs = vec![
            PathBuf::from(MODEL_FILE),
            self.write_text("train/losses.csv", &losses)?,
            PathBuf::from("train/metrics.toml"),
        ];
        write_toml(&self.run_dir.join("train/metrics.toml"), &metrics)?;
        Ok((vec![], outputs))
    }

    fn extract_traits(&mut self) -> Result<(Vec<PathBuf>, Vec<PathBuf>)> {
        let model = self.model()?;
        let traits = self.config.traits.clone();
        let corpus = self.corpus()?;
        let mut outputs = Vec::new();
        let mut results = Vec::new();
        for (label, class) in corpus.classes.iter().enumerate() {
            let images: Vec<Image> = corpus
                .train_of(label)
                .take(traits.samples)
                .map(|s| s.image.clone())
                .collect();
            if images.len() < traits.samples {
                warn!(
                    "{class}: only {} samples for N_s = {}",
                    images.len(),
                    traits.samples
                );
            }
            let ga = traits.use_ga.then_some(&traits.ga);
            let pca = extract_common_traits(&model, &images, label, traits.retention, ga)?;
            results.push((class.clone(), images.len(), pca));
        }
        for (class, samples, pca) in results {
            outputs.push(self.write_text(&format!("traits/{class}.csv"), &pca.scores_csv())?);
            let rel = format!("traits/{class}.toml");
            write_toml(
                &self.run_dir.join(&rel),
                &TraitsSummary {
                    class,
                    samples,
                    retained: pca.retained(),
                    eigenvalues: pca.eigenvalues.clone(),
                    information_ratios: pca.information_ratios.clone(),
                    total_variance: pca.total_variance,
                    rank: pca.rank,
                },
            )?;
            outputs.push(PathBuf::from(rel));
        }
        Ok((vec![PathBuf::from(MODEL_FILE)], outputs))
    }

    fn extract_semspace(&mut self) -> Result<(Vec<PathBuf>, Vec<PathBuf>)> {
        let model = self.model()?;
        let sem = self.config.semspace.clone();
        let corpus = self.corpus()?;
        let mut spaces = Vec::new();
        for (label, class) in corpus.classes.iter().enumerate() {
            for concept in CONCEPTS {
                let items: Vec<&CorpusItem> = corpus.train_of(label).collect();
                let pairs: Vec<(Image, Image)> = items
                    .par_iter()
                    .map(|s| Ok(s.masked(concept, &sem)?.map(|m| (s.image.clone(), m))))
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .flatten()
                    .take(sem.pairs)
                    .collect();
                if pairs.len() < 2 {
                    return Err(Error::InsufficientSamples {
                        needed: 2,
                        got: pairs.len(),
                    });
                }
                let (unmasked, masked): (Vec<Image>, Vec<Image>) = pairs.into_iter().unzip();
                let mut space = extract_semantic_space(
                    &model,
                    &unmasked,
                    &masked,
                    class,
                    concept,
                    sem.ssn_count,
                )?;
                space.scale = sem.target_scale;
                info!(
                    "{class}/{concept}: SSNs {:?} from {} pairs",
                    space.indices,
                    unmasked.len()
                );
                spaces.push(space);
            }
        }
        let mut outputs = Vec::new();
        for space in &spaces {
            let rel = Self::space_path("spaces", &space.class, &space.concept);
            write_toml(&self.run_dir.join(&rel), space)?;
            outputs.push(PathBuf::from(rel));
        }
        Ok((vec![PathBuf::from(MODEL_FILE)], outputs))
    }

    fn visualize(&mut self) -> Result<(Vec<PathBuf>, Vec<PathBuf>)> {
        let model = self.model()?;
        let (spaces, mut inputs) = self.load_spaces(&model, "spaces")?;
        let vis_cfg = self.config.visualize.clone();
        let results = spaces
            .par_iter()
            .map(|space| {
                let target = build_target_encoding(space, space.scale)?;
                visualize(&model, &target, &vis_cfg)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut outputs = Vec::new();
        for (space, vis) in spaces.iter().zip(&results) {
            let base = format!("vis/{}_{}", space.class, space.concept);
            write_png(
                &self.run_dir.join(format!("{base}.png")),
                &vis.export_image(),
            )?;
            outputs.push(PathBuf::from(format!("{base}.png")));
            let mut csv = String::from("iteration,objective\n");
            for (i, v) in vis.objective.iter().enumerate() {
                let _ = writeln!(csv, "{i},{v}");
            }
            outputs.push(self.write_text(&format!("{base}_objective.csv"), &csv)?);
        }
        inputs.push(PathBuf::from(MODEL_FILE));
        Ok((inputs, outputs))
    }

    fn features(model: &CnnModel, images: &[&Image]) -> Result<Vec<FeatureVector>> {
        images
            .par_iter()
            .map(|img| model.forward_features(img))
            .collect()
    }

    fn fit_stats(&mut self) -> Result<(Vec<PathBuf>, Vec<PathBuf>)> {
        let model = self.model()?;
        let (mut spaces, mut inputs) = self.load_spaces(&model, "spaces")?;
        let cap = self.config.stats.fit_samples;
        let corpus = self.corpus()?;
        let mut per_class = BTreeMap::new();
        for (label, class) in corpus.classes.iter().enumerate() {
            let take = if cap == 0 { usize::MAX } else { cap };
            let images: Vec<&Image> = corpus
                .train_of(label)
                .take(take)
                .map(|s| &s.image)
                .collect();
            per_class.insert(class.clone(), Self::features(&model, &images)?);
        }
        let mut outputs = Vec::new();
        let mut summary = String::from("class,concept,samples,mean,std,min,max,qq_r2\n");
        for space in &mut spaces {
            let values = fit_space(space, &per_class[&space.class])?;
            let fit = space.fitted()?.clone();
            let r2 = qq_r2(&values)?;
            let _ = writeln!(
                summary,
                "{},{},{},{},{},{},{},{}",
                space.class, space.concept, fit.samples, fit.mean, fit.std, fit.min, fit.max, r2
            );
            let rel = Self::space_path("stats", &space.class, &space.concept);
            write_toml(&self.run_dir.join(&rel), &*space)?;
            outputs.push(PathBuf::from(rel));
            let mut csv = String::from("sample,activation\n");
            for (i, v) in values.iter().enumerate() {
                let _ = writeln!(csv, "{i},{v}");
            }
            outputs.push(self.write_text(
                &format!("stats/{}_{}_activations.csv", space.class, space.concept),
                &csv,
            )?);
        }
        outputs.push(self.write_text("stats/summary.csv", &summary)?);
        inputs.push(PathBuf::from(MODEL_FILE));
        Ok((inputs, outputs))
    }

    fn assess(&mut self) -> Result<(Vec<PathBuf>, Vec<PathBuf>)> {
        let model = self.model()?;
        let (spaces, mut inputs) = self.load_spaces(&model, "stats")?;
        let assess = self.config.assess.clone();
        let size = self.config.corpus.size;
        let targets: Vec<(String, Image)> = if assess.images.is_empty() {
            self.corpus()?
                .test
                .iter()
                .take(assess.samples)
                .map(|s| (s.id.clone(), s.image.clone()))
                .collect()
        } else {
            assess
                .images
                .iter()
                .map(|p| {
                    let id = p
                        .file_stem()
                        .map_or_else(|| "image".into(), |s| s.to_string_lossy().into_owned());
                    Ok((id, load_image(p, size, size)?))
                })
                .collect::<Result<_>>()?
        };
        let mut records = Vec::new();
        let mut outputs = Vec::new();
        for (id, image) in &targets {
            let radar = compute_radar(image, &model, &spaces)?;
            let probs = model.predict(image)?;
            let predicted = probs.argmax();
            let indicators = derive_indicators(&radar, predicted)?;
            let explanation = generate_explanation(&indicators);
            outputs.push(self.write_text(&format!("assess/{id}_radar.csv"), &radar_csv(&radar))?);
            outputs.push(self.write_text(&format!("assess/{id}_radar.svg"), &radar_svg(&radar))?);
            info!("{id}: {}", explanation.sentence);
            records.push(AssessRecord {
                id: id.clone(),
                predicted_class: indicators.predicted_class.clone(),
                probability: probs.as_slice()[predicted],
                indicators,
                sentence: explanation.sentence,
            });
        }
        write_json(&self.run_dir.join("assess/explanations.json"), &records)?;
        outputs.push(PathBuf::from("assess/explanations.json"));
        let mut text = String::new();
        for r in &records {
            let _ = writeln!(text, "{}: {}", r.id, r.sentence);
        }
        outputs.push(self.write_text("assess/explanations.txt", &text)?);
        inputs.push(PathBuf::from(MODEL_FILE));
        Ok((inputs, outputs))
    }

    fn search(&mut self) -> Result<(Vec<PathBuf>, Vec<PathBuf>)> {
        let model = self.model()?;
        let search = self.config.search.clone();
        let rel = Self::space_path("stats", &search.class, &search.concept);
        let space: SemanticSpace = read_toml(&self.run_dir.join(&rel))?;
        space.fitted()?;
        let corpus = self.corpus()?;
        let images: Vec<&Image> = corpus.test.iter().map(|s| &s.image).collect();
        let features = Self::features(&model, &images)?;
        let hits = search_samples(&features, &space, search.predicate)?;
        let mut csv = String::from("id,class,probability\n");
        for &i in &hits {
            let item = &corpus.test[i];
            let p = space_probability(&features[i], &space)?;
            let _ = writeln!(csv, "{},{},{p}", item.id, corpus.classes[item.label]);
        }
        info!("{} of {} test samples match", hits.len(), images.len());
        let out = self.write_text(
            &format!("search/{}_{}.csv", search.class, search.concept),
            &csv,
        )?;
        Ok((
            vec![PathBuf::from(MODEL_FILE), PathBuf::from(rel)],
            vec![out],
        ))
    }

    fn detect_adv(&mut self) -> Result<(Vec<PathBuf>, Vec<PathBuf>)> {
        let model = self.model()?;
        let (spaces, mut inputs) = self.load_spaces(&model, "stats")?;
        let adv = self.config.adversarial.clone();
        let corpus = self.corpus()?;
        let items: Vec<&CorpusItem> = corpus.test.iter().take(adv.pairs).collect();
        let n_classes = model.num_classes();
        let rows = items
            .par_iter()
            .enumerate()
            .map(|(i, item)| {
                let attack = AttackConfig {
                    seed: adv.attack.seed.wrapping_add(i as u64),
                    ..adv.attack.clone()
                };
                let target = (item.label + 1) % n_classes;
                let attacked = pgd_attack(&model, &item.image, target, &attack)?;
                let nat_flag = flag_adversarial(
                    &compute_radar(&item.image, &model, &spaces)?,
                    &adv.criterion,
                )?;
                let adv_flag =
                    flag_adversarial(&compute_radar(&attacked, &model, &spaces)?, &adv.criterion)?;
                let nat_pred = model.predict(&item.image)?.argmax();
                let adv_pred = model.predict(&attacked)?.argmax();
                Ok((item.id.clone(), nat_pred, adv_pred, nat_flag, adv_flag))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut csv = String::from(
            "id,natural_prediction,attacked_prediction,natural_flagged,attacked_flagged\n",
        );
        for (id, np, ap, nf, af) in &rows {
            let _ = writeln!(
                csv,
                "{id},{},{},{nf},{af}",
                model.classes()[*np],
                model.classes()[*ap]
            );
        }
        let n = rows.len();
        let natural_flagged = rows.iter().filter(|r| r.3).count();
        let attacked_flagged = rows.iter().filter(|r| r.4).count();
        let summary = AdversarialSummary {
            pairs: n,
            natural_flagged,
            attacked_flagged,
            natural_rate: natural_flagged as f64 / n.max(1) as f64,
            attacked_rate: attacked_flagged as f64 / n.max(1) as f64,
            attack_success: rows.iter().filter(|r| r.1 != r.2).count(),
        };
        info!("flagged natural {natural_flagged}/{n}, attacked {attacked_flagged}/{n}");
        let outputs = vec![
            self.write_text("adversarial/results.csv", &csv)?,
            PathBuf::from("adversarial/summary.toml"),
        ];
        write_toml(&self.run_dir.join("adversarial/summary.toml"), &summary)?;
        inputs.push(PathBuf::from(MODEL_FILE));
        Ok((inputs, outputs))
    }
}

/// Reads a manifest written by [`Pipeline::run`].
pub fn read_manifest(path: &Path) -> Result<Manifest> {
    read_json(path)
}
