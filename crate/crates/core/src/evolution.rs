//! Genetic search for the superpixel combination a classifier likes best.

use std::collections::HashMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{CnnModel, Image};
use crate::superpixel::Segmentation;

/// Superpixel count used for the genetic search.
pub const DEFAULT_GA_SEGMENTS: usize = 40;

/// One bit per superpixel; `true` keeps the superpixel.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Genome {
    pub bits: Vec<bool>,
}

impl Genome {
    pub fn ones(n: usize) -> Self {
        Self {
            bits: vec![true; n],
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            bits: vec![false; n],
        }
    }

    /// Genome whose bits are the low `n` bits of `code`, bit 0 first.
    pub fn from_index(code: u64, n: usize) -> Self {
        Self {
            bits: (0..n).map(|i| code >> i & 1 == 1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    fn random(n: usize, rng: &mut ChaCha8Rng) -> Self {
        Self {
            bits: (0..n).map(|_| rng.random_bool(0.5)).collect(),
        }
    }
}

impl fmt::Display for Genome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub mutation_prob: f64,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 50,
            generations: 50,
            mutation_prob: 0.5,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 || !self.population.is_multiple_of(2) {
            return Err(Error::param(format!(
                "population must be even and >= 2, got {}",
                self.population
            )));
        }
        if self.generations == 0 {
            return Err(Error::param("generations must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.mutation_prob) {
            return Err(Error::param(format!(
                "mutation probability must be in [0, 1], got {}",
                self.mutation_prob
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub elite_fitness: f64,
    pub mean_fitness: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaResult {
    pub best: Genome,
    pub fitness: f64,
    /// Generation 0 is the initial population.
    pub trace: Vec<GenerationStats>,
    /// Distinct genomes evaluated.
    pub evaluations: usize,
}

/// CSV with columns `generation,elite_fitness,mean_fitness`.
pub fn trace_csv(trace: &[GenerationStats]) -> String {
    let mut out = String::from("generation,elite_fitness,mean_fitness\n");
    for s in trace {
        out.push_str(&format!(
            "{},{},{}\n",
            s.generation, s.elite_fitness, s.mean_fitness
        ));
    }
    out
}

fn check_genome(image: &Image, seg: &Segmentation, genome: &Genome) -> Result<()> {
    if genome.len() != seg.segment_count() {
        return Err(Error::shape(format!(
            "genome has {} bits, segmentation has {} segments",
            genome.len(),
            seg.segment_count()
        )));
    }
    let s = image.shape();
    if s.height != seg.height || s.width != seg.width {
        return Err(Error::shape(format!(
            "image is {}x{}, segmentation is {}x{}",
            s.height, s.width, seg.height, seg.width
        )));
    }
    Ok(())
}

/// Paints absent superpixels with `background`; present ones are untouched.
pub fn genome_to_image(
    image: &Image,
    seg: &Segmentation,
    genome: &Genome,
    background: &[f64],
) -> Result<Image> {
    check_genome(image, seg, genome)?;
    if background.len() != image.shape().channels {
        return Err(Error::shape(format!(
            "background has {} channels, image has {}",
            background.len(),
            image.shape().channels
        )));
    }
    let mut out = image.clone();
    for (p, &l) in seg.labels.iter().enumerate() {
        if !genome.bits[l as usize] {
            out.set_pixel(p, background);
        }
    }
    Ok(out)
}

/// Probability of class `c` for the superpixel combination; the background
/// is the model's standardization mean (the corpus mean color).
pub fn fitness(
    model: &CnnModel,
    image: &Image,
    seg: &Segmentation,
    genome: &Genome,
    c: usize,
) -> Result<f64> {
    if c >= model.num_classes() {
        return Err(Error::param(format!("class {c} out of range")));
    }
    let combined = genome_to_image(image, seg, genome, &model.standardization().mean)?;
    Ok(model.predict(&combined)?.0[c])
}

pub fn evolve(
    model: &CnnModel,
    image: &Image,
    seg: &Segmentation,
    c: usize,
    config: &GaConfig,
) -> Result<GaResult> {
    if c >= model.num_classes() {
        return Err(Error::param(format!("class {c} out of range")));
    }
    check_genome(image, seg, &Genome::ones(seg.segment_count()))?;
    evolve_with(seg.segment_count(), config, |g| {
        fitness(model, image, seg, g, c)
    })
}

/// The genetic search over any pure fitness function of `n_genes` bits.
///
/// Each generation: single-point crossover on `N_p / 2` random disjoint
/// pairs (children replace parents), then with probability `p_mut` per genome
/// each bit flips with probability `1 / n_genes`; the population is sorted by
/// fitness, the top half survives and the bottom half is replaced by fresh
/// random genomes. The best genome seen so far is kept in the population.
pub fn evolve_with<F>(n_genes: usize, config: &GaConfig, fitness_fn: F) -> Result<GaResult>
where
    F: Fn(&Genome) -> Result<f64> + Sync,
{
    config.validate()?;
    if n_genes == 0 {
        return Err(Error::param("need at least one gene"));
    }
    let np = config.population;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut cache: HashMap<Genome, f64> = HashMap::new();
    let mut evaluate = |pop: &[Genome]| -> Result<Vec<f64>> {
        let mut fresh: Vec<&Genome> = Vec::new();
        for g in pop {
            if !cache.contains_key(g) && !fresh.contains(&g) {
                fresh.push(g);
            }
        }
        let scores: Vec<Result<f64>> = fresh.par_iter().map(|g| fitness_fn(g)).collect();
        for (g, s) in fresh.into_iter().zip(scores) {
            let s = s?;
            if !s.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "non-finite fitness for genome {g}"
                )));
            }
            cache.insert(g.clone(), s);
        }
        Ok(pop.iter().map(|g| cache[g]).collect())
    };

    let mut pop: Vec<Genome> = (0..np).map(|_| Genome::random(n_genes, &mut rng)).collect();
    let mut fit = evaluate(&pop)?;
    let first = argmax(&fit);
    let mut elite = (pop[first].clone(), fit[first]);
    let mut trace = vec![GenerationStats {
        generation: 0,
        elite_fitness: elite.1,
        mean_fitness: mean(&fit),
    }];

    let mut order: Vec<usize> = (0..np).collect();
    for generation in 1..=config.generations {
        order.shuffle(&mut rng);
        for pair in order.chunks_exact(2) {
            let cut = if n_genes > 1 {
                rng.random_range(1..n_genes)
            } else {
                0
            };
            let (a, b) = (pair[0], pair[1]);
            for i in cut..n_genes {
                let tmp = pop[a].bits[i];
                pop[a].bits[i] = pop[b].bits[i];
                pop[b].bits[i] = tmp;
            }
        }
        let flip = 1.0 / n_genes as f64;
        for g in pop.iter_mut() {
            if rng.random_bool(config.mutation_prob) {
                for b in g.bits.iter_mut() {
                    if rng.random_bool(flip) {
                        *b = !*b;
                    }
                }
            }
        }

        fit = evaluate(&pop)?;
        let mut ranked: Vec<(Genome, f64)> = pop.drain(..).zip(fit.iter().copied()).collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
        ranked.truncate(np / 2);
        if ranked[0].1 > elite.1 {
            elite = ranked[0].clone();
        } else if !ranked.iter().any(|(g, _)| *g == elite.0) {
            *ranked.last_mut().expect("population >= 2") = elite.clone();
            ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
        }
        pop.extend(ranked.into_iter().map(|(g, _)| g));
        pop.extend((0..np / 2).map(|_| Genome::random(n_genes, &mut rng)));
        fit = evaluate(&pop)?;
        let best = argmax(&fit);
        if fit[best] > elite.1 {
            elite = (pop[best].clone(), fit[best]);
        }
        trace.push(GenerationStats {
            generation,
            elite_fitness: elite.1,
            mean_fitness: mean(&fit),
        });
    }
    Ok(GaResult {
        best: elite.0,
        fitness: elite.1,
        trace,
        evaluations: cache.len(),
    })
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::TensorShape;
    use crate::superpixel::slic_segment;

    fn weights_fitness(w: &[f64]) -> impl Fn(&Genome) -> Result<f64> + Sync + '_ {
        move |g| {
            Ok(g.bits
                .iter()
                .zip(w)
                .map(|(&b, &x)| if b { x } else { 0.0 })
                .sum())
        }
    }

    #[test]
    fn config_validation() {
        for bad in [
            GaConfig {
                population: 3,
                ..Default::default()
            },
            GaConfig {
                population: 0,
                ..Default::default()
            },
            GaConfig {
                generations: 0,
                ..Default::default()
            },
            GaConfig {
                mutation_prob: 1.5,
                ..Default::default()
            },
        ] {
            assert!(matches!(bad.validate(), Err(Error::InvalidParam(_))));
        }
    }

    #[test]
    fn finds_linear_optimum_and_trace_is_monotone() {
        let w = [
            0.3, -0.2, 0.5, -0.1, 0.05, 0.4, -0.7, 0.2, 0.1, -0.05, 0.33, -0.4,
        ];
        let r = evolve_with(w.len(), &GaConfig::default(), weights_fitness(&w)).unwrap();
        let optimum: f64 = w.iter().filter(|&&x| x > 0.0).sum();
        assert!((r.fitness - optimum).abs() < 1e-12);
        assert_eq!(r.trace.len(), 51);
        assert!(r
            .trace
            .windows(2)
            .all(|p| p[1].elite_fitness >= p[0].elite_fitness));
    }

    #[test]
    fn single_gene_picks_better_value() {
        let r = evolve_with(1, &GaConfig::default(), |g: &Genome| {
            Ok(if g.bits[0] { 0.2 } else { 0.7 })
        })
        .unwrap();
        assert_eq!(r.best, Genome::zeros(1));
        assert_eq!(r.fitness, 0.7);
    }

    #[test]
    fn seeded_runs_are_identical() {
        let w: Vec<f64> = (0..20).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let cfg = GaConfig {
            seed: 9,
            generations: 10,
            ..Default::default()
        };
        let a = evolve_with(w.len(), &cfg, weights_fitness(&w)).unwrap();
        let b = evolve_with(w.len(), &cfg, weights_fitness(&w)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn genome_image_extremes() {
        let shape = TensorShape::rgb(12, 12).unwrap();
        let data = (0..shape.len()).map(|i| (i % 17) as f64 / 17.0).collect();
        let img = Image::new(shape, data).unwrap();
        let seg = slic_segment(&img, 6, 10.0, 10).unwrap();
        let n = seg.segment_count();
        let bg = [0.1, 0.2, 0.3];
        assert_eq!(
            genome_to_image(&img, &seg, &Genome::ones(n), &bg).unwrap(),
            img
        );
        let blank = genome_to_image(&img, &seg, &Genome::zeros(n), &bg).unwrap();
        assert_eq!(blank, Image::solid(shape, &bg).unwrap());
        let mut one = Genome::zeros(n);
        one.bits[2] = true;
        let out = genome_to_image(&img, &seg, &one, &bg).unwrap();
        for (p, &l) in seg.labels.iter().enumerate() {
            let expect = if l == 2 { img.pixel(p) } else { bg.to_vec() };
            assert_eq!(out.pixel(p), expect);
        }
        assert!(matches!(
            genome_to_image(&img, &seg, &Genome::ones(n + 1), &bg),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn model_fitness_contract() {
        let model = crate::nn::small_model(12, 12, 1);
        let shape = model.input_shape();
        let data = (0..shape.len()).map(|i| (i % 11) as f64 / 11.0).collect();
        let img = Image::new(shape, data).unwrap();
        let seg = slic_segment(&img, 4, 10.0, 10).unwrap();
        let n = seg.segment_count();
        let full = fitness(&model, &img, &seg, &Genome::ones(n), 1).unwrap();
        assert_eq!(full, model.predict(&img).unwrap().0[1]);
        let g = Genome::from_index(0b0101, n);
        let a = fitness(&model, &img, &seg, &g, 0).unwrap();
        assert_eq!(a, fitness(&model, &img, &seg, &g, 0).unwrap());
        assert!((0.0..=1.0).contains(&a));
        assert!(matches!(
            fitness(&model, &img, &seg, &g, 2),
            Err(Error::InvalidParam(_))
        ));
    }

    #[test]
    fn csv_header() {
        let csv = trace_csv(&[GenerationStats {
            generation: 0,
            elite_fitness: 0.5,
            mean_fitness: 0.25,
        }]);
        assert_eq!(csv, "generation,elite_fitness,mean_fitness\n0,0.5,0.25\n");
    }
}
