//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the report lines always show up.
//! Criteria 3, 7, 8 and 10 share one desk model trained through the pipeline.

mod oracle;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use sxai::assessment::{
    assessment_band, fragment_cell, generate_explanation, position_band, semanteme_band, Band,
    Indicators, Position, Semanteme,
};
use sxai::config::PipelineConfig;
use sxai::corpus::Corpus;
use sxai::evolution::{evolve_with, fitness, GaConfig, Genome};
use sxai::io::read_toml;
use sxai::nn::{load_checkpoint, Architecture, CnnModel, Image, Standardization, TensorShape};
use sxai::pca::{feature_matrix, row_centered_pca, spread, DataMatrix, Retention};
use sxai::pipeline::{AdversarialSummary, Command, Pipeline, TrainMetrics, MODEL_FILE};
use sxai::semspace::{discover_ssns, tv_regularizer, SemanticSpace};
use sxai::semstats::{
    fit_activation_distribution, mann_whitney_less, qq_r2, semantic_probability,
    weighted_activation, FittedActivation, Radar, CONCEPTS,
};
use sxai::superpixel::Segmentation;
use sxai::synth::{generate_synthetic_corpus, CorpusSpec};

// Pinned tolerances and budgets.
const C1_EIG_REL: f64 = 1e-8;
const C1_COS: f64 = 1.0 - 1e-8;
const C1_BUDGET: Duration = Duration::from_secs(10);
const C2_REL: f64 = 1e-4;
const C2_STEP: f64 = 1e-5;
const C2_CASES: usize = 25;
const C2_BUDGET: Duration = Duration::from_secs(30);
const C3_RUNS: u64 = 20;
const C3_MIN_OPTIMAL: usize = 18;
const C3_BUDGET: Duration = Duration::from_secs(120);
const C4_BUDGET: Duration = Duration::from_secs(1);
const C5_EXACT: f64 = 1e-12;
const C7_MIN_ACCURACY: f64 = 0.9;
const C7_TRAIN_BUDGET: Duration = Duration::from_secs(300);
const C7_ALPHA: f64 = 0.01;
const C9_R2: f64 = 0.97;
const C11_BETA: f64 = 2.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Desk model, corpus and fitted spaces produced by the pipeline commands
/// `train`, `extract-semspace` and `fit-stats` with the default config.
struct Desk {
    run: PathBuf,
    _dir: tempfile::TempDir,
    config: PipelineConfig,
    model: CnnModel,
    corpus: Corpus,
    spaces: BTreeMap<(String, String), SemanticSpace>,
    metrics: TrainMetrics,
    train_time: Duration,
}

fn desk() -> &'static Desk {
    static DESK: OnceLock<Desk> = OnceLock::new();
    DESK.get_or_init(|| {
        let dir = tempfile::tempdir().expect("temp dir");
        let config = PipelineConfig::default();
        let mut pipeline =
            Pipeline::new(config.clone(), dir.path().to_path_buf()).expect("pipeline");
        let t = Instant::now();
        pipeline.run(Command::Train).expect("train");
        let train_time = t.elapsed();
        pipeline
            .run(Command::ExtractSemspace)
            .expect("extract-semspace");
        pipeline.run(Command::FitStats).expect("fit-stats");
        let run = dir.path().to_path_buf();
        let model = load_checkpoint(&run.join(MODEL_FILE)).expect("checkpoint");
        let mut spaces = BTreeMap::new();
        for class in model.classes() {
            for concept in CONCEPTS {
                let s: SemanticSpace =
                    read_toml(&run.join(format!("stats/{class}_{concept}.toml"))).expect("space");
                spaces.insert((class.clone(), concept.to_string()), s);
            }
        }
        Desk {
            metrics: read_toml(&run.join("train/metrics.toml")).expect("metrics"),
            corpus: Corpus::load(&config.corpus).expect("corpus"),
            run,
            _dir: dir,
            config,
            model,
            spaces,
            train_time,
        }
    })
}

fn random_matrix(rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = rng.random_range(2..=40);
    let p = rng.random_range(2..=200);
    // a few dominant directions plus noise, so the spectrum is not flat
    let k = rng.random_range(1..=4);
    let dirs: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..p).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    (0..n)
        .map(|_| {
            let coef: Vec<f64> = (0..k)
                .map(|j| rng.random_range(-3.0..3.0) / (j + 1) as f64)
                .collect();
            (0..p)
                .map(|c| {
                    let signal: f64 = dirs.iter().zip(&coef).map(|(d, a)| a * d[c]).sum();
                    signal + 0.1 * rng.random_range(-1.0..1.0)
                })
                .collect()
        })
        .collect()
}

fn c1_pca_oracle() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut worst_eig, mut worst_cos, mut bad) = (0.0f64, 1.0f64, 0usize);
    for _ in 0..50 {
        let rows = random_matrix(&mut rng);
        let x = DataMatrix::from_rows(&rows).unwrap();
        let pca = row_centered_pca(&x, Retention::Variance(0.85)).unwrap();
        let (mu, vecs) = oracle::jacobi_eigen(&oracle::row_centered_covariance(&rows));
        let mut ok = true;
        for (i, &m) in mu.iter().enumerate() {
            let l = pca.all_eigenvalues[i];
            let err = if m > 1e-10 * mu[0] {
                (l - m).abs() / m
            } else {
                (l - m.max(0.0)).abs() / mu[0]
            };
            worst_eig = worst_eig.max(err);
            ok &= err <= C1_EIG_REL;
        }
        // oracle PC i is Xᵀ v_i on the uncentered rows; comparable only where
        // the eigenvalue is isolated
        let p = rows[0].len();
        for (i, comp) in pca.components.iter().enumerate() {
            let above = if i > 0 {
                mu[i - 1] - mu[i]
            } else {
                f64::INFINITY
            };
            let below = mu.get(i + 1).map_or(f64::INFINITY, |next| mu[i] - next);
            let gap = above.min(below);
            if gap < 1e-6 * mu[0] {
                continue;
            }
            let reference: Vec<f64> = (0..p)
                .map(|c| rows.iter().zip(&vecs[i]).map(|(r, v)| r[c] * v).sum())
                .collect();
            let cos = oracle::cosine(comp, &reference).abs();
            worst_cos = worst_cos.min(cos);
            ok &= cos > C1_COS;
        }
        if !ok {
            bad += 1;
        }
    }
    let elapsed = t.elapsed();
    outcome(
        bad == 0 && elapsed < C1_BUDGET,
        format!(
            "50 matrices, {bad} mismatched, max eigenvalue rel err {worst_eig:.1e}, min |cos| 1-{:.1e}, {:.2}s",
            1.0 - worst_cos,
            elapsed.as_secs_f64()
        ),
    )
}

fn c2_gradients() -> Outcome {
    let t = Instant::now();
    let shape = TensorShape::rgb(8, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (mut worst_obj, mut worst_tv) = (0.0f64, 0.0f64);
    for case in 0..C2_CASES {
        let model = CnnModel::new(
            &Architecture::desk(2),
            shape,
            vec!["a".into(), "b".into()],
            Standardization::identity(3),
            case as u64,
        )
        .unwrap();
        let z: Vec<f64> = (0..shape.len())
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let target: Vec<f64> = (0..model.feature_width())
            .map(|_| rng.random_range(0.0..2.0))
            .collect();
        let lambda = rng.random_range(0.01..1.0);
        let zi = Image::new(shape, z.clone()).unwrap();

        let (_, g) = model.objective_gradient(&zi, &target, lambda, 2.0).unwrap();
        let fd = oracle::central_differences(&z, C2_STEP, |v| {
            model
                .objective_gradient(
                    &Image::new(shape, v.to_vec()).unwrap(),
                    &target,
                    lambda,
                    2.0,
                )
                .unwrap()
                .0
        });
        worst_obj = worst_obj.max(oracle::max_relative_error(g.data(), &fd));

        let (_, g) = tv_regularizer(&zi, 2.0).unwrap();
        let fd = oracle::central_differences(&z, C2_STEP, |v| {
            tv_regularizer(&Image::new(shape, v.to_vec()).unwrap(), 2.0)
                .unwrap()
                .0
        });
        worst_tv = worst_tv.max(oracle::max_relative_error(g.data(), &fd));
    }
    let elapsed = t.elapsed();
    outcome(
        worst_obj < C2_REL && worst_tv < C2_REL && elapsed < C2_BUDGET,
        format!(
            "{C2_CASES} cases each, max rel err objective {worst_obj:.1e}, tv {worst_tv:.1e}, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn c3_ga_vs_exhaustive() -> Outcome {
    let d = desk();
    let t = Instant::now();
    // SLIC's seed grid cannot produce exactly 10 cells on a square image, so
    // the search space is a fixed 2x5 block partition of each test image
    let items: Vec<_> = d
        .corpus
        .test
        .iter()
        .take(C3_RUNS as usize)
        .map(|item| {
            let s = item.image.shape();
            let labels = (0..s.height * s.width)
                .map(|p| ((p / s.width) * 2 / s.height * 5 + (p % s.width) * 5 / s.width) as u32)
                .collect();
            (
                item,
                Segmentation::from_labels(&item.image, labels).unwrap(),
            )
        })
        .collect();
    let (mut optimal, mut monotone) = (0usize, 0usize);
    for (seed, (item, seg)) in items.iter().enumerate() {
        let table: Vec<f64> = (0..1u64 << 10)
            .map(|code| {
                fitness(
                    &d.model,
                    &item.image,
                    seg,
                    &Genome::from_index(code, 10),
                    item.label,
                )
                .unwrap()
            })
            .collect();
        let best = table.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let cfg = GaConfig {
            population: 50,
            generations: 50,
            seed: seed as u64,
            ..GaConfig::default()
        };
        let result = evolve_with(10, &cfg, |g| {
            let code = g
                .bits
                .iter()
                .enumerate()
                .fold(0usize, |acc, (i, &b)| acc | (b as usize) << i);
            Ok(table[code])
        })
        .unwrap();
        if result.fitness == best {
            optimal += 1;
        }
        if result
            .trace
            .windows(2)
            .all(|w| w[1].elite_fitness >= w[0].elite_fitness)
        {
            monotone += 1;
        }
    }
    let elapsed = t.elapsed();
    outcome(
        optimal >= C3_MIN_OPTIMAL && monotone == C3_RUNS as usize && elapsed < C3_BUDGET,
        format!(
            "elite optimal in {optimal}/{C3_RUNS}, trace non-decreasing in {monotone}/{C3_RUNS}, {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn c4_planted_ssns() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut exact = 0;
    for _ in 0..100 {
        let p = 64;
        let pu: Vec<f64> = (0..p).map(|_| rng.random_range(0.5..1.5)).collect();
        let mut pm: Vec<f64> = pu
            .iter()
            .map(|v| v + rng.random_range(-0.01..0.01))
            .collect();
        let mut planted = Vec::new();
        while planted.len() < 5 {
            let i = rng.random_range(0..p);
            if !planted.contains(&i) {
                planted.push(i);
            }
        }
        for (rank, &i) in planted.iter().enumerate() {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            pm[i] = pu[i] + sign * (0.5 - 0.1 * rank as f64);
        }
        // the masked PC may come out of the eigensolver with either sign
        if rng.random_bool(0.5) {
            pm.iter_mut().for_each(|v| *v = -*v);
        }
        if discover_ssns(&pu, &pm, 5).unwrap().indices == planted {
            exact += 1;
        }
    }
    let elapsed = t.elapsed();
    outcome(
        exact == 100 && elapsed < C4_BUDGET,
        format!(
            "exact top-5 in order {exact}/100, {:.3}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn c5_semantic_probability() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut fits = Vec::new();
    for n in [30, 100, 300, 1000, 3000] {
        for _ in 0..5 {
            let mu: f64 = rng.random_range(-5.0..5.0);
            let sd: f64 = rng.random_range(0.01..3.0);
            let skew: f64 = rng.random_range(0.0..1.0);
            let v: Vec<f64> = (0..n)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    mu + sd * (z + skew * z * z)
                })
                .collect();
            fits.push(fit_activation_distribution(&v).unwrap());
        }
    }
    let (mut endpoint_err, mut non_monotone) = (0.0f64, 0usize);
    for f in &fits {
        endpoint_err = endpoint_err
            .max(semantic_probability(f.min, f).abs())
            .max((semantic_probability(f.max, f) - 1.0).abs());
        let grid: Vec<f64> = (0..1000)
            .map(|i| semantic_probability(f.min + (f.max - f.min) * i as f64 / 999.0, f))
            .collect();
        if !grid.windows(2).all(|w| w[1] > w[0]) {
            non_monotone += 1;
        }
    }
    let mut mid_err = 0.0f64;
    for _ in 0..25 {
        let mean = rng.random_range(-5.0..5.0);
        let half = rng.random_range(0.1..5.0);
        let f = FittedActivation {
            mean,
            std: rng.random_range(0.05..3.0),
            min: mean - half,
            max: mean + half,
            samples: 100,
        };
        mid_err = mid_err.max((semantic_probability(mean, &f) - 0.5).abs());
    }
    outcome(
        endpoint_err <= C5_EXACT && non_monotone == 0 && mid_err <= C5_EXACT,
        format!(
            "{} fits, endpoint err {endpoint_err:.1e}, non-monotone {non_monotone}, symmetric midpoint err {mid_err:.1e}",
            fits.len()
        ),
    )
}

fn semanteme_word(s: Semanteme) -> &'static str {
    s.word()
}

fn c6_rule_engine() -> Outcome {
    let deltas = [
        -0.5, 0.0, 0.1, 0.2, 0.2000001, 0.27, 0.35, 0.3500001, 0.42, 0.5, 0.5000001, 0.7, 1.0,
    ];
    let p_maxes = [0.0, 0.1, 0.2, 0.2000001, 0.3, 0.5, 0.5000001, 0.6, 0.9, 1.1];
    let mut checks = 0usize;
    let mut mismatches = Vec::new();
    let mut check = |ok: bool, what: String| {
        checks += 1;
        if !ok {
            mismatches.push(what);
        }
    };
    let band_name = |b: Band| match b {
        Band::Might => "might",
        Band::Probably => "probably",
        Band::Sure => "sure",
    };
    for &d in &deltas {
        check(
            band_name(assessment_band(d)) == oracle::ASSESSMENT[oracle::column(d)],
            format!("assessment {d}"),
        );
        let s = semanteme_band(d);
        check(
            semanteme_word(s)
                == ["confusing", "perhaps", "something like", "obviously"][oracle::column(d)],
            format!("semanteme {d}"),
        );
    }
    let to_cell = |c: Option<(Position, Semanteme)>| match c {
        None => oracle::Cell::None,
        Some((Position::Vivid, s)) => oracle::Cell::Vivid(s.word()),
        Some((Position::Be, s)) => oracle::Cell::Be(s.word()),
    };
    for &pm in &p_maxes {
        let row = if pm > 0.5 {
            Some(Position::Vivid)
        } else if pm > 0.2 {
            Some(Position::Be)
        } else {
            None
        };
        check(position_band(pm) == row, format!("position {pm}"));
        for &d in &deltas {
            check(
                to_cell(fragment_cell(pm, d)) == oracle::table_cell(pm, d),
                format!("cell p_max={pm} dp={d}"),
            );
        }
    }
    // whole explanations over the grid
    for &pm in &p_maxes {
        for &e in &deltas {
            for &n in &deltas {
                for &l in &deltas {
                    let dp = BTreeMap::from([
                        ("eyes".to_string(), e),
                        ("nose".to_string(), n),
                        ("legs".to_string(), l),
                    ]);
                    let dmax = e.max(n).max(l);
                    let ind = Indicators {
                        predicted: 0,
                        predicted_class: "cat".into(),
                        p_max: pm,
                        s_max: "eyes".into(),
                        delta_p: dp,
                        delta_max_p: dmax,
                    };
                    let ex = generate_explanation(&ind);
                    let label = format!("explanation p_max={pm} eyes={e} nose={n} legs={l}");
                    let expected_band = oracle::ASSESSMENT[oracle::column(dmax)];
                    if expected_band == "might" {
                        check(
                            ex.fragments.is_empty()
                                && ex.sentence == "It might be a cat, but I am not sure.",
                            label,
                        );
                        continue;
                    }
                    let mut order: Vec<(&str, f64)> = vec![("eyes", e), ("nose", n), ("legs", l)];
                    order.sort_by(|a, b| b.1.total_cmp(&a.1));
                    let expected: Vec<(String, oracle::Cell)> = order
                        .iter()
                        .map(|&(c, d)| (c.to_string(), oracle::table_cell(pm, d)))
                        .filter(|(_, cell)| *cell != oracle::Cell::None)
                        .collect();
                    let got: Vec<(String, oracle::Cell)> = ex
                        .fragments
                        .iter()
                        .map(|f| (f.concept.clone(), to_cell(Some((f.position, f.semanteme)))))
                        .collect();
                    let opening = if expected_band == "sure" {
                        "I am sure it is a cat"
                    } else {
                        "It is probably a cat"
                    };
                    let words_present = expected.iter().all(|(c, cell)| match cell {
                        oracle::Cell::Vivid("confusing") => {
                            ex.sentence.contains("confusing") && ex.sentence.contains(c.as_str())
                        }
                        oracle::Cell::Vivid(w) | oracle::Cell::Be(w) => {
                            ex.sentence.contains(&format!("cat's {c}")) && ex.sentence.contains(w)
                        }
                        oracle::Cell::None => true,
                    });
                    check(
                        band_name(ex.band) == expected_band
                            && got == expected
                            && ex.sentence.starts_with(opening)
                            && words_present,
                        label,
                    );
                }
            }
        }
    }
    outcome(
        mismatches.is_empty(),
        format!(
            "{checks} grid checks against the rule table, {} mismatches{}",
            mismatches.len(),
            mismatches
                .first()
                .map(|m| format!(" (first: {m})"))
                .unwrap_or_default()
        ),
    )
}

fn c7_end_to_end() -> Outcome {
    let d = desk();
    let acc = d.metrics.test_accuracy.unwrap_or(0.0);
    let space = &d.spaces[&("cat".to_string(), "eyes".to_string())];
    let cat = d.corpus.class_index("cat").unwrap();
    let mut unmasked = Vec::new();
    let mut masked = Vec::new();
    for item in d.corpus.test.iter().filter(|s| s.label == cat) {
        let Some(m) = item.masked("eyes", &d.config.semspace).unwrap() else {
            continue;
        };
        unmasked.push(
            weighted_activation(&d.model.forward_features(&item.image).unwrap(), space).unwrap(),
        );
        masked.push(weighted_activation(&d.model.forward_features(&m).unwrap(), space).unwrap());
    }
    let mw = mann_whitney_less(&masked, &unmasked).unwrap();
    let pairs = space.source.as_ref().map_or(0, |s| s.unmasked_samples);
    outcome(
        acc >= C7_MIN_ACCURACY && d.train_time < C7_TRAIN_BUDGET && pairs == 100 && mw.p_value < C7_ALPHA,
        format!(
            "test accuracy {:.3} after {:.1}s training, cat/eyes space from {pairs} pairs, masked < unmasked on {} test cats p={:.1e}",
            acc,
            d.train_time.as_secs_f64(),
            masked.len(),
            mw.p_value
        ),
    )
}

fn c8_spread() -> Outcome {
    let d = desk();
    let cat = d.corpus.class_index("cat").unwrap();
    let (mut small, mut large) = (0.0, 0.0);
    for repeat in 0..3u64 {
        let corpus = generate_synthetic_corpus(&CorpusSpec {
            per_class: 5 * 200,
            size: d.config.corpus.size,
            seed: 8000 + repeat,
        })
        .unwrap();
        let images: Vec<Image> = corpus
            .samples
            .into_iter()
            .filter(|s| s.label == cat)
            .map(|s| s.image)
            .collect();
        let features = feature_matrix(&d.model, &images).unwrap();
        let spread_at = |ns: usize| {
            let pcs: Vec<Vec<f64>> = (0..5)
                .map(|e| {
                    let rows: Vec<Vec<f64>> = (e * ns..(e + 1) * ns)
                        .map(|i| features.row(i).to_vec())
                        .collect();
                    let pca = row_centered_pca(
                        &DataMatrix::from_rows(&rows).unwrap(),
                        Retention::Fixed(1),
                    )
                    .unwrap();
                    let mut u = pca.unit_component(0);
                    // align signs across experiments
                    if u.iter().sum::<f64>() < 0.0 {
                        u.iter_mut().for_each(|v| *v = -*v);
                    }
                    u
                })
                .collect();
            spread(&pcs).unwrap().spread
        };
        small += spread_at(25) / 3.0;
        large += spread_at(200) / 3.0;
    }
    outcome(
        large < small,
        format!("mean spread over 3 repeats: {small:.3}% at N_s=25, {large:.3}% at N_s=200"),
    )
}

fn c9_qq() -> Outcome {
    let mut failures = 0;
    let (mut min_normal, mut max_uniform) = (1.0f64, 0.0f64);
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal: Vec<f64> = (0..10_000)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let uniform: Vec<f64> = (0..10_000).map(|_| rng.random_range(0.0..1.0)).collect();
        let (rn, ru) = (qq_r2(&normal).unwrap(), qq_r2(&uniform).unwrap());
        min_normal = min_normal.min(rn);
        max_uniform = max_uniform.max(ru);
        if !(rn > C9_R2 && ru < rn) {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!("10 paired seeds, min normal r2 {min_normal:.5}, max uniform r2 {max_uniform:.5}, {failures} failures"),
    )
}

fn c10_adversarial() -> Outcome {
    let d = desk();
    let mut pipeline = Pipeline::new(d.config.clone(), d.run.clone()).unwrap();
    pipeline.run(Command::DetectAdv).unwrap();
    let s: AdversarialSummary = read_toml(&d.run.join("adversarial/summary.toml")).unwrap();

    let criterion = &d.config.adversarial.criterion;
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut violations = 0;
    for _ in 0..1000 {
        let values: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..1.2)).collect();
        let mut raised = values.clone();
        let i = rng.random_range(0..6);
        raised[i] += rng.random_range(0.0..0.5);
        let before = Radar::from_values(["cat", "dog"], &values).unwrap();
        let after = Radar::from_values(["cat", "dog"], &raised).unwrap();
        let (fb, fa) = (
            sxai::semstats::flag_adversarial(&before, criterion).unwrap(),
            sxai::semstats::flag_adversarial(&after, criterion).unwrap(),
        );
        if fb && !fa {
            violations += 1;
        }
    }
    let eps = d.config.adversarial.attack.epsilon;
    outcome(
        s.pairs == 50 && eps == 0.05 && s.attacked_rate > s.natural_rate && violations == 0,
        format!(
            "eps {eps}: flagged natural {}/{}, attacked {}/{} (attack changed {} predictions), {violations} monotonicity violations in 1000 radars",
            s.natural_flagged, s.pairs, s.attacked_flagged, s.pairs, s.attack_success
        ),
    )
}

fn c11_tv_example() -> Outcome {
    let img = Image::new(TensorShape::new(1, 2, 2).unwrap(), vec![0.0, 1.0, 0.0, 1.0]).unwrap();
    let (r, _) = tv_regularizer(&img, C11_BETA).unwrap();
    outcome(r == 2.0, format!("R([[0,1],[0,1]], beta=2) = {r}"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        ("pca matches an independent eigensolver", c1_pca_oracle),
        ("analytic gradients match finite differences", c2_gradients),
        (
            "genetic search finds the exhaustive optimum",
            c3_ga_vs_exhaustive,
        ),
        ("planted semantic neurons are recovered", c4_planted_ssns),
        (
            "semantic probability endpoints and monotonicity",
            c5_semantic_probability,
        ),
        (
            "rule engine reproduces the explanation table",
            c6_rule_engine,
        ),
        (
            "end to end: masking lowers the eye activation",
            c7_end_to_end,
        ),
        ("trait spread shrinks with more samples", c8_spread),
        ("normality diagnostic separates normal from uniform", c9_qq),
        ("attacked samples are flagged more often", c10_adversarial),
        ("total variation worked example", c11_tv_example),
    ];
    // `cargo test --test acceptance -- C3 C7` runs a subset
    let only: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let (mut ran, mut failed) = (0, 0);
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !only.is_empty()
            && !only
                .iter()
                .any(|o| o.eq_ignore_ascii_case(&format!("C{}", i + 1)))
        {
            continue;
        }
        ran += 1;
        let t = Instant::now();
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "[{}] C{:<2} {name}: {} ({:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {}/{ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
