use std::fs;

use sxai::config::PipelineConfig;
use sxai::io::{read_toml, write_toml};
use sxai::nn::{
    checkpoint_bytes, load_checkpoint, save_checkpoint, train, Architecture, TrainConfig,
};
use sxai::pca::{row_centered_pca, DataMatrix, PcaResult, Retention};
use sxai::semspace::{discover_ssns, SemanticSpace};
use sxai::semstats::{fit_activation_distribution, FittedActivation};
use sxai::synth::{generate_synthetic_corpus, CorpusSpec};
use sxai::Error;

fn tiny_training() -> (sxai::nn::CnnModel, sxai::nn::TrainReport) {
    let corpus = generate_synthetic_corpus(&CorpusSpec {
        per_class: 8,
        size: 32,
        seed: 4,
    })
    .unwrap();
    let cfg = TrainConfig {
        epochs: 1,
        batch_size: 4,
        ..TrainConfig::default()
    };
    train(&corpus.dataset(), &Architecture::desk(2), &cfg).unwrap()
}

#[test]
fn training_is_bit_reproducible_and_checkpoint_roundtrips() {
    let (a, ra) = tiny_training();
    let (b, rb) = tiny_training();
    assert_eq!(checkpoint_bytes(&a), checkpoint_bytes(&b));
    assert_eq!(
        ra.batch_losses
            .iter()
            .map(|v| v.to_bits())
            .collect::<Vec<_>>(),
        rb.batch_losses
            .iter()
            .map(|v| v.to_bits())
            .collect::<Vec<_>>()
    );

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    save_checkpoint(&a, &path).unwrap();
    let loaded = load_checkpoint(&path).unwrap();
    assert_eq!(checkpoint_bytes(&loaded), checkpoint_bytes(&a));
    let path2 = dir.path().join("again.ckpt");
    save_checkpoint(&loaded, &path2).unwrap();
    assert_eq!(fs::read(&path).unwrap(), fs::read(&path2).unwrap());

    let bytes = fs::read(&path).unwrap();
    for cut in [bytes.len() - 1, bytes.len() / 2, 10] {
        let t = dir.path().join(format!("cut{cut}.ckpt"));
        fs::write(&t, &bytes[..cut]).unwrap();
        assert!(
            matches!(load_checkpoint(&t), Err(Error::Io { .. })),
            "cut at {cut}"
        );
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + a.abs())
}

#[test]
fn structured_text_roundtrips() {
    let dir = tempfile::tempdir().unwrap();

    let pu: Vec<f64> = (0..16).map(|i| ((i * 7) % 11) as f64 / 3.0 + 0.1).collect();
    let pm: Vec<f64> = (0..16).map(|i| ((i * 5) % 13) as f64 / 7.0 + 0.1).collect();
    let mut space =
        SemanticSpace::new("eyes", "cat", 16, discover_ssns(&pu, &pm, 5).unwrap()).unwrap();
    let values: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin() / 3.0).collect();
    space.fit = Some(fit_activation_distribution(&values).unwrap());
    let path = dir.path().join("space.toml");
    write_toml(&path, &space).unwrap();
    let back: SemanticSpace = read_toml(&path).unwrap();
    assert_eq!(back.indices, space.indices);
    assert!(back
        .weights
        .iter()
        .zip(&space.weights)
        .all(|(a, b)| close(*a, *b)));
    let (f, g): (&FittedActivation, &FittedActivation) =
        (back.fit.as_ref().unwrap(), space.fit.as_ref().unwrap());
    assert!(
        close(f.mean, g.mean) && close(f.std, g.std) && close(f.min, g.min) && close(f.max, g.max)
    );

    let x = DataMatrix::new(4, 6, (0..24).map(|i| ((i * i) % 17) as f64 / 5.0).collect()).unwrap();
    let pca = row_centered_pca(&x, Retention::Variance(0.85)).unwrap();
    let path = dir.path().join("pca.toml");
    write_toml(&path, &pca).unwrap();
    let back: PcaResult = read_toml(&path).unwrap();
    for (a, b) in back
        .components
        .iter()
        .flatten()
        .zip(pca.components.iter().flatten())
    {
        assert!(close(*a, *b));
    }
    assert!(back
        .eigenvalues
        .iter()
        .zip(&pca.eigenvalues)
        .all(|(a, b)| close(*a, *b)));

    let cfg = PipelineConfig::default();
    let path = dir.path().join("config.toml");
    fs::write(&path, cfg.to_toml().unwrap()).unwrap();
    assert_eq!(PipelineConfig::load(&path).unwrap(), cfg);

    let text = fs::read_to_string(dir.path().join("space.toml")).unwrap();
    let cut = dir.path().join("cut.toml");
    fs::write(&cut, &text[..text.len() / 2]).unwrap();
    assert!(matches!(
        read_toml::<SemanticSpace>(&cut),
        Err(Error::Io { .. })
    ));
    let cut_cfg = dir.path().join("cut_config.toml");
    fs::write(&cut_cfg, "schema_version = 1\n[train\n").unwrap();
    assert!(matches!(
        PipelineConfig::load(&cut_cfg),
        Err(Error::Io { .. })
    ));
}
