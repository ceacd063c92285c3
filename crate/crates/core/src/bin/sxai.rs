use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sxai::config::PipelineConfig;
use sxai::pipeline::{resolve_run_dir, Command, Pipeline, RUN_ROOT_ENV};
use sxai::{Error, Result};

#[derive(Parser)]
#[command(
    name = "sxai",
    version,
    about = "Semantic interpretation pipeline for CNN classifiers"
)]
struct Cli {
    /// Pipeline config (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Run directory. Defaults to $SXAI_RUN_ROOT/<run_name>, else runs/<run_name>.
    #[arg(long, global = true)]
    run_dir: Option<PathBuf>,

    /// Override a config key, e.g. `--set train.epochs=1`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the effective config as TOML.
    Config,
    /// Train the desk CNN on the corpus.
    Train,
    /// Common traits per class (row-centered PCA of GAP features).
    ExtractTraits,
    /// Semantic spaces from masked/unmasked pairs.
    ExtractSemspace,
    /// Activation-maximization image per semantic space.
    Visualize,
    /// Fit activation distributions on natural samples.
    FitStats,
    /// Radar, indicators and explanation per image.
    Assess {
        /// Images to assess instead of the test corpus (same as assess.images).
        #[arg(long = "image")]
        images: Vec<PathBuf>,
    },
    /// Test samples whose semantic probability satisfies search.predicate.
    Search,
    /// Flag natural and PGD-attacked samples.
    DetectAdv,
    /// Every stage in order.
    RunAll,
}

fn run(cli: Cli) -> Result<()> {
    let base = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    let mut config = base.with_overrides(&cli.overrides)?;
    if let Cmd::Assess { images } = &cli.command {
        if !images.is_empty() {
            config.assess.images = images.clone();
        }
    }
    if let Cmd::Config = cli.command {
        print!("{}", config.to_toml()?);
        return Ok(());
    }
    let run_dir = resolve_run_dir(cli.run_dir.as_deref(), &config.run_name);
    log::debug!("{RUN_ROOT_ENV} resolved run dir to {}", run_dir.display());
    let mut pipeline = Pipeline::new(config, run_dir)?;
    let command = match cli.command {
        Cmd::Config => unreachable!(),
        Cmd::Train => Command::Train,
        Cmd::ExtractTraits => Command::ExtractTraits,
        Cmd::ExtractSemspace => Command::ExtractSemspace,
        Cmd::Visualize => Command::Visualize,
        Cmd::FitStats => Command::FitStats,
        Cmd::Assess { .. } => Command::Assess,
        Cmd::Search => Command::Search,
        Cmd::DetectAdv => Command::DetectAdv,
        Cmd::RunAll => {
            for report in pipeline.run_all()? {
                println!("{}", report.manifest_path.display());
            }
            return Ok(());
        }
    };
    let report = pipeline.run(command)?;
    println!("{}", report.manifest_path.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::MissingPrerequisite { .. } => ExitCode::from(3),
                Error::InvalidParam(_) | Error::InvalidInput(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
