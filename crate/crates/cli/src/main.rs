//! `aurum`: commodity-news analytics pipeline.
//!
//! Exit codes: 0 success, 1 analysis-level insufficiency (not enough usable
//! data), 2 input or configuration errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use config::LoadedConfig;

#[derive(Parser)]
#[command(
    name = "aurum",
    version,
    about = "Gold-news analytics: classify headlines, score daily direction, test price causality"
)]
struct Cli {
    /// JSON run configuration; most commands need one.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the configured output directory.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split the dataset, fit TF-IDF on the training split, train the nine
    /// per-category classifiers, and persist the bundle.
    Train {
        /// Dataset CSV, overriding `dataset.path` from the config.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Split seed, overriding `train.split_seed`.
        #[arg(long)]
        split_seed: Option<u64>,
    },
    /// Score the bundle on the held-out split and write the report.
    Eval {
        /// Bundle path (defaults to `<output_dir>/bundle.json`).
        #[arg(long)]
        bundle: Option<PathBuf>,
    },
    /// Label headlines with all nine categories and margins.
    Classify {
        #[arg(long)]
        bundle: Option<PathBuf>,
        /// Plain text (one headline per line) or CSV with a text column.
        #[arg(long)]
        input: PathBuf,
        /// Labeled CSV destination.
        #[arg(long)]
        output: PathBuf,
    },
    /// Cohen's kappa between two annotator label series.
    Agreement {
        /// First annotator's canonical-format CSV.
        #[arg(long)]
        a: PathBuf,
        /// Second annotator's canonical-format CSV.
        #[arg(long)]
        b: PathBuf,
        /// Optional schema mapping for both files.
        #[arg(long)]
        schema: Option<PathBuf>,
        /// Restrict to a single category (canonical name).
        #[arg(long)]
        category: Option<String>,
        /// Optional CSV destination for the per-category table.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Aggregate direction-labeled news into the daily directionality score.
    Score {
        /// Labeled news CSV (as produced by `classify`).
        #[arg(long)]
        input: PathBuf,
        /// Score CSV destination (defaults to `<output_dir>/scores.csv`).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Regress price changes on lagged score changes, per analysis period.
    Causality {
        /// Daily score CSV (as produced by `score`).
        #[arg(long)]
        scores: PathBuf,
        /// Report JSON destination
        /// (defaults to `<output_dir>/causality_report.json`).
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn load_config(path: &Option<PathBuf>) -> Result<LoadedConfig> {
    match path {
        Some(path) => LoadedConfig::load(path),
        None => Ok(LoadedConfig::defaulted()),
    }
}

fn run(cli: Cli) -> Result<()> {
    let out_flag = cli.output_dir.as_deref();
    match &cli.command {
        Command::Train {
            dataset,
            split_seed,
        } => {
            let cfg = load_config(&cli.config)?;
            commands::cmd_train(&cfg, dataset.as_deref(), *split_seed, out_flag)
        }
        Command::Eval { bundle } => {
            let cfg = load_config(&cli.config)?;
            commands::cmd_eval(&cfg, bundle.as_deref(), out_flag)
        }
        Command::Classify {
            bundle,
            input,
            output,
        } => {
            let cfg = load_config(&cli.config)?;
            commands::cmd_classify(&cfg, bundle.as_deref(), input, output, out_flag)
        }
        Command::Agreement {
            a,
            b,
            schema,
            category,
            output,
        } => commands::cmd_agreement(
            a,
            b,
            schema.as_deref(),
            category.as_deref(),
            output.as_deref(),
        ),
        Command::Score { input, output } => {
            let cfg = load_config(&cli.config)?;
            commands::cmd_score(&cfg, input, output.as_deref(), out_flag)
        }
        Command::Causality { scores, output } => {
            let cfg = load_config(&cli.config)?;
            commands::cmd_causality(&cfg, scores, output.as_deref(), out_flag)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error:#}");
            let insufficient = error.chain().any(|cause| {
                cause
                    .downcast_ref::<aurum_core::Error>()
                    .is_some_and(|e| matches!(e, aurum_core::Error::InsufficientData(_)))
            });
            if insufficient {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
