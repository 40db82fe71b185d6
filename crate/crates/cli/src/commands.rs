//! The six pipeline commands.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use aurum_core::classify::ClassifierBundle;
use aurum_core::corpus::{
    cohen_kappa, load_annotation_series, load_dataset, AnnotatedHeadline, Category,
    HeadlineTimestamp, SchemaMapping,
};
use aurum_core::eval::{compare_report, evaluate, ModelMetrics};
use aurum_core::signal::{
    aggregate_daily, parse_scores_csv, render_scores_csv, ClassifiedNewsItem,
};
use aurum_core::textprep::{preprocess, TokenSequence};
use aurum_core::vectorize::fit_tfidf;
use aurum_core::{causality_test, split_indices, train_bundle, PriceSeries};

use crate::config::LoadedConfig;

pub const BASELINE_MODEL_NAME: &str = "tfidf_svm_baseline";

#[derive(Debug, Serialize, Deserialize)]
struct SplitManifest {
    split_ratio: f64,
    split_seed: u64,
    train_ids: Vec<String>,
    test_ids: Vec<String>,
}

fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut contents = serde_json::to_string_pretty(value)?;
    contents.push('\n');
    std::fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

pub fn cmd_train(
    cfg: &LoadedConfig,
    dataset_override: Option<&Path>,
    seed_override: Option<u64>,
    out_flag: Option<&Path>,
) -> Result<()> {
    let out_dir = cfg.output_dir(out_flag);
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("cannot create output directory {}", out_dir.display()))?;

    let dataset_path = cfg.dataset_path(dataset_override)?;
    if let Some(glove) = &cfg.config.vectorize.glove_path {
        let resolved = cfg.resolve(glove);
        if !resolved.exists() {
            bail!("glove file {} does not exist", resolved.display());
        }
    }
    let schema = cfg.schema()?;
    let dataset = load_dataset(&dataset_path, &schema)?;
    if dataset.is_empty() {
        bail!("dataset {} has no rows", dataset_path.display());
    }

    let split_seed = seed_override.unwrap_or(cfg.config.train.split_seed);
    let (train_idx, test_idx) =
        split_indices(dataset.len(), cfg.config.train.split_ratio, split_seed)?;
    if train_idx.is_empty() {
        bail!("training split is empty; increase the dataset or the split ratio");
    }
    let manifest = SplitManifest {
        split_ratio: cfg.config.train.split_ratio,
        split_seed,
        train_ids: train_idx.iter().map(|&i| dataset[i].id.clone()).collect(),
        test_ids: test_idx.iter().map(|&i| dataset[i].id.clone()).collect(),
    };
    write_json_pretty(&out_dir.join("split_manifest.json"), &manifest)?;

    let preprocess_config = cfg.preprocess_config()?;
    let train_rows: Vec<AnnotatedHeadline> =
        train_idx.iter().map(|&i| dataset[i].clone()).collect();
    let tokenized: Vec<TokenSequence> = train_rows
        .iter()
        .map(|h| preprocess(&h.text, &preprocess_config))
        .collect();

    let started = Instant::now();
    let tfidf = fit_tfidf(&tokenized, cfg.config.vectorize.max_n)?;
    let vocabulary_size = tfidf.dim();
    let bundle = train_bundle(
        &train_rows,
        &preprocess_config,
        tfidf,
        &cfg.bundle_hyperparams()?,
    )?;
    let elapsed = started.elapsed();

    let bundle_path = out_dir.join("bundle.json");
    bundle.save(&bundle_path)?;

    // Wall-clock details go to the log only, keeping the bundle and the
    // manifest byte-identical across reruns.
    let log_path = out_dir.join("train.log");
    let mut log = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&log_path)
        .with_context(|| format!("cannot open {}", log_path.display()))?;
    writeln!(
        log,
        "{} trained {} models (vocab {}, train {}, test {}, seed {}) from {} in {:.2?}",
        chrono::Utc::now().to_rfc3339(),
        bundle.models().len(),
        vocabulary_size,
        manifest.train_ids.len(),
        manifest.test_ids.len(),
        split_seed,
        dataset_path.display(),
        elapsed,
    )?;

    println!(
        "trained {}/9 classifiers on {} headlines (vocabulary {vocabulary_size}) -> {}",
        bundle.models().len(),
        train_rows.len(),
        bundle_path.display()
    );
    for skipped in &bundle.skipped {
        println!(
            "  skipped {}: {} (bundle is partial)",
            skipped.category, skipped.reason
        );
    }
    Ok(())
}

fn load_bundle_at(
    cfg: &LoadedConfig,
    bundle_override: Option<&Path>,
    out_flag: Option<&Path>,
) -> Result<ClassifierBundle> {
    let path = match bundle_override {
        Some(path) => path.to_path_buf(),
        None => cfg.output_dir(out_flag).join("bundle.json"),
    };
    ClassifierBundle::load(&path).with_context(|| format!("cannot load bundle {}", path.display()))
}

pub fn cmd_eval(
    cfg: &LoadedConfig,
    bundle_override: Option<&Path>,
    out_flag: Option<&Path>,
) -> Result<()> {
    let out_dir = cfg.output_dir(out_flag);
    let bundle = load_bundle_at(cfg, bundle_override, out_flag)?;
    let preprocess_config = cfg.preprocess_config()?;
    if preprocess_config.fingerprint() != bundle.preprocess_fingerprint {
        bail!(
            "refusing to evaluate: the configured preprocessing (fingerprint {}) differs from \
             the one the bundle was trained with ({}); align the config used for training",
            preprocess_config.fingerprint(),
            bundle.preprocess_fingerprint
        );
    }

    let dataset = load_dataset(&cfg.dataset_path(None)?, &cfg.schema()?)?;
    let manifest_path = out_dir.join("split_manifest.json");
    let manifest: SplitManifest = serde_json::from_str(
        &std::fs::read_to_string(&manifest_path)
            .with_context(|| format!("cannot read {}", manifest_path.display()))?,
    )?;

    let by_id: BTreeMap<&str, &AnnotatedHeadline> =
        dataset.iter().map(|h| (h.id.as_str(), h)).collect();
    let test_rows: Vec<&AnnotatedHeadline> = manifest
        .test_ids
        .iter()
        .map(|id| {
            by_id
                .get(id.as_str())
                .copied()
                .ok_or_else(|| anyhow!("split manifest references unknown id {id:?}"))
        })
        .collect::<Result<_>>()?;
    if test_rows.is_empty() {
        return Err(aurum_core::Error::InsufficientData(
            "the held-out split is empty; nothing to evaluate".into(),
        )
        .into());
    }

    let predictions: Vec<BTreeMap<Category, (bool, f64)>> = test_rows
        .iter()
        .map(|h| bundle.classify_text(&h.text, &preprocess_config))
        .collect::<aurum_core::Result<_>>()?;

    let mut metrics = ModelMetrics::new();
    for category in Category::ALL {
        if bundle.model(category).is_none() {
            continue;
        }
        let pred: Vec<bool> = predictions.iter().map(|p| p[&category].0).collect();
        let gold: Vec<bool> = test_rows.iter().map(|h| h.labels.get(category)).collect();
        metrics.insert(category, evaluate(&pred, &gold)?);
    }

    let report = compare_report(
        &[(BASELINE_MODEL_NAME.to_string(), metrics)],
        BASELINE_MODEL_NAME,
    )?;
    let csv_path = out_dir.join("eval_report.csv");
    std::fs::write(&csv_path, report.to_csv_string())
        .with_context(|| format!("cannot write {}", csv_path.display()))?;
    let text = report.to_text_table();
    let text_path = out_dir.join("eval_report.txt");
    std::fs::write(&text_path, &text)
        .with_context(|| format!("cannot write {}", text_path.display()))?;

    print!("{text}");
    println!(
        "evaluated {} held-out headlines -> {}",
        test_rows.len(),
        csv_path.display()
    );
    Ok(())
}

struct ClassifyRow {
    id: String,
    date: String,
    text: String,
}

fn read_classify_input(path: &Path, schema: &SchemaMapping) -> Result<Vec<ClassifyRow>> {
    let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let contents = String::from_utf8(bytes).map_err(|e| {
        anyhow!(
            "input {} is not valid UTF-8 (invalid byte at offset {})",
            path.display(),
            e.utf8_error().valid_up_to()
        )
    })?;

    if path.extension().is_some_and(|ext| ext == "csv") {
        let mut reader = csv::Reader::from_reader(contents.as_bytes());
        let headers = reader.headers()?.clone();
        let column = |canonical: &str| -> Option<usize> {
            let source = schema.source_for(canonical)?;
            headers.iter().position(|h| h == source)
        };
        let text_col = column("text")
            .ok_or_else(|| anyhow!("input CSV has no text column (looked for the mapped name)"))?;
        let id_col = column("id");
        let date_col = column("date");

        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            let text = record.get(text_col).unwrap_or_default().trim().to_string();
            if text.is_empty() {
                continue;
            }
            rows.push(ClassifyRow {
                id: id_col
                    .and_then(|c| record.get(c))
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| s.trim().to_string())
                    .unwrap_or_else(|| i.to_string()),
                date: date_col
                    .and_then(|c| record.get(c))
                    .unwrap_or_default()
                    .trim()
                    .to_string(),
                text,
            });
        }
        Ok(rows)
    } else {
        Ok(contents
            .lines()
            .map(str::trim)
            .filter(|line| !line.is_empty())
            .enumerate()
            .map(|(i, line)| ClassifyRow {
                id: i.to_string(),
                date: String::new(),
                text: line.to_string(),
            })
            .collect())
    }
}

pub fn cmd_classify(
    cfg: &LoadedConfig,
    bundle_override: Option<&Path>,
    input: &Path,
    output: &Path,
    out_flag: Option<&Path>,
) -> Result<()> {
    let bundle = load_bundle_at(cfg, bundle_override, out_flag)?;
    let preprocess_config = cfg.preprocess_config()?;
    let rows = read_classify_input(input, &cfg.schema()?)?;

    let mut writer = csv::Writer::from_path(output)
        .with_context(|| format!("cannot write {}", output.display()))?;
    let mut header = vec!["id".to_string(), "date".to_string(), "text".to_string()];
    header.extend(Category::ALL.iter().map(|c| c.name().to_string()));
    header.extend(Category::ALL.iter().map(|c| format!("margin_{}", c.name())));
    writer.write_record(&header)?;

    for row in &rows {
        let labels = bundle.classify_text(&row.text, &preprocess_config)?;
        let mut record = vec![row.id.clone(), row.date.clone(), row.text.clone()];
        for category in Category::ALL {
            record.push(match labels.get(&category) {
                Some((positive, _)) => if *positive { "1" } else { "0" }.to_string(),
                None => String::new(),
            });
        }
        for category in Category::ALL {
            record.push(
                labels
                    .get(&category)
                    .map(|(_, margin)| format!("{margin}"))
                    .unwrap_or_default(),
            );
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    println!(
        "classified {} headlines -> {}",
        rows.len(),
        output.display()
    );
    if bundle.is_partial() {
        println!("note: bundle is partial; untrained categories emit empty cells");
    }
    Ok(())
}

pub fn cmd_agreement(
    first: &Path,
    second: &Path,
    schema_path: Option<&Path>,
    category: Option<&str>,
    output: Option<&Path>,
) -> Result<()> {
    let schema = match schema_path {
        Some(path) => SchemaMapping::load(path)?,
        None => SchemaMapping::identity(),
    };
    let stem = |path: &Path| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string())
    };
    let series_a = load_annotation_series(first, &schema, stem(first))?;
    let series_b = load_annotation_series(second, &schema, stem(second))?;

    let categories: Vec<Category> = match category {
        Some(name) => vec![name.parse()?],
        None => Category::ALL.to_vec(),
    };

    let mut csv_out = String::from("category,kappa\n");
    println!(
        "{:<20} {:>8}   ({} vs {}, {} headlines)",
        "category",
        "kappa",
        series_a.annotator_id,
        series_b.annotator_id,
        series_a.len()
    );
    for category in categories {
        let kappa = cohen_kappa(&series_a, &series_b, category)?;
        println!("{:<20} {kappa:>8.4}", category.to_string());
        csv_out.push_str(&format!("{category},{kappa}\n"));
    }
    if let Some(path) = output {
        std::fs::write(path, csv_out)
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

pub fn cmd_score(
    cfg: &LoadedConfig,
    input: &Path,
    output: Option<&Path>,
    out_flag: Option<&Path>,
) -> Result<()> {
    let out_dir = cfg.output_dir(out_flag);
    let output = output
        .map(Path::to_path_buf)
        .unwrap_or_else(|| out_dir.join("scores.csv"));
    let cutoff = cfg.cutoff()?;
    let tz = cfg.timezone()?;
    let prices = PriceSeries::load_csv(&cfg.prices_path()?)?;
    let calendar = prices.days();

    let mut reader = csv::Reader::from_path(input)
        .with_context(|| format!("cannot read {}", input.display()))?;
    let headers = reader.headers()?.clone();
    let column = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| anyhow!("labeled news CSV is missing the {name:?} column"))
    };
    let date_col = column("date")?;
    let up_col = column(Category::PriceUp.name())?;
    let constant_col = column(Category::PriceConstant.name())?;
    let down_col = column(Category::PriceDown.name())?;

    let mut items = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let date_cell = record.get(date_col).unwrap_or_default().trim();
        if date_cell.is_empty() {
            bail!("row {} has no date; scored news must be timestamped", i + 1);
        }
        let timestamp = HeadlineTimestamp::parse(date_cell)
            .map_err(|e| anyhow!("row {}: {e}", i + 1))?
            .resolve(tz);
        let flag = |col: usize| -> Result<bool> {
            match record.get(col).unwrap_or_default().trim() {
                "1" => Ok(true),
                "0" | "" => Ok(false),
                other => bail!("row {}: non-binary direction label {other:?}", i + 1),
            }
        };
        items.push(ClassifiedNewsItem {
            timestamp,
            up: flag(up_col)?,
            constant: flag(constant_col)?,
            down: flag(down_col)?,
        });
    }

    let aggregate = aggregate_daily(&items, cutoff, &calendar, tz)?;
    if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(&output, render_scores_csv(&aggregate))
        .with_context(|| format!("cannot write {}", output.display()))?;

    let defined = aggregate
        .scores
        .iter()
        .filter(|d| d.score.is_some())
        .count();
    println!(
        "scored {} trading days ({defined} with news, {} items dropped) -> {}",
        aggregate.scores.len(),
        aggregate.dropped,
        output.display()
    );
    Ok(())
}

pub fn cmd_causality(
    cfg: &LoadedConfig,
    scores_path: &Path,
    output: Option<&Path>,
    out_flag: Option<&Path>,
) -> Result<()> {
    let out_dir = cfg.output_dir(out_flag);
    let output = output
        .map(Path::to_path_buf)
        .unwrap_or_else(|| out_dir.join("causality_report.json"));
    let scores = parse_scores_csv(
        &std::fs::read_to_string(scores_path)
            .with_context(|| format!("cannot read {}", scores_path.display()))?,
    )?;
    let prices = PriceSeries::load_csv(&cfg.prices_path()?)?;
    let periods = cfg.periods();

    let report = causality_test(&scores, &prices, &periods)?;
    if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    write_json_pretty(&output, &report)?;

    for period in &report.periods {
        match (&period.result, &period.error) {
            (Some(result), _) => {
                let decision = match result.reject_null_at {
                    Some(level) => format!("reject the null at {level}"),
                    None => "cannot reject the null".to_string(),
                };
                println!(
                    "{}: n={} beta={:.4} se={:.4} t={:.3} p={:.4e} -> {decision}",
                    period.label,
                    result.n,
                    result.beta,
                    result.se_beta,
                    result.t_beta,
                    result.p_beta
                );
            }
            (None, Some(error)) => println!("{}: {error}", period.label),
            (None, None) => unreachable!("period has neither result nor error"),
        }
    }
    println!("report -> {}", output.display());

    if report.periods.iter().all(|p| p.result.is_none()) {
        return Err(aurum_core::Error::InsufficientData(
            "no analysis period had enough usable pairs".into(),
        )
        .into());
    }
    Ok(())
}
