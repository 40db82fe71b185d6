//! Run configuration: a single JSON file with per-command flag overrides.
//! Relative paths are resolved against the config file's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::{FixedOffset, NaiveDate, NaiveTime};
use serde::Deserialize;

use aurum_core::causality::Period;
use aurum_core::classify::{BundleHyperparams, SvmHyperparams};
use aurum_core::corpus::SchemaMapping;
use aurum_core::textprep::{load_word_list, PreprocessConfig};

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub dataset: DatasetSection,
    pub preprocess: PreprocessSection,
    pub vectorize: VectorizeSection,
    pub train: TrainSection,
    pub signal: SignalSection,
    pub prices: Option<PathBuf>,
    pub periods: Vec<PeriodSection>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetSection {
    pub path: Option<PathBuf>,
    pub schema: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreprocessSection {
    pub filter_stopwords: bool,
    pub stopword_file: Option<PathBuf>,
    pub preserve_file: Option<PathBuf>,
}

impl Default for PreprocessSection {
    fn default() -> Self {
        PreprocessSection {
            filter_stopwords: true,
            stopword_file: None,
            preserve_file: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VectorizeSection {
    pub max_n: usize,
    pub max_sequence_len: usize,
    pub glove_path: Option<PathBuf>,
    pub glove_dim: usize,
}

impl Default for VectorizeSection {
    fn default() -> Self {
        VectorizeSection {
            max_n: 3,
            max_sequence_len: 32,
            glove_path: None,
            glove_dim: 300,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub split_ratio: f64,
    pub split_seed: u64,
    pub lambda: f64,
    pub epochs: usize,
    pub svm_seed: u64,
    pub per_category: BTreeMap<String, SvmHyperparams>,
}

impl Default for TrainSection {
    fn default() -> Self {
        let defaults = SvmHyperparams::default();
        TrainSection {
            split_ratio: 0.8,
            split_seed: 42,
            lambda: defaults.lambda,
            epochs: defaults.epochs,
            svm_seed: defaults.seed,
            per_category: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SignalSection {
    /// Daily window close, `HH:MM` or `HH:MM:SS`.
    pub cutoff: String,
    /// Quote timezone as a UTC offset (`+00:00`, `-05:00`) or `UTC`.
    pub timezone: String,
}

impl Default for SignalSection {
    fn default() -> Self {
        SignalSection {
            cutoff: "17:00:00".to_string(),
            timezone: "+00:00".to_string(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodSection {
    pub label: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

/// A parsed config together with its resolution directory.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: Config,
    base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let contents = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let config: Config = serde_json::from_str(&contents)
            .with_context(|| format!("cannot parse config file {}", path.display()))?;
        if !(config.train.split_ratio > 0.0 && config.train.split_ratio < 1.0) {
            bail!(
                "train.split_ratio must be in (0, 1), got {}",
                config.train.split_ratio
            );
        }
        let base_dir = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(LoadedConfig { config, base_dir })
    }

    pub fn defaulted() -> Self {
        LoadedConfig {
            config: Config::default(),
            base_dir: PathBuf::from("."),
        }
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn output_dir(&self, flag_override: Option<&Path>) -> PathBuf {
        if let Some(dir) = flag_override {
            return dir.to_path_buf();
        }
        self.resolve(
            self.config
                .output_dir
                .as_deref()
                .unwrap_or(Path::new("out")),
        )
    }

    pub fn dataset_path(&self, flag_override: Option<&Path>) -> Result<PathBuf> {
        let path =
            match flag_override {
                Some(path) => path.to_path_buf(),
                None => self.resolve(self.config.dataset.path.as_deref().context(
                    "no dataset path: set dataset.path in the config or pass --dataset",
                )?),
            };
        if !path.exists() {
            bail!("dataset file {} does not exist", path.display());
        }
        Ok(path)
    }

    pub fn schema(&self) -> Result<SchemaMapping> {
        match &self.config.dataset.schema {
            Some(schema_path) => {
                let resolved = self.resolve(schema_path);
                SchemaMapping::load(&resolved)
                    .with_context(|| format!("cannot load schema {}", resolved.display()))
            }
            None => Ok(SchemaMapping::identity()),
        }
    }

    pub fn preprocess_config(&self) -> Result<PreprocessConfig> {
        let mut config = PreprocessConfig::tfidf_default();
        config.filter_stopwords = self.config.preprocess.filter_stopwords;
        if let Some(file) = &self.config.preprocess.stopword_file {
            let resolved = self.resolve(file);
            config.stopword_list = load_word_list(&resolved)
                .with_context(|| format!("cannot load stopword list {}", resolved.display()))?;
        }
        if let Some(file) = &self.config.preprocess.preserve_file {
            let resolved = self.resolve(file);
            config.preserve_list = load_word_list(&resolved)
                .with_context(|| format!("cannot load preserve list {}", resolved.display()))?;
        }
        Ok(config)
    }

    pub fn bundle_hyperparams(&self) -> Result<BundleHyperparams> {
        let train = &self.config.train;
        let default = SvmHyperparams {
            lambda: train.lambda,
            epochs: train.epochs,
            seed: train.svm_seed,
        };
        default
            .validate()
            .map_err(|e| anyhow::anyhow!("train section: {e}"))?;
        let mut per_category = BTreeMap::new();
        for (name, hp) in &train.per_category {
            let category = name
                .parse()
                .map_err(|e| anyhow::anyhow!("train.per_category: {e}"))?;
            hp.validate()
                .map_err(|e| anyhow::anyhow!("train.per_category.{name}: {e}"))?;
            per_category.insert(category, *hp);
        }
        Ok(BundleHyperparams {
            default,
            per_category,
        })
    }

    pub fn cutoff(&self) -> Result<NaiveTime> {
        let raw = &self.config.signal.cutoff;
        NaiveTime::parse_from_str(raw, "%H:%M:%S")
            .or_else(|_| NaiveTime::parse_from_str(raw, "%H:%M"))
            .with_context(|| format!("cannot parse signal.cutoff {raw:?}"))
    }

    pub fn timezone(&self) -> Result<FixedOffset> {
        let raw = self.config.signal.timezone.trim();
        if raw.eq_ignore_ascii_case("utc") || raw == "Z" {
            return Ok(FixedOffset::east_opt(0).expect("zero offset"));
        }
        raw.parse::<FixedOffset>()
            .with_context(|| format!("cannot parse signal.timezone {raw:?}"))
    }

    pub fn prices_path(&self) -> Result<PathBuf> {
        let path = self.resolve(
            self.config
                .prices
                .as_deref()
                .context("no price series: set `prices` in the config")?,
        );
        if !path.exists() {
            bail!("price file {} does not exist", path.display());
        }
        Ok(path)
    }

    /// Configured analysis periods. When none are configured, two
    /// April-to-March years covering 2017-2019 are analyzed.
    pub fn periods(&self) -> Vec<Period> {
        if self.config.periods.is_empty() {
            let date = |y, m, d| NaiveDate::from_ymd_opt(y, m, d).expect("valid date");
            return vec![
                Period {
                    label: "apr2017-mar2018".to_string(),
                    start: date(2017, 4, 1),
                    end: date(2018, 3, 31),
                },
                Period {
                    label: "apr2018-mar2019".to_string(),
                    start: date(2018, 4, 1),
                    end: date(2019, 3, 31),
                },
            ];
        }
        self.config
            .periods
            .iter()
            .map(|p| Period {
                label: p.label.clone(),
                start: p.start,
                end: p.end,
            })
            .collect()
    }
}
