//! Per-category binary linear SVMs trained by stochastic subgradient
//! descent on the L2-regularized hinge loss, plus the nine-model bundle
//! and its persistence format.

use std::collections::BTreeMap;
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotatedHeadline, Category};
use crate::error::{Error, Result};
use crate::textprep::{preprocess, PreprocessConfig, TokenSequence};
use crate::vectorize::{transform_tfidf, SparseVector, TfIdfModel};

pub const BUNDLE_VERSION: u32 = 1;

/// Optimizer settings. The learning-rate schedule is fixed at
/// eta_t = 1 / (lambda * t).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmHyperparams {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl SvmHyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Input(format!(
                "lambda must be positive and finite, got {}",
                self.lambda
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Input("epochs must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for SvmHyperparams {
    fn default() -> Self {
        SvmHyperparams {
            lambda: 1e-4,
            epochs: 20,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub corpus_size: usize,
    /// Set by callers that want a wall-clock record; kept out of the bundle
    /// writer's path so that reruns with fixed seeds stay byte-identical.
    pub trained_at: Option<String>,
}

/// A trained binary linear classifier for one category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvmModel {
    pub category: Option<Category>,
    pub bias: f64,
    pub weights: Vec<f64>,
    pub hyperparams: SvmHyperparams,
    pub meta: TrainingMeta,
}

/// Per-step and per-epoch diagnostics from a training run.
#[derive(Debug, Clone, Default)]
pub struct TrainingTrace {
    /// Full-objective value at the end of each epoch.
    pub epoch_objectives: Vec<f64>,
    /// Hinge-violation indicator for every step of the first epoch, in the
    /// order samples were visited.
    pub first_epoch_violations: Vec<bool>,
}

fn fisher_yates(indices: &mut [usize], rng: &mut ChaCha8Rng) {
    for i in (1..indices.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        indices.swap(i, j);
    }
}

fn validate_training_input(x: &[SparseVector], y: &[i8]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::Input(format!(
            "feature/label length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Input("need at least 2 training samples".into()));
    }
    let dim = x[0].dim();
    if x.iter().any(|v| v.dim() != dim) {
        return Err(Error::Input(
            "training vectors have mixed dimensions".into(),
        ));
    }
    if y.iter().any(|&label| label != 1 && label != -1) {
        return Err(Error::Input("labels must be -1 or +1".into()));
    }
    if y.iter().all(|&label| label == y[0]) {
        return Err(Error::Training(
            "all labels identical; a binary classifier is undefined".into(),
        ));
    }
    Ok(dim)
}

/// The regularized hinge objective:
/// (lambda/2)*||w||^2 + (1/n) * sum_i max(0, 1 - y_i(w.x_i + b)).
pub fn objective(x: &[SparseVector], y: &[i8], weights: &[f64], bias: f64, lambda: f64) -> f64 {
    let n = x.len() as f64;
    let hinge_sum: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, &yi)| (1.0 - yi as f64 * (xi.dot_dense(weights) + bias)).max(0.0))
        .sum();
    let norm_sq: f64 = weights.iter().map(|w| w * w).sum();
    lambda / 2.0 * norm_sq + hinge_sum / n
}

/// Analytic gradient of [`objective`] at a point where no sample sits on
/// the hinge kink. The bias carries no regularization term.
pub fn objective_gradient(
    x: &[SparseVector],
    y: &[i8],
    weights: &[f64],
    bias: f64,
    lambda: f64,
) -> (Vec<f64>, f64) {
    let n = x.len() as f64;
    let mut grad_w: Vec<f64> = weights.iter().map(|w| lambda * w).collect();
    let mut grad_b = 0.0;
    for (xi, &yi) in x.iter().zip(y) {
        let margin = yi as f64 * (xi.dot_dense(weights) + bias);
        if margin < 1.0 {
            for &(j, value) in xi.entries() {
                grad_w[j] -= yi as f64 * value / n;
            }
            grad_b -= yi as f64 / n;
        }
    }
    (grad_w, grad_b)
}

/// Train with stochastic subgradient descent, recording diagnostics.
///
/// The weight vector is kept as `scale * v` so each step touches only the
/// nonzeros of the sampled vector; the epoch shuffle comes from a seeded
/// ChaCha8 stream, which makes runs bit-identical across platforms.
pub fn train_svm_with_trace(
    x: &[SparseVector],
    y: &[i8],
    hp: &SvmHyperparams,
) -> Result<(LinearSvmModel, TrainingTrace)> {
    hp.validate()?;
    let dim = validate_training_input(x, y)?;
    let n = x.len();

    let mut v = vec![0.0f64; dim];
    let mut scale = 1.0f64;
    let mut bias = 0.0f64;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let mut trace = TrainingTrace::default();
    let mut t: u64 = 0;

    for epoch in 0..hp.epochs {
        fisher_yates(&mut order, &mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (hp.lambda * t as f64);
            let margin = y[i] as f64 * (scale * x[i].dot_dense(&v) + bias);
            // w <- (1 - 1/t) w + [violation] * eta * y * x. At t = 1 the
            // decay annihilates w, which v = 0 already encodes.
            if t > 1 {
                scale *= 1.0 - 1.0 / t as f64;
            }
            let violation = margin < 1.0;
            if violation {
                let coef = eta * y[i] as f64 / scale;
                for &(j, value) in x[i].entries() {
                    v[j] += coef * value;
                }
                bias += eta * y[i] as f64;
            }
            if epoch == 0 {
                trace.first_epoch_violations.push(violation);
            }
        }
        let weights_now: Vec<f64> = v.iter().map(|w| w * scale).collect();
        trace
            .epoch_objectives
            .push(objective(x, y, &weights_now, bias, hp.lambda));
    }

    let weights = v.into_iter().map(|w| w * scale).collect();
    let model = LinearSvmModel {
        category: None,
        bias,
        weights,
        hyperparams: *hp,
        meta: TrainingMeta {
            corpus_size: n,
            trained_at: None,
        },
    };
    Ok((model, trace))
}

/// Train a binary linear SVM. Deterministic given (x, y, hp).
pub fn train_svm(x: &[SparseVector], y: &[i8], hp: &SvmHyperparams) -> Result<LinearSvmModel> {
    train_svm_with_trace(x, y, hp).map(|(model, _)| model)
}

/// Classify one vector: margin = w.x + b, label +1 iff margin >= 0.
pub fn predict(model: &LinearSvmModel, x: &SparseVector) -> Result<(i8, f64)> {
    if x.dim() != model.weights.len() {
        return Err(Error::Input(format!(
            "vector dimension {} does not match model dimension {}",
            x.dim(),
            model.weights.len()
        )));
    }
    let margin = x.dot_dense(&model.weights) + model.bias;
    Ok((if margin >= 0.0 { 1 } else { -1 }, margin))
}

/// Hyperparameters per category, with a shared default.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct BundleHyperparams {
    pub default: SvmHyperparams,
    #[serde(default)]
    pub per_category: BTreeMap<Category, SvmHyperparams>,
}

impl BundleHyperparams {
    pub fn for_category(&self, category: Category) -> SvmHyperparams {
        self.per_category
            .get(&category)
            .copied()
            .unwrap_or(self.default)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedCategory {
    pub category: Category,
    pub reason: String,
}

/// Nine per-category classifiers sharing one TF-IDF model and one
/// preprocessing fingerprint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifierBundle {
    pub version: u32,
    pub preprocess_fingerprint: String,
    pub tfidf: TfIdfModel,
    models: Vec<LinearSvmModel>,
    #[serde(default)]
    pub skipped: Vec<SkippedCategory>,
}

impl ClassifierBundle {
    pub fn model(&self, category: Category) -> Option<&LinearSvmModel> {
        self.models.iter().find(|m| m.category == Some(category))
    }

    pub fn models(&self) -> &[LinearSvmModel] {
        &self.models
    }

    /// True when at least one category could not be trained.
    pub fn is_partial(&self) -> bool {
        !self.skipped.is_empty()
    }

    fn check_fingerprint(&self, config: &PreprocessConfig) -> Result<()> {
        let fingerprint = config.fingerprint();
        if fingerprint != self.preprocess_fingerprint {
            return Err(Error::Model(format!(
                "preprocess fingerprint mismatch: bundle was trained with {}, caller supplied {}",
                self.preprocess_fingerprint, fingerprint
            )));
        }
        Ok(())
    }

    /// Predict every available category for an already-tokenized headline.
    pub fn classify_tokens(
        &self,
        tokens: &TokenSequence,
    ) -> Result<BTreeMap<Category, (bool, f64)>> {
        let vector = transform_tfidf(tokens, &self.tfidf);
        let mut out = BTreeMap::new();
        for model in &self.models {
            let category = model.category.expect("bundle models carry categories");
            let (label, margin) = predict(model, &vector)?;
            out.insert(category, (label > 0, margin));
        }
        Ok(out)
    }

    /// Preprocess and predict. The config must fingerprint-match training.
    pub fn classify_text(
        &self,
        text: &str,
        config: &PreprocessConfig,
    ) -> Result<BTreeMap<Category, (bool, f64)>> {
        self.check_fingerprint(config)?;
        self.classify_tokens(&preprocess(text, config))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file =
            std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        serde_json::to_writer(file, self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let contents =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;

        #[derive(Deserialize)]
        struct VersionProbe {
            version: u32,
        }
        let probe: VersionProbe = serde_json::from_str(&contents)
            .map_err(|e| Error::Model(format!("unreadable bundle file: {e}")))?;
        if probe.version != BUNDLE_VERSION {
            return Err(Error::Model(format!(
                "unsupported bundle version {} (expected {BUNDLE_VERSION})",
                probe.version
            )));
        }

        let bundle: ClassifierBundle = serde_json::from_str(&contents)?;
        let dim = bundle.tfidf.dim();
        for model in &bundle.models {
            if model.category.is_none() {
                return Err(Error::Model("bundle model is missing its category".into()));
            }
            if model.weights.len() != dim {
                return Err(Error::Model(format!(
                    "model for {:?} has dimension {} but the vocabulary has {dim}",
                    model.category,
                    model.weights.len()
                )));
            }
        }
        Ok(bundle)
    }
}

/// Train one classifier per category over the full dataset.
///
/// Categories whose labels are single-class in this data are skipped and
/// recorded; the remaining categories still train (a partial bundle).
pub fn train_bundle(
    dataset: &[AnnotatedHeadline],
    preprocess_config: &PreprocessConfig,
    tfidf: TfIdfModel,
    hyperparams: &BundleHyperparams,
) -> Result<ClassifierBundle> {
    if dataset.is_empty() {
        return Err(Error::Input(
            "cannot train a bundle on an empty dataset".into(),
        ));
    }
    let vectors: Vec<SparseVector> = dataset
        .iter()
        .map(|h| transform_tfidf(&preprocess(&h.text, preprocess_config), &tfidf))
        .collect();

    let mut models = Vec::new();
    let mut skipped = Vec::new();
    for category in Category::ALL {
        let labels: Vec<i8> = dataset
            .iter()
            .map(|h| if h.labels.get(category) { 1 } else { -1 })
            .collect();
        let hp = hyperparams.for_category(category);
        match train_svm(&vectors, &labels, &hp) {
            Ok(mut model) => {
                model.category = Some(category);
                models.push(model);
            }
            Err(Error::Training(reason)) => skipped.push(SkippedCategory { category, reason }),
            Err(other) => return Err(other),
        }
    }

    Ok(ClassifierBundle {
        version: BUNDLE_VERSION,
        preprocess_fingerprint: preprocess_config.fingerprint(),
        tfidf,
        models,
        skipped,
    })
}

/// Seeded random index split shared by every category. Returns sorted
/// (train, test) index lists; `ratio` is the training fraction.
pub fn split_indices(n: usize, ratio: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Input(format!(
            "split ratio must be in (0, 1), got {ratio}"
        )));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    fisher_yates(&mut indices, &mut rng);
    let train_len = (n as f64 * ratio).floor() as usize;
    let mut train = indices[..train_len].to_vec();
    let mut test = indices[train_len..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}
