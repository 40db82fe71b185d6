//! News analytics for the gold commodity: multi-label headline
//! classification with a TF-IDF + linear-SVM baseline, annotator agreement,
//! a daily directionality score over classified news, and a lagged OLS test
//! of whether score changes predict price changes.

pub mod causality;
pub mod classify;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod signal;
pub mod synth;
pub mod textprep;
pub mod vectorize;

pub use causality::{
    build_pairs, causality_test, ols_fit, student_t_two_sided_p, CausalityReport, LaggedPair,
    LaggedPairs, Period, PeriodReport, PriceSeries, RegressionResult,
};
pub use classify::{
    objective, objective_gradient, predict, split_indices, train_bundle, train_svm,
    train_svm_with_trace, BundleHyperparams, ClassifierBundle, LinearSvmModel, SvmHyperparams,
    TrainingMeta, TrainingTrace,
};
pub use corpus::{
    cohen_kappa, load_annotation_series, load_dataset, summarize, write_dataset,
    write_dataset_file, AnnotatedHeadline, AnnotationSeries, Category, DatasetSummary,
    HeadlineTimestamp, LabelSet, SchemaMapping,
};
pub use error::{Error, Result};
pub use eval::{compare_report, evaluate, ComparisonReport, Metrics, ModelMetrics, ReportRow};
pub use signal::{
    aggregate_daily, directionality_score, parse_scores_csv, render_scores_csv, ClassifiedNewsItem,
    DailyAggregate, DailyScore,
};
pub use textprep::{
    load_word_list, ngrams, preprocess, PreprocessConfig, TokenSequence, DEFAULT_PRESERVED,
    DEFAULT_STOPWORDS, NUM_TOKEN,
};
pub use vectorize::{
    embed_sequence, fit_tfidf, load_glove, transform_tfidf, EmbeddingTable, SequenceMatrix,
    SparseVector, TfIdfModel, Vocabulary,
};
