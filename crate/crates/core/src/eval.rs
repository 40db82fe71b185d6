//! Precision/recall/F1 computation and model-comparison reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::Category;
use crate::error::{Error, Result};

/// Confusion counts with derived metrics for the positive class.
/// Totals on empty denominators (0/0) are defined as 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub true_pos: usize,
    pub false_pos: usize,
    pub false_neg: usize,
    pub true_neg: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Metrics {
    pub fn from_counts(
        true_pos: usize,
        false_pos: usize,
        false_neg: usize,
        true_neg: usize,
    ) -> Self {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let precision = ratio(true_pos, true_pos + false_pos);
        let recall = ratio(true_pos, true_pos + false_neg);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Metrics {
            true_pos,
            false_pos,
            false_neg,
            true_neg,
            precision,
            recall,
            f1,
        }
    }

    pub fn total(&self) -> usize {
        self.true_pos + self.false_pos + self.false_neg + self.true_neg
    }
}

/// Score binary predictions against gold labels.
pub fn evaluate(pred: &[bool], gold: &[bool]) -> Result<Metrics> {
    if pred.len() != gold.len() {
        return Err(Error::Input(format!(
            "prediction/gold length mismatch: {} vs {}",
            pred.len(),
            gold.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Input("cannot evaluate an empty set".into()));
    }
    let mut tp = 0;
    let mut fp = 0;
    let mut fn_ = 0;
    let mut tn = 0;
    for (&p, &g) in pred.iter().zip(gold) {
        match (p, g) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    Ok(Metrics::from_counts(tp, fp, fn_, tn))
}

/// One model's metrics across categories.
pub type ModelMetrics = BTreeMap<Category, Metrics>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: String,
    pub category: Category,
    pub metrics: Metrics,
    /// Percent F1 difference against the baseline; `None` marks an
    /// undefined cell (baseline F1 of zero).
    pub pct_diff_vs_baseline: Option<f64>,
}

/// Model-comparison report: per model and category, F1 with percent
/// difference against the named baseline. F1 here is the positive-class F1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub baseline: String,
    pub rows: Vec<ReportRow>,
}

/// Build the comparison. Model order is preserved; the baseline must be
/// among the models.
pub fn compare_report(
    models: &[(String, ModelMetrics)],
    baseline: &str,
) -> Result<ComparisonReport> {
    let baseline_metrics = models
        .iter()
        .find(|(name, _)| name == baseline)
        .map(|(_, metrics)| metrics)
        .ok_or_else(|| Error::Input(format!("baseline model {baseline:?} not present")))?
        .clone();

    let mut rows = Vec::new();
    for (name, metrics) in models {
        for (&category, m) in metrics {
            let pct = baseline_metrics.get(&category).and_then(|base| {
                if base.f1 == 0.0 {
                    None
                } else {
                    Some((m.f1 - base.f1) / base.f1 * 100.0)
                }
            });
            rows.push(ReportRow {
                model: name.clone(),
                category,
                metrics: *m,
                pct_diff_vs_baseline: pct,
            });
        }
    }
    Ok(ComparisonReport {
        baseline: baseline.to_string(),
        rows,
    })
}

impl ComparisonReport {
    /// CSV rendering: category, model, precision, recall, f1,
    /// pct_diff_vs_baseline. Undefined cells render as `n/a`.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("category,model,precision,recall,f1,pct_diff_vs_baseline\n");
        for row in &self.rows {
            let pct = row
                .pct_diff_vs_baseline
                .map_or("n/a".to_string(), |p| format!("{p}"));
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                row.category,
                row.model,
                row.metrics.precision,
                row.metrics.recall,
                row.metrics.f1,
                pct
            );
        }
        out
    }

    /// Aligned plain-text rendering for terminals.
    pub fn to_text_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<20} {:<12} {:>9} {:>9} {:>9} {:>12}",
            "category", "model", "precision", "recall", "f1", "vs baseline"
        );
        let _ = writeln!(out, "{}", "-".repeat(76));
        for row in &self.rows {
            let pct = row
                .pct_diff_vs_baseline
                .map_or("n/a".to_string(), |p| format!("{p:+.3}%"));
            let _ = writeln!(
                out,
                "{:<20} {:<12} {:>9.3} {:>9.3} {:>9.3} {:>12}",
                row.category.to_string(),
                row.model,
                row.metrics.precision,
                row.metrics.recall,
                row.metrics.f1,
                pct
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_all_positive() {
        let m = evaluate(&[true, true, true], &[true, true, true]).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        assert_eq!(m.total(), 3);
    }

    #[test]
    fn all_negative_predictions_zero_recall() {
        let m = evaluate(&[false, false, false], &[true, false, true]).unwrap();
        assert_eq!(m.recall, 0.0);
        assert_eq!(m.f1, 0.0);
        assert_eq!(m.precision, 0.0); // 0/0 case
    }

    #[test]
    fn hand_counted_confusion_table() {
        let m = evaluate(&[true, true, false, false], &[true, false, true, false]).unwrap();
        assert_eq!(
            (m.true_pos, m.false_pos, m.false_neg, m.true_neg),
            (1, 1, 1, 1)
        );
        assert_eq!(m.precision, 0.5);
        assert_eq!(m.recall, 0.5);
        assert_eq!(m.f1, 0.5);
    }

    #[test]
    fn length_mismatch_and_empty_are_errors() {
        assert!(evaluate(&[true], &[true, false]).is_err());
        assert!(evaluate(&[], &[]).is_err());
    }

    #[test]
    fn swapping_pred_and_gold_transposes() {
        let pred = [true, true, false, true, false, false];
        let gold = [true, false, true, true, false, true];
        let a = evaluate(&pred, &gold).unwrap();
        let b = evaluate(&gold, &pred).unwrap();
        assert_eq!(a.false_pos, b.false_neg);
        assert_eq!(a.false_neg, b.false_pos);
        assert_eq!(a.precision, b.recall);
        assert_eq!(a.recall, b.precision);
    }

    #[test]
    fn duplication_leaves_f1_unchanged() {
        let pred = [true, false, true, true];
        let gold = [true, true, false, true];
        let single = evaluate(&pred, &gold).unwrap();
        let doubled_pred: Vec<bool> = pred.iter().chain(&pred).copied().collect();
        let doubled_gold: Vec<bool> = gold.iter().chain(&gold).copied().collect();
        let doubled = evaluate(&doubled_pred, &doubled_gold).unwrap();
        assert!((single.f1 - doubled.f1).abs() < 1e-15);
    }

    #[test]
    fn concatenation_sums_counts() {
        let a = evaluate(&[true, false], &[true, true]).unwrap();
        let b = evaluate(&[false, false, true], &[false, true, true]).unwrap();
        let joint = evaluate(
            &[true, false, false, false, true],
            &[true, true, false, true, true],
        )
        .unwrap();
        assert_eq!(joint.true_pos, a.true_pos + b.true_pos);
        assert_eq!(joint.false_pos, a.false_pos + b.false_pos);
        assert_eq!(joint.false_neg, a.false_neg + b.false_neg);
        assert_eq!(joint.true_neg, a.true_neg + b.true_neg);
    }

    fn metrics_with_f1(f1: f64) -> Metrics {
        // Synthesize counts that land exactly on the requested F1 where
        // possible; for report tests only the f1 field matters.
        let mut m = Metrics::from_counts(1, 0, 0, 0);
        m.f1 = f1;
        m
    }

    #[test]
    fn report_percent_differences() {
        let mut base = ModelMetrics::new();
        base.insert(Category::PriceOrNot, metrics_with_f1(0.965));
        let mut other = ModelMetrics::new();
        other.insert(Category::PriceOrNot, metrics_with_f1(0.967));

        let report = compare_report(
            &[("svm".to_string(), base), ("gru".to_string(), other)],
            "svm",
        )
        .unwrap();
        let svm_row = &report.rows[0];
        assert_eq!(svm_row.pct_diff_vs_baseline, Some(0.0));
        let gru_row = &report.rows[1];
        let pct = gru_row.pct_diff_vs_baseline.unwrap();
        assert!((pct - (0.967 - 0.965) / 0.965 * 100.0).abs() < 1e-12);
        assert!((pct - 0.207).abs() < 5e-3); // approx +0.207%
    }

    #[test]
    fn report_simple_ratios() {
        let mut base = ModelMetrics::new();
        base.insert(Category::PriceUp, metrics_with_f1(0.5));
        let mut other = ModelMetrics::new();
        other.insert(Category::PriceUp, metrics_with_f1(0.75));
        let report = compare_report(
            &[("base".to_string(), base), ("better".to_string(), other)],
            "base",
        )
        .unwrap();
        assert_eq!(report.rows[1].pct_diff_vs_baseline, Some(50.0));
    }

    #[test]
    fn report_marks_zero_baseline_undefined() {
        let mut base = ModelMetrics::new();
        base.insert(Category::PriceUp, metrics_with_f1(0.0));
        let mut other = ModelMetrics::new();
        other.insert(Category::PriceUp, metrics_with_f1(0.4));
        let report = compare_report(
            &[("base".to_string(), base), ("m".to_string(), other)],
            "base",
        )
        .unwrap();
        assert_eq!(report.rows[1].pct_diff_vs_baseline, None);
        assert!(report.to_csv_string().contains("n/a"));
    }

    #[test]
    fn report_requires_baseline() {
        assert!(compare_report(&[("m".to_string(), ModelMetrics::new())], "absent").is_err());
    }
}
