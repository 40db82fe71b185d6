//! Lagged OLS regression of daily price changes on directionality-score
//! changes, with a two-sided t-test on the slope.
//!
//! For price day N the pair is (S_{N-1} - S_{N-2}, P_N - P_{N-1}); days with
//! an undefined score leg or a missing price leg are skipped and counted.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::DailyScore;

/// Daily closing prices; days strictly increasing, prices positive.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    points: Vec<(NaiveDate, f64)>,
}

impl PriceSeries {
    pub fn new(points: Vec<(NaiveDate, f64)>) -> Result<Self> {
        if points.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Input(
                "price days must be strictly increasing".into(),
            ));
        }
        if points.iter().any(|&(_, p)| !p.is_finite() || p <= 0.0) {
            return Err(Error::Input("prices must be positive and finite".into()));
        }
        Ok(PriceSeries { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[(NaiveDate, f64)] {
        &self.points
    }

    /// Trading days, ascending. Prices define the trading calendar.
    pub fn days(&self) -> Vec<NaiveDate> {
        self.points.iter().map(|&(d, _)| d).collect()
    }

    /// Parse a `date,price` CSV.
    pub fn load_csv(path: &Path) -> Result<Self> {
        let contents =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut points = Vec::new();
        for (lineno, line) in contents.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if lineno == 0 {
                if line != "date,price" {
                    return Err(Error::Parse {
                        line: 1,
                        message: format!("expected header `date,price`, got {line:?}"),
                    });
                }
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: lineno + 1,
                message,
            };
            let (date_str, price_str) = line
                .split_once(',')
                .ok_or_else(|| parse_err("expected `date,price`".into()))?;
            let day = NaiveDate::parse_from_str(date_str, "%Y-%m-%d")
                .map_err(|e| parse_err(format!("bad date {date_str:?}: {e}")))?;
            let price = price_str
                .parse::<f64>()
                .map_err(|e| parse_err(format!("bad price {price_str:?}: {e}")))?;
            points.push((day, price));
        }
        PriceSeries::new(points)
    }
}

/// One usable regression observation, tagged with its price day N.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaggedPair {
    pub day: NaiveDate,
    pub score_change: f64,
    pub price_change: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaggedPairs {
    pub pairs: Vec<LaggedPair>,
    /// Price days that could not form a pair.
    pub skipped: u64,
}

fn collect_pairs(scores: &[DailyScore], prices: &PriceSeries) -> LaggedPairs {
    let score_by_day: BTreeMap<NaiveDate, Option<f64>> =
        scores.iter().map(|s| (s.day, s.score)).collect();
    let defined = |day: &NaiveDate| score_by_day.get(day).copied().flatten();

    let mut pairs = Vec::new();
    let mut skipped = 0u64;
    let points = prices.points();
    for i in 0..points.len() {
        if i < 2 {
            skipped += 1;
            continue;
        }
        let (day_n, price_n) = points[i];
        let (day_n1, price_n1) = points[i - 1];
        let (day_n2, _) = points[i - 2];
        match (defined(&day_n1), defined(&day_n2)) {
            (Some(s_n1), Some(s_n2)) => pairs.push(LaggedPair {
                day: day_n,
                score_change: s_n1 - s_n2,
                price_change: price_n - price_n1,
            }),
            _ => skipped += 1,
        }
    }
    LaggedPairs { pairs, skipped }
}

/// Pair every price day N with its lagged score change where both legs
/// exist. Errors when fewer than 3 usable pairs remain.
pub fn build_pairs(scores: &[DailyScore], prices: &PriceSeries) -> Result<LaggedPairs> {
    let collected = collect_pairs(scores, prices);
    if collected.pairs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} usable pairs (need at least 3)",
            collected.pairs.len()
        )));
    }
    Ok(collected)
}

/// Closed-form simple OLS with a two-sided t-test on the slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub se_alpha: f64,
    pub se_beta: f64,
    pub t_beta: f64,
    pub p_beta: f64,
    pub r_squared: f64,
    /// Zero-residual fit: standard errors and t are not meaningful;
    /// p is reported as 0 by definition.
    pub exact_fit: bool,
    /// Smallest of {0.01, 0.05} at which the null is rejected.
    pub reject_null_at: Option<f64>,
}

fn reject_level(p: f64) -> Option<f64> {
    if p < 0.01 {
        Some(0.01)
    } else if p < 0.05 {
        Some(0.05)
    } else {
        None
    }
}

/// Fit y = alpha + beta * x by least squares.
pub fn ols_fit(pairs: &[(f64, f64)]) -> Result<RegressionResult> {
    let n = pairs.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!(
            "regression needs at least 3 points, got {n}"
        )));
    }
    let nf = n as f64;
    let x_mean = pairs.iter().map(|&(x, _)| x).sum::<f64>() / nf;
    let y_mean = pairs.iter().map(|&(_, y)| y).sum::<f64>() / nf;

    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for &(x, y) in pairs {
        let dx = x - x_mean;
        let dy = y - y_mean;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateRegressor(
            "regressor is constant; the slope is unidentifiable".into(),
        ));
    }

    let beta = sxy / sxx;
    let alpha = y_mean - beta * x_mean;
    let rss: f64 = pairs
        .iter()
        .map(|&(x, y)| {
            let r = y - alpha - beta * x;
            r * r
        })
        .sum();
    let r_squared = if syy == 0.0 { 0.0 } else { 1.0 - rss / syy };

    let exact_fit = rss <= syy * 1e-20;
    if exact_fit {
        return Ok(RegressionResult {
            n,
            alpha,
            beta,
            se_alpha: 0.0,
            se_beta: 0.0,
            t_beta: 0.0,
            p_beta: 0.0,
            r_squared,
            exact_fit: true,
            reject_null_at: reject_level(0.0),
        });
    }

    let dof = n - 2;
    let sigma_sq = rss / dof as f64;
    let se_beta = (sigma_sq / sxx).sqrt();
    let se_alpha = (sigma_sq * (1.0 / nf + x_mean * x_mean / sxx)).sqrt();
    let t_beta = beta / se_beta;
    let p_beta = student_t_two_sided_p(t_beta, dof);

    Ok(RegressionResult {
        n,
        alpha,
        beta,
        se_alpha,
        se_beta,
        t_beta,
        p_beta,
        r_squared,
        exact_fit: false,
        reject_null_at: reject_level(p_beta),
    })
}

/// An inclusive analysis date range.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Period {
    pub label: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl Period {
    pub fn contains(&self, day: NaiveDate) -> bool {
        self.start <= day && day <= self.end
    }
}

/// Per-period regression outcome; `error` is set instead of `result` when
/// the period could not be analyzed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodReport {
    pub label: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub dropped_pairs: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<RegressionResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CausalityReport {
    pub null_hypothesis: String,
    pub alternative_hypothesis: String,
    pub periods: Vec<PeriodReport>,
}

fn validate_periods(periods: &[Period]) -> Result<()> {
    for period in periods {
        if period.start > period.end {
            return Err(Error::Input(format!(
                "period {:?} starts after it ends",
                period.label
            )));
        }
    }
    let mut sorted: Vec<&Period> = periods.iter().collect();
    sorted.sort_by_key(|p| p.start);
    for pair in sorted.windows(2) {
        if pair[1].start <= pair[0].end {
            return Err(Error::Input(format!(
                "periods {:?} and {:?} overlap",
                pair[0].label, pair[1].label
            )));
        }
    }
    Ok(())
}

/// Run the lagged regression per period. Insufficient or degenerate
/// periods are reported in place without aborting the rest.
pub fn causality_test(
    scores: &[DailyScore],
    prices: &PriceSeries,
    periods: &[Period],
) -> Result<CausalityReport> {
    validate_periods(periods)?;
    let all = collect_pairs(scores, prices);

    let mut reports = Vec::new();
    for period in periods {
        let pairs: Vec<(f64, f64)> = all
            .pairs
            .iter()
            .filter(|pair| period.contains(pair.day))
            .map(|pair| (pair.score_change, pair.price_change))
            .collect();
        let days_in_period = prices
            .points()
            .iter()
            .filter(|&&(d, _)| period.contains(d))
            .count() as u64;
        let dropped_pairs = days_in_period - pairs.len() as u64;

        let (result, error) = if pairs.len() < 3 {
            (
                None,
                Some(format!(
                    "insufficient data: only {} usable pairs (need at least 3)",
                    pairs.len()
                )),
            )
        } else {
            match ols_fit(&pairs) {
                Ok(result) => (Some(result), None),
                Err(e) => (None, Some(e.to_string())),
            }
        };
        reports.push(PeriodReport {
            label: period.label.clone(),
            start: period.start,
            end: period.end,
            dropped_pairs,
            result,
            error,
        });
    }

    Ok(CausalityReport {
        null_hypothesis:
            "beta = 0: lagged changes in the directionality score carry no linear relationship \
             with next-day price changes"
                .to_string(),
        alternative_hypothesis:
            "beta != 0: lagged changes in the directionality score carry a linear relationship \
             with next-day price changes"
                .to_string(),
        periods: reports,
    })
}

// --- Student-t tail probability ------------------------------------------
//
// The two-sided p-value for a t statistic with nu degrees of freedom is
// I_x(nu/2, 1/2) with x = nu / (nu + t^2), where I is the regularized
// incomplete beta function, evaluated below with the standard continued
// fraction (modified Lentz) after the symmetry split at x = (a+1)/(a+b+2).

/// Two-sided tail probability of Student's t distribution.
pub fn student_t_two_sided_p(t: f64, dof: usize) -> f64 {
    assert!(
        dof >= 1,
        "t distribution needs at least 1 degree of freedom"
    );
    if !t.is_finite() {
        return 0.0;
    }
    let nu = dof as f64;
    let x = nu / (nu + t * t);
    regularized_incomplete_beta(nu / 2.0, 0.5, x).clamp(0.0, 1.0)
}

/// Lanczos approximation (g = 7, 9 terms), accurate to ~1e-15 for x > 0.
fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    #[allow(clippy::excessive_precision)] // full-precision reference coefficients
    const COEFFS: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection formula keeps the approximation in its accurate range.
        let pi = std::f64::consts::PI;
        return pi.ln() - (pi * x).sin().ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEFFS[0];
    for (i, &c) in COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 1e-15;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;

    for m in 1..=MAX_ITER {
        let mf = m as f64;
        let m2 = 2.0 * mf;

        // Even step.
        let numerator = mf * (b - mf) * x / ((qam + m2) * (a + m2));
        d = 1.0 + numerator * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + numerator / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        // Odd step.
        let numerator = -(a + mf) * (qab + mf) * x / ((a + m2) * (qap + m2));
        d = 1.0 + numerator * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + numerator / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}
