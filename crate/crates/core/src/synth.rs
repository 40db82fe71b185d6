//! Seeded synthetic-data generators: corpora with planted keyword rules,
//! direction-labeled news feeds, and price series with a planted slope.
//! Used by the test suites and benchmarks; deterministic for a fixed seed.

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::corpus::{AnnotatedHeadline, Category, HeadlineTimestamp, LabelSet};

/// Planted keywords: a category label is 1 exactly when one of its keywords
/// appears, which makes every category linearly separable.
pub fn keyword_rules() -> [(Category, [&'static str; 2]); 9] {
    [
        (Category::PriceOrNot, ["settles", "trades"]),
        (Category::PriceUp, ["rallies", "climbs"]),
        (Category::PriceConstant, ["steadies", "unchanged"]),
        (Category::PriceDown, ["slides", "tumbles"]),
        (Category::PastPriceInfo, ["settled", "closed"]),
        (Category::FuturePriceInfo, ["forecast", "outlook"]),
        (Category::PastGeneralInfo, ["imported", "produced"]),
        (Category::FutureGeneralInfo, ["planned", "proposal"]),
        (Category::AssetComparison, ["versus", "outpaces"]),
    ]
}

const FILLER: [&str; 14] = [
    "gold", "bullion", "market", "metal", "traders", "session", "ounce", "demand", "report",
    "data", "week", "month", "exchange", "futures",
];

const NUMBERY: [&str; 6] = ["$1,283.50", "0.7%", "$14.90", "2%", "1,200", "$31.72"];

fn uniform01(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn pick<'a>(rng: &mut ChaCha8Rng, items: &[&'a str]) -> &'a str {
    items[(rng.next_u64() % items.len() as u64) as usize]
}

/// Standard normal draw via Box-Muller.
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = uniform01(rng).max(1e-12);
    let u2 = uniform01(rng);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn assemble_headline(rng: &mut ChaCha8Rng, keywords: &[&str]) -> String {
    let n_filler = 3 + (rng.next_u64() % 4) as usize;
    let mut words: Vec<String> = (0..n_filler)
        .map(|_| pick(rng, &FILLER).to_string())
        .collect();
    for keyword in keywords {
        let slot = (rng.next_u64() % (words.len() as u64 + 1)) as usize;
        words.insert(slot, keyword.to_string());
    }
    if uniform01(rng) < 0.5 {
        words.push(pick(rng, &NUMBERY).to_string());
    }
    // Capitalize the first word so case folding gets exercised.
    let mut text = words.join(" ");
    if let Some(first) = text.get_mut(0..1) {
        first.make_ascii_uppercase();
    }
    text
}

/// Generate `n` annotated headlines under the planted keyword rules.
pub fn generate_corpus(n: usize, seed: u64) -> Vec<AnnotatedHeadline> {
    let rules = keyword_rules();
    let label_probability = [0.55, 0.40, 0.20, 0.40, 0.50, 0.18, 0.25, 0.15, 0.30];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = NaiveDate::from_ymd_opt(2018, 1, 1).expect("valid date");

    (0..n)
        .map(|i| {
            let mut labels = LabelSet::default();
            let mut keywords = Vec::new();
            for (slot, (category, words)) in rules.iter().enumerate() {
                if uniform01(&mut rng) < label_probability[slot] {
                    labels.set(*category, true);
                    keywords.push(pick(&mut rng, words));
                }
            }
            let text = assemble_headline(&mut rng, &keywords);
            let date = start + chrono::Days::new((i % 60) as u64);
            AnnotatedHeadline {
                id: i.to_string(),
                text,
                timestamp: Some(HeadlineTimestamp::date_only(date)),
                labels,
            }
        })
        .collect()
}

/// One raw (unclassified) news row for the pipeline fixture.
#[derive(Debug, Clone)]
pub struct FeedItem {
    pub id: String,
    pub timestamp: NaiveDateTime,
    pub text: String,
}

/// A direction-labeled feed over a trading calendar: ten items per day in
/// the (prev 17:00, 17:00] window, with per-day planted scores in
/// {-0.5, ..., 0.5}. Returns the items plus the planted score per day.
pub fn generate_direction_feed(calendar: &[NaiveDate], seed: u64) -> (Vec<FeedItem>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut items = Vec::new();
    let mut planted = Vec::with_capacity(calendar.len());

    for (day_idx, &day) in calendar.iter().enumerate() {
        let k = (rng.next_u64() % 11) as i64 - 5; // -5..=5
        planted.push(k as f64 / 10.0);
        let n_up = (2 + k.max(0)) as usize;
        let n_down = (2 + (-k).max(0)) as usize;
        let n_constant = 10 - n_up - n_down;

        let mut directions = Vec::with_capacity(10);
        directions.extend(std::iter::repeat_n(Category::PriceUp, n_up));
        directions.extend(std::iter::repeat_n(Category::PriceConstant, n_constant));
        directions.extend(std::iter::repeat_n(Category::PriceDown, n_down));

        for (j, direction) in directions.into_iter().enumerate() {
            let rules = keyword_rules();
            let words = rules
                .iter()
                .find(|(c, _)| *c == direction)
                .map(|(_, words)| words)
                .expect("direction category has keywords");
            let keyword = pick(&mut rng, words);
            let text = assemble_headline(&mut rng, &[keyword]);
            let time =
                NaiveTime::from_hms_opt(6 + j as u32, (j as u32 * 37) % 60, 0).expect("valid time");
            items.push(FeedItem {
                id: format!("{day_idx}-{j}"),
                timestamp: NaiveDateTime::new(day, time),
                text,
            });
        }
    }
    (items, planted)
}

/// Price series with planted dynamics: the day-N price change equals
/// `alpha + beta * (S_{N-1} - S_{N-2})` plus Gaussian noise.
pub fn generate_prices(
    calendar: &[NaiveDate],
    planted_scores: &[f64],
    alpha: f64,
    beta: f64,
    noise_sigma: f64,
    seed: u64,
) -> Vec<(NaiveDate, f64)> {
    assert_eq!(calendar.len(), planted_scores.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut price = 5000.0;
    let mut out = Vec::with_capacity(calendar.len());
    for (i, &day) in calendar.iter().enumerate() {
        if i >= 2 {
            let score_change = planted_scores[i - 1] - planted_scores[i - 2];
            price += alpha + beta * score_change + noise_sigma * normal(&mut rng);
        } else if i == 1 {
            price += noise_sigma * normal(&mut rng);
        }
        out.push((day, price));
    }
    out
}
