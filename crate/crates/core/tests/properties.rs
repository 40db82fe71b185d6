//! Property tests over the spec invariants that hold for arbitrary inputs.

use std::collections::BTreeMap;

use chrono::{DateTime, FixedOffset, NaiveDate, NaiveTime};
use proptest::prelude::*;

use aurum_core::corpus::{summarize, AnnotatedHeadline, AnnotationSeries, Category, LabelSet};
use aurum_core::signal::{aggregate_daily, ClassifiedNewsItem};
use aurum_core::textprep::{ngrams, preprocess, PreprocessConfig, TokenSequence};
use aurum_core::vectorize::{fit_tfidf, transform_tfidf};
use aurum_core::{cohen_kappa, evaluate, ols_fit};

fn headline_text() -> impl Strategy<Value = String> {
    proptest::string::string_regex("[A-Za-z0-9 ,.$%:/-]{0,60}").expect("valid regex")
}

fn word() -> impl Strategy<Value = String> {
    proptest::string::string_regex("[a-z]{1,6}").expect("valid regex")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn preprocess_idempotent_over_its_output(text in headline_text()) {
        let config = PreprocessConfig::tfidf_default();
        let once = preprocess(&text, &config);
        let twice = preprocess(&once.join(), &config);
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn preprocess_case_insensitive(text in headline_text()) {
        let config = PreprocessConfig::tfidf_default();
        prop_assert_eq!(
            preprocess(&text, &config),
            preprocess(&text.to_uppercase(), &config)
        );
    }

    #[test]
    fn preprocess_emits_no_numeric_tokens(text in headline_text()) {
        let config = PreprocessConfig::embedding_default();
        for token in preprocess(&text, &config).iter() {
            prop_assert!(!token.chars().any(|c| c.is_ascii_digit()), "token {:?}", token);
            prop_assert!(!token.contains(char::is_whitespace));
        }
    }

    #[test]
    fn ngram_count_matches_closed_form(words in proptest::collection::vec(word(), 0..12), max_n in 1usize..=3) {
        let seq = TokenSequence::new(words);
        let count = ngrams(&seq, max_n).unwrap().len();
        let expected: usize = (1..=max_n)
            .map(|k| if seq.len() >= k { seq.len() - k + 1 } else { 0 })
            .sum();
        prop_assert_eq!(count, expected);
    }

    #[test]
    fn tfidf_transform_is_unit_norm_or_empty(
        docs in proptest::collection::vec(proptest::collection::vec(word(), 1..8), 1..8),
        probe in proptest::collection::vec(word(), 0..8),
    ) {
        let corpus: Vec<TokenSequence> = docs.into_iter().map(TokenSequence::new).collect();
        let model = fit_tfidf(&corpus, 2).unwrap();
        let vector = transform_tfidf(&TokenSequence::new(probe), &model);
        if !vector.is_empty() {
            prop_assert!((vector.l2_norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn tfidf_fit_is_permutation_invariant(
        docs in proptest::collection::vec(proptest::collection::vec(word(), 1..6), 2..8),
        seed in 0u64..1000,
    ) {
        let corpus: Vec<TokenSequence> = docs.into_iter().map(TokenSequence::new).collect();
        let mut shuffled = corpus.clone();
        // Cheap deterministic permutation.
        let rot = seed as usize % shuffled.len();
        shuffled.rotate_left(rot);
        let a = fit_tfidf(&corpus, 2).unwrap();
        let b = fit_tfidf(&shuffled, 2).unwrap();
        prop_assert_eq!(a.vocabulary().terms(), b.vocabulary().terms());
        prop_assert_eq!(a.idf(), b.idf());
    }

    #[test]
    fn kappa_is_symmetric(bits in proptest::collection::vec((0u8..2, 0u8..2), 1..40)) {
        let make = |name: &str, select: fn(&(u8, u8)) -> u8| {
            let labels: BTreeMap<String, LabelSet> = bits
                .iter()
                .enumerate()
                .map(|(i, pair)| {
                    let mut set = LabelSet::default();
                    set.set(Category::PriceUp, select(pair) == 1);
                    (format!("{i:04}"), set)
                })
                .collect();
            AnnotationSeries::new(name, labels)
        };
        let a = make("a", |p| p.0);
        let b = make("b", |p| p.1);
        let ab = cohen_kappa(&a, &b, Category::PriceUp).unwrap();
        let ba = cohen_kappa(&b, &a, Category::PriceUp).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert!((-1.0..=1.0).contains(&ab));
    }

    #[test]
    fn summarize_is_order_invariant(labels in proptest::collection::vec(0u16..512, 1..30), rot in 0usize..30) {
        let dataset: Vec<AnnotatedHeadline> = labels
            .iter()
            .enumerate()
            .map(|(i, &mask)| {
                let mut set = LabelSet::default();
                for category in Category::ALL {
                    set.set(category, mask >> category.index() & 1 == 1);
                }
                AnnotatedHeadline {
                    id: i.to_string(),
                    text: format!("headline {i}"),
                    timestamp: None,
                    labels: set,
                }
            })
            .collect();
        let mut rotated = dataset.clone();
        let effective_rot = rot % rotated.len();
        rotated.rotate_left(effective_rot);
        prop_assert_eq!(summarize(&dataset), summarize(&rotated));
    }

    #[test]
    fn metrics_swap_transposes_counts(pairs in proptest::collection::vec((any::<bool>(), any::<bool>()), 1..50)) {
        let pred: Vec<bool> = pairs.iter().map(|p| p.0).collect();
        let gold: Vec<bool> = pairs.iter().map(|p| p.1).collect();
        let a = evaluate(&pred, &gold).unwrap();
        let b = evaluate(&gold, &pred).unwrap();
        prop_assert_eq!(a.false_pos, b.false_neg);
        prop_assert_eq!(a.false_neg, b.false_pos);
        prop_assert_eq!(a.precision, b.recall);
        prop_assert_eq!(a.recall, b.precision);
    }

    #[test]
    fn ols_scale_equivariance(
        raw in proptest::collection::vec((-100i32..100, -100i32..100), 5..40),
        scale_milli in 1i32..5000,
    ) {
        let pairs: Vec<(f64, f64)> = raw
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| (x as f64 + (i as f64) * 1e-3, y as f64))
            .collect();
        let c = scale_milli as f64 / 1000.0;
        let scaled: Vec<(f64, f64)> = pairs.iter().map(|&(x, y)| (x, c * y)).collect();
        let base = ols_fit(&pairs).unwrap();
        let fit = ols_fit(&scaled).unwrap();
        prop_assert!((fit.beta - c * base.beta).abs() < 1e-9 * (1.0 + base.beta.abs() * c.abs()));
        prop_assert!((fit.alpha - c * base.alpha).abs() < 1e-9 * (1.0 + base.alpha.abs() * c.abs()));
        if !base.exact_fit && !fit.exact_fit {
            prop_assert!((fit.t_beta - base.t_beta).abs() < 1e-9 * (1.0 + base.t_beta.abs()));
            prop_assert!((fit.p_beta - base.p_beta).abs() < 1e-9);
        }
    }

    #[test]
    fn aggregation_conserves_items(
        offsets in proptest::collection::vec((0i64..20, 0u32..24, 0u8..8), 0..60),
    ) {
        let calendar: Vec<NaiveDate> = (0..10)
            .map(|i| NaiveDate::from_ymd_opt(2018, 3, 1).unwrap() + chrono::Days::new(i))
            .collect();
        let tz = FixedOffset::east_opt(0).unwrap();
        let items: Vec<ClassifiedNewsItem> = offsets
            .iter()
            .map(|&(day_offset, hour, label_bits)| {
                let date = NaiveDate::from_ymd_opt(2018, 2, 25).unwrap()
                    + chrono::Days::new(day_offset as u64);
                let naive = date.and_hms_opt(hour, 0, 0).unwrap();
                ClassifiedNewsItem {
                    timestamp: DateTime::from_naive_utc_and_offset(naive, tz),
                    up: label_bits & 1 == 1,
                    constant: label_bits & 2 == 2,
                    down: label_bits & 4 == 4,
                }
            })
            .collect();
        let cutoff = NaiveTime::from_hms_opt(17, 0, 0).unwrap();
        let aggregate = aggregate_daily(&items, cutoff, &calendar, tz).unwrap();
        let assigned: u64 = aggregate.scores.iter().map(|d| d.n_items).sum();
        prop_assert_eq!(assigned + aggregate.dropped, items.len() as u64);

        // Swapping up and down labels negates every defined score.
        let swapped: Vec<ClassifiedNewsItem> = items
            .iter()
            .map(|item| ClassifiedNewsItem {
                up: item.down,
                down: item.up,
                ..*item
            })
            .collect();
        let mirrored = aggregate_daily(&swapped, cutoff, &calendar, tz).unwrap();
        for (day, mirror) in aggregate.scores.iter().zip(&mirrored.scores) {
            match (day.score, mirror.score) {
                (Some(s), Some(m)) => prop_assert!((s + m).abs() < 1e-15),
                (None, None) => {}
                other => prop_assert!(false, "defined-ness mismatch {:?}", other),
            }
        }
    }
}
