//! Daily directionality score from direction-classified news.
//!
//! Each trading day's window runs from the cutoff (17:00 by default) on the
//! previous trading day, exclusive, to the cutoff on the day itself,
//! inclusive. The score is (n_up - n_down) / (n_up + n_constant + n_down).

use std::fmt::Write as _;

use chrono::offset::TimeZone;
use chrono::{DateTime, FixedOffset, NaiveDate, NaiveDateTime, NaiveTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A news item carrying its instant and the three direction labels.
/// Several labels may be set at once; such items count toward each.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifiedNewsItem {
    pub timestamp: DateTime<FixedOffset>,
    pub up: bool,
    pub constant: bool,
    pub down: bool,
}

/// Direction counts and score for one trading day. `score` is `None` when
/// no direction-labeled news fell inside the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DailyScore {
    pub day: NaiveDate,
    pub n_up: u64,
    pub n_constant: u64,
    pub n_down: u64,
    pub score: Option<f64>,
    /// Items assigned to this window, including ones with no direction label.
    pub n_items: u64,
}

/// The directionality score. `None` when all three counts are zero.
pub fn directionality_score(n_up: u64, n_constant: u64, n_down: u64) -> Option<f64> {
    let denominator = n_up + n_constant + n_down;
    if denominator == 0 {
        return None;
    }
    // Signed numerator; counts fit f64 exactly for any realistic news volume.
    Some((n_up as f64 - n_down as f64) / denominator as f64)
}

/// Result of windowing a news feed onto a trading calendar.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyAggregate {
    pub scores: Vec<DailyScore>,
    /// Items before the first window or after the last, excluded from every
    /// window.
    pub dropped: u64,
}

fn window_boundary(day: NaiveDate, cutoff: NaiveTime, tz: FixedOffset) -> DateTime<FixedOffset> {
    tz.from_local_datetime(&NaiveDateTime::new(day, cutoff))
        .single()
        .expect("fixed offsets are unambiguous")
}

/// Assign items to trading-day windows and score each day.
///
/// The window for calendar day `d` closes at `cutoff` on `d` (inclusive)
/// and opens at the cutoff of the previous trading day (exclusive); the
/// first day's window opens at the cutoff of the preceding calendar day.
/// `tz` is the quote timezone the cutoff is expressed in.
pub fn aggregate_daily(
    items: &[ClassifiedNewsItem],
    cutoff: NaiveTime,
    calendar: &[NaiveDate],
    tz: FixedOffset,
) -> Result<DailyAggregate> {
    if calendar.is_empty() {
        return Err(Error::Input("empty trading calendar".into()));
    }
    if calendar.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Input(
            "trading calendar must be strictly ascending".into(),
        ));
    }

    let uppers: Vec<DateTime<FixedOffset>> = calendar
        .iter()
        .map(|&d| window_boundary(d, cutoff, tz))
        .collect();
    let first_lower = window_boundary(
        calendar[0].pred_opt().expect("date has a predecessor"),
        cutoff,
        tz,
    );

    let mut scores: Vec<DailyScore> = calendar
        .iter()
        .map(|&day| DailyScore {
            day,
            n_up: 0,
            n_constant: 0,
            n_down: 0,
            score: None,
            n_items: 0,
        })
        .collect();
    let mut dropped = 0u64;

    for item in items {
        // First window whose close is at or after the item.
        let slot = uppers.partition_point(|upper| *upper < item.timestamp);
        if slot == uppers.len() || (slot == 0 && item.timestamp <= first_lower) {
            dropped += 1;
            continue;
        }
        let day = &mut scores[slot];
        day.n_items += 1;
        if item.up {
            day.n_up += 1;
        }
        if item.constant {
            day.n_constant += 1;
        }
        if item.down {
            day.n_down += 1;
        }
    }

    for day in &mut scores {
        day.score = directionality_score(day.n_up, day.n_constant, day.n_down);
    }
    Ok(DailyAggregate { scores, dropped })
}

/// Render the daily score CSV: `date,n_up,n_constant,n_down,score` with an
/// empty score cell for undefined days and a `# n_dropped=` footer.
pub fn render_scores_csv(aggregate: &DailyAggregate) -> String {
    let mut out = String::from("date,n_up,n_constant,n_down,score\n");
    for day in &aggregate.scores {
        let score = day.score.map_or(String::new(), |s| format!("{s}"));
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            day.day, day.n_up, day.n_constant, day.n_down, score
        );
    }
    let _ = writeln!(out, "# n_dropped={}", aggregate.dropped);
    out
}

/// Parse the CSV produced by [`render_scores_csv`]. `n_items` is not
/// persisted in the file and parses back as zero.
pub fn parse_scores_csv(contents: &str) -> Result<Vec<DailyScore>> {
    let mut scores = Vec::new();
    for (lineno, line) in contents.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || lineno == 0 {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: lineno + 1,
            message,
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(parse_err(format!(
                "expected 5 fields, found {}",
                fields.len()
            )));
        }
        let day = NaiveDate::parse_from_str(fields[0], "%Y-%m-%d")
            .map_err(|e| parse_err(format!("bad date {:?}: {e}", fields[0])))?;
        let count = |s: &str| {
            s.parse::<u64>()
                .map_err(|e| parse_err(format!("bad count {s:?}: {e}")))
        };
        let n_up = count(fields[1])?;
        let n_constant = count(fields[2])?;
        let n_down = count(fields[3])?;
        let score = if fields[4].is_empty() {
            None
        } else {
            Some(
                fields[4]
                    .parse::<f64>()
                    .map_err(|e| parse_err(format!("bad score {:?}: {e}", fields[4])))?,
            )
        };
        scores.push(DailyScore {
            day,
            n_up,
            n_constant,
            n_down,
            score,
            n_items: 0,
        });
    }
    Ok(scores)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn utc() -> FixedOffset {
        FixedOffset::east_opt(0).unwrap()
    }

    fn date(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn at(s: &str) -> DateTime<FixedOffset> {
        DateTime::parse_from_rfc3339(s).unwrap()
    }

    fn item(ts: &str, up: bool, constant: bool, down: bool) -> ClassifiedNewsItem {
        ClassifiedNewsItem {
            timestamp: at(ts),
            up,
            constant,
            down,
        }
    }

    fn cutoff17() -> NaiveTime {
        NaiveTime::from_hms_opt(17, 0, 0).unwrap()
    }

    #[test]
    fn score_formula() {
        assert_eq!(directionality_score(10, 5, 5), Some(0.25));
        assert_eq!(directionality_score(7, 0, 0), Some(1.0));
        assert_eq!(directionality_score(0, 0, 9), Some(-1.0));
        assert_eq!(directionality_score(3, 4, 3), Some(0.0));
        assert_eq!(directionality_score(0, 0, 0), None);
    }

    #[test]
    fn item_before_cutoff_lands_on_its_day() {
        let calendar = [date("2018-03-05"), date("2018-03-06")];
        let items = [item("2018-03-05T16:59:00+00:00", true, false, false)];
        let agg = aggregate_daily(&items, cutoff17(), &calendar, utc()).unwrap();
        assert_eq!(agg.scores[0].n_up, 1);
        assert_eq!(agg.scores[1].n_up, 0);
        assert_eq!(agg.dropped, 0);
    }

    #[test]
    fn cutoff_boundary_is_closed_on_the_right() {
        let calendar = [date("2018-03-05"), date("2018-03-06")];
        let exactly = [item("2018-03-05T17:00:00+00:00", false, false, true)];
        let agg = aggregate_daily(&exactly, cutoff17(), &calendar, utc()).unwrap();
        assert_eq!(agg.scores[0].n_down, 1);

        let after = [item("2018-03-05T17:00:01+00:00", false, false, true)];
        let agg = aggregate_daily(&after, cutoff17(), &calendar, utc()).unwrap();
        assert_eq!(agg.scores[0].n_down, 0);
        assert_eq!(agg.scores[1].n_down, 1);
    }

    #[test]
    fn three_items_score_one_third() {
        let calendar = [date("2018-03-05")];
        let items = [
            item("2018-03-05T09:00:00+00:00", true, false, false),
            item("2018-03-05T10:00:00+00:00", true, false, false),
            item("2018-03-05T11:00:00+00:00", false, false, true),
        ];
        let agg = aggregate_daily(&items, cutoff17(), &calendar, utc()).unwrap();
        let s = agg.scores[0].score.unwrap();
        assert!((s - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn weekend_news_flows_into_next_trading_day() {
        // Friday and Monday trading days; Saturday news joins Monday's window.
        let calendar = [date("2018-03-02"), date("2018-03-05")];
        let items = [item("2018-03-03T12:00:00+00:00", true, false, false)];
        let agg = aggregate_daily(&items, cutoff17(), &calendar, utc()).unwrap();
        assert_eq!(agg.scores[1].n_up, 1);
    }

    #[test]
    fn out_of_range_items_are_dropped_and_counted() {
        let calendar = [date("2018-03-05")];
        let items = [
            item("2018-03-01T12:00:00+00:00", true, false, false), // before first window
            item("2018-03-05T12:00:00+00:00", true, false, false), // in window
            item("2018-03-09T12:00:00+00:00", true, false, false), // after last window
        ];
        let agg = aggregate_daily(&items, cutoff17(), &calendar, utc()).unwrap();
        assert_eq!(agg.dropped, 2);
        assert_eq!(agg.scores[0].n_items, 1);
        let assigned: u64 = agg.scores.iter().map(|d| d.n_items).sum();
        assert_eq!(assigned + agg.dropped, items.len() as u64);
    }

    #[test]
    fn multi_label_items_count_in_each_direction() {
        let calendar = [date("2018-03-05")];
        let items = [item("2018-03-05T12:00:00+00:00", true, false, true)];
        let agg = aggregate_daily(&items, cutoff17(), &calendar, utc()).unwrap();
        let day = &agg.scores[0];
        assert_eq!((day.n_up, day.n_down, day.n_items), (1, 1, 1));
        assert_eq!(day.score, Some(0.0));
    }

    #[test]
    fn unlabeled_items_enter_no_count_but_are_assigned() {
        let calendar = [date("2018-03-05")];
        let items = [item("2018-03-05T12:00:00+00:00", false, false, false)];
        let agg = aggregate_daily(&items, cutoff17(), &calendar, utc()).unwrap();
        assert_eq!(agg.scores[0].n_items, 1);
        assert_eq!(agg.scores[0].score, None);
    }

    #[test]
    fn timezone_shifts_window_assignment() {
        // 16:30 UTC is 22:00 at +05:30, past the local 17:00 cutoff.
        let calendar = [date("2018-03-05"), date("2018-03-06")];
        let tz = FixedOffset::east_opt(5 * 3600 + 1800).unwrap();
        let items = [item("2018-03-05T16:30:00+00:00", true, false, false)];
        let agg = aggregate_daily(&items, cutoff17(), &calendar, tz).unwrap();
        assert_eq!(agg.scores[0].n_up, 0);
        assert_eq!(agg.scores[1].n_up, 1);
    }

    #[test]
    fn rejects_unsorted_or_empty_calendar() {
        let items: Vec<ClassifiedNewsItem> = Vec::new();
        assert!(aggregate_daily(&items, cutoff17(), &[], utc()).is_err());
        let unsorted = [date("2018-03-06"), date("2018-03-05")];
        assert!(aggregate_daily(&items, cutoff17(), &unsorted, utc()).is_err());
    }

    #[test]
    fn scores_csv_round_trip() {
        let aggregate = DailyAggregate {
            scores: vec![
                DailyScore {
                    day: date("2018-03-05"),
                    n_up: 3,
                    n_constant: 1,
                    n_down: 1,
                    score: Some(0.4),
                    n_items: 5,
                },
                DailyScore {
                    day: date("2018-03-06"),
                    n_up: 0,
                    n_constant: 0,
                    n_down: 0,
                    score: None,
                    n_items: 0,
                },
            ],
            dropped: 2,
        };
        let csv = render_scores_csv(&aggregate);
        assert!(csv.contains("# n_dropped=2"));
        assert!(csv.contains("2018-03-06,0,0,0,\n"));
        let parsed = parse_scores_csv(&csv).unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[0].score, Some(0.4));
        assert_eq!(parsed[1].score, None);
    }
}
