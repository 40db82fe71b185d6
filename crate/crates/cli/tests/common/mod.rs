//! Shared fixtures: a synthetic corpus, a 60-day direction-labeled news
//! feed, a price series with a planted slope, and a config wiring them up.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::Output;

use chrono::NaiveDate;

use aurum_core::corpus::write_dataset_file;
use aurum_core::synth::{generate_corpus, generate_direction_feed, generate_prices};

pub const PLANTED_BETA: f64 = 25.0;

pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub config: PathBuf,
    #[allow(dead_code)] // each integration target uses a different subset
    pub feed: PathBuf,
}

pub fn calendar_60d() -> Vec<NaiveDate> {
    (0..60)
        .map(|i| NaiveDate::from_ymd_opt(2018, 3, 1).unwrap() + chrono::Days::new(i))
        .collect()
}

pub fn pipeline_fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();

    let dataset = generate_corpus(600, 42);
    write_dataset_file(&root.join("dataset.csv"), &dataset).unwrap();

    let calendar = calendar_60d();
    let (items, planted) = generate_direction_feed(&calendar, 7);
    let feed = root.join("feed.csv");
    {
        let mut f = std::fs::File::create(&feed).unwrap();
        writeln!(f, "id,date,text").unwrap();
        for item in &items {
            writeln!(
                f,
                "{},{},\"{}\"",
                item.id,
                item.timestamp.format("%Y-%m-%dT%H:%M:%S"),
                item.text
            )
            .unwrap();
        }
    }

    let prices = generate_prices(&calendar, &planted, 0.0, PLANTED_BETA, 0.5, 13);
    {
        let mut f = std::fs::File::create(root.join("prices.csv")).unwrap();
        writeln!(f, "date,price").unwrap();
        for (day, price) in &prices {
            writeln!(f, "{day},{price}").unwrap();
        }
    }

    let config = root.join("config.json");
    std::fs::write(
        &config,
        r#"{
  "dataset": {"path": "dataset.csv"},
  "vectorize": {"max_n": 2},
  "train": {"split_ratio": 0.8, "split_seed": 42, "lambda": 0.001, "epochs": 100},
  "signal": {"cutoff": "17:00:00", "timezone": "+00:00"},
  "prices": "prices.csv",
  "periods": [{"label": "fixture", "start": "2018-03-01", "end": "2018-04-29"}],
  "output_dir": "out"
}
"#,
    )
    .unwrap();

    Fixture { dir, config, feed }
}

pub fn aurum(args: &[&str], cwd: &Path) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_aurum"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

pub fn assert_success(output: &Output, what: &str) {
    assert!(
        output.status.success(),
        "{what} failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

#[allow(dead_code)]
pub fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}
