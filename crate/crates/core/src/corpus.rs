//! Annotated headline datasets, multi-annotator label series, and
//! inter-annotator agreement.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::offset::TimeZone;
use chrono::{FixedOffset, NaiveDate, NaiveDateTime, NaiveTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The nine annotation dimensions a headline is labeled with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    PriceOrNot,
    PriceUp,
    PriceConstant,
    PriceDown,
    PastPriceInfo,
    FuturePriceInfo,
    PastGeneralInfo,
    FutureGeneralInfo,
    AssetComparison,
}

impl Category {
    /// All nine categories, in canonical column order.
    pub const ALL: [Category; 9] = [
        Category::PriceOrNot,
        Category::PriceUp,
        Category::PriceConstant,
        Category::PriceDown,
        Category::PastPriceInfo,
        Category::FuturePriceInfo,
        Category::PastGeneralInfo,
        Category::FutureGeneralInfo,
        Category::AssetComparison,
    ];

    /// Canonical name used in file headers and CLI flags.
    pub fn name(self) -> &'static str {
        match self {
            Category::PriceOrNot => "price_or_not",
            Category::PriceUp => "price_up",
            Category::PriceConstant => "price_constant",
            Category::PriceDown => "price_down",
            Category::PastPriceInfo => "past_price_info",
            Category::FuturePriceInfo => "future_price_info",
            Category::PastGeneralInfo => "past_general_info",
            Category::FutureGeneralInfo => "future_general_info",
            Category::AssetComparison => "asset_comparison",
        }
    }

    /// Position in [`Category::ALL`].
    pub fn index(self) -> usize {
        match self {
            Category::PriceOrNot => 0,
            Category::PriceUp => 1,
            Category::PriceConstant => 2,
            Category::PriceDown => 3,
            Category::PastPriceInfo => 4,
            Category::FuturePriceInfo => 5,
            Category::PastGeneralInfo => 6,
            Category::FutureGeneralInfo => 7,
            Category::AssetComparison => 8,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Category::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Input(format!("unknown category name: {s:?}")))
    }
}

/// One binary label per category.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LabelSet {
    bits: [bool; 9],
}

impl LabelSet {
    pub fn get(&self, category: Category) -> bool {
        self.bits[category.index()]
    }

    pub fn set(&mut self, category: Category, value: bool) {
        self.bits[category.index()] = value;
    }

    /// Categories labeled true, in canonical order.
    pub fn active(&self) -> impl Iterator<Item = Category> + '_ {
        Category::ALL.into_iter().filter(|c| self.get(*c))
    }
}

/// Calendar date with optional time-of-day and optional UTC offset.
///
/// The annotated datasets carry dates only; the news feeds used for the
/// daily score carry full timestamps. Serializes as its canonical
/// ISO-8601 rendering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeadlineTimestamp {
    pub date: NaiveDate,
    pub time: Option<NaiveTime>,
    pub offset: Option<FixedOffset>,
}

impl Serialize for HeadlineTimestamp {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.render())
    }
}

impl<'de> Deserialize<'de> for HeadlineTimestamp {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        HeadlineTimestamp::parse(&s).map_err(serde::de::Error::custom)
    }
}

impl HeadlineTimestamp {
    pub fn date_only(date: NaiveDate) -> Self {
        HeadlineTimestamp {
            date,
            time: None,
            offset: None,
        }
    }

    /// Parse an ISO-8601 date, date-time, or offset date-time.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Ok(dt) = chrono::DateTime::parse_from_rfc3339(s) {
            return Ok(HeadlineTimestamp {
                date: dt.date_naive(),
                time: Some(dt.time()),
                offset: Some(*dt.offset()),
            });
        }
        for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"] {
            if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
                return Ok(HeadlineTimestamp {
                    date: dt.date(),
                    time: Some(dt.time()),
                    offset: None,
                });
            }
        }
        if let Ok(date) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
            return Ok(HeadlineTimestamp::date_only(date));
        }
        Err(Error::Input(format!("unparseable timestamp: {s:?}")))
    }

    /// Canonical rendering; inverse of [`HeadlineTimestamp::parse`].
    pub fn render(&self) -> String {
        match (self.time, self.offset) {
            (Some(t), Some(o)) => format!("{}T{}{}", self.date, t.format("%H:%M:%S"), o),
            (Some(t), None) => format!("{}T{}", self.date, t.format("%H:%M:%S")),
            _ => self.date.to_string(),
        }
    }

    /// Resolve to a concrete instant, interpreting offset-less timestamps in
    /// `assumed_offset` and missing times as midnight.
    pub fn resolve(&self, assumed_offset: FixedOffset) -> chrono::DateTime<FixedOffset> {
        let time = self.time.unwrap_or(NaiveTime::MIN);
        let offset = self.offset.unwrap_or(assumed_offset);
        let naive = NaiveDateTime::new(self.date, time);
        offset
            .from_local_datetime(&naive)
            .single()
            .expect("fixed offsets are unambiguous")
    }
}

/// A headline with its nine consensus labels.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedHeadline {
    pub id: String,
    pub text: String,
    pub timestamp: Option<HeadlineTimestamp>,
    pub labels: LabelSet,
}

/// One annotator's labels over a dataset, keyed by headline id.
#[derive(Debug, Clone)]
pub struct AnnotationSeries {
    pub annotator_id: String,
    labels: BTreeMap<String, LabelSet>,
}

impl AnnotationSeries {
    pub fn new(annotator_id: impl Into<String>, labels: BTreeMap<String, LabelSet>) -> Self {
        AnnotationSeries {
            annotator_id: annotator_id.into(),
            labels,
        }
    }

    pub fn from_headlines(
        annotator_id: impl Into<String>,
        headlines: &[AnnotatedHeadline],
    ) -> Self {
        let labels = headlines.iter().map(|h| (h.id.clone(), h.labels)).collect();
        AnnotationSeries::new(annotator_id, labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.labels.keys().map(String::as_str)
    }

    pub fn label(&self, id: &str, category: Category) -> Option<bool> {
        self.labels.get(id).map(|l| l.get(category))
    }
}

/// Per-category true/false counts over a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub total: usize,
    true_counts: [usize; 9],
}

impl DatasetSummary {
    pub fn true_count(&self, category: Category) -> usize {
        self.true_counts[category.index()]
    }

    pub fn false_count(&self, category: Category) -> usize {
        self.total - self.true_counts[category.index()]
    }
}

/// Count labels per category. Totals equal the dataset length.
pub fn summarize(dataset: &[AnnotatedHeadline]) -> DatasetSummary {
    let mut true_counts = [0usize; 9];
    for headline in dataset {
        for category in Category::ALL {
            if headline.labels.get(category) {
                true_counts[category.index()] += 1;
            }
        }
    }
    DatasetSummary {
        total: dataset.len(),
        true_counts,
    }
}

/// Cohen's kappa between two annotators on one category.
///
/// kappa = (p_o - p_e) / (1 - p_e), with p_o the observed agreement and p_e
/// the chance agreement from the marginal label frequencies. When p_e is
/// exactly 1 the statistic is defined as 1 on perfect agreement and 0
/// otherwise.
pub fn cohen_kappa(a: &AnnotationSeries, b: &AnnotationSeries, category: Category) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Input("empty annotation series".into()));
    }
    if a.len() != b.len() || !a.labels.keys().eq(b.labels.keys()) {
        return Err(Error::Input(format!(
            "annotation series {:?} and {:?} cover different headline ids",
            a.annotator_id, b.annotator_id
        )));
    }

    let n = a.len() as u64;
    let mut agree = 0u64;
    let mut a_true = 0u64;
    let mut b_true = 0u64;
    for (id, labels_a) in &a.labels {
        let la = labels_a.get(category);
        let lb = b.labels[id].get(category);
        if la == lb {
            agree += 1;
        }
        if la {
            a_true += 1;
        }
        if lb {
            b_true += 1;
        }
    }

    // Exact degenerate check in integer arithmetic: p_e = 1 iff the marginal
    // products sum to n^2.
    let pe_num =
        (a_true as u128) * (b_true as u128) + ((n - a_true) as u128) * ((n - b_true) as u128);
    let n_sq = (n as u128) * (n as u128);
    if pe_num == n_sq {
        return Ok(if agree == n { 1.0 } else { 0.0 });
    }

    let p_o = agree as f64 / n as f64;
    let p_e = pe_num as f64 / n_sq as f64;
    Ok((p_o - p_e) / (1.0 - p_e))
}

/// Maps canonical field names (`id`, `date`, `text`, and the nine category
/// names) to source column names. Defaults to the identity mapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaMapping {
    map: BTreeMap<String, String>,
}

impl SchemaMapping {
    pub fn identity() -> Self {
        let mut map = BTreeMap::new();
        for key in ["id", "date", "text"] {
            map.insert(key.to_string(), key.to_string());
        }
        for category in Category::ALL {
            map.insert(category.name().to_string(), category.name().to_string());
        }
        SchemaMapping { map }
    }

    /// Parse either a JSON object or flat `canonical=source` lines.
    pub fn parse(contents: &str) -> Result<Self> {
        let trimmed = contents.trim_start();
        let mut schema = SchemaMapping::identity();
        if trimmed.starts_with('{') {
            let overrides: BTreeMap<String, String> = serde_json::from_str(contents)?;
            for (key, value) in overrides {
                schema.insert(&key, value)?;
            }
            return Ok(schema);
        }
        for (lineno, line) in contents.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: lineno + 1,
                message: format!("expected `canonical=source`, got {line:?}"),
            })?;
            schema.insert(key.trim(), value.trim().to_string())?;
        }
        Ok(schema)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let contents =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        SchemaMapping::parse(&contents)
    }

    fn insert(&mut self, canonical: &str, source: String) -> Result<()> {
        if !self.map.contains_key(canonical) {
            return Err(Error::Schema(format!(
                "unknown canonical field {canonical:?} in schema mapping"
            )));
        }
        self.map.insert(canonical.to_string(), source);
        Ok(())
    }

    pub fn source_for(&self, canonical: &str) -> Option<&str> {
        self.map.get(canonical).map(String::as_str)
    }
}

impl Default for SchemaMapping {
    fn default() -> Self {
        SchemaMapping::identity()
    }
}

fn parse_binary_label(cell: &str, row: usize, column: &str) -> Result<bool> {
    match cell.trim() {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(Error::Validation {
            row,
            message: format!("column {column:?} has non-binary label {other:?}"),
        }),
    }
}

struct ColumnIndex {
    id: Option<usize>,
    date: Option<usize>,
    text: usize,
    categories: [usize; 9],
}

fn resolve_columns(headers: &csv::StringRecord, schema: &SchemaMapping) -> Result<ColumnIndex> {
    let find = |canonical: &str| -> Result<usize> {
        let source = schema
            .source_for(canonical)
            .ok_or_else(|| Error::Schema(format!("schema maps no column for {canonical:?}")))?;
        headers
            .iter()
            .position(|h| h == source)
            .ok_or_else(|| Error::Schema(format!("missing column {source:?} (for {canonical:?})")))
    };
    let find_optional = |canonical: &str| -> Option<usize> {
        let source = schema.source_for(canonical)?;
        headers.iter().position(|h| h == source)
    };

    let mut categories = [0usize; 9];
    for category in Category::ALL {
        categories[category.index()] = find(category.name())?;
    }
    Ok(ColumnIndex {
        id: find_optional("id"),
        date: find_optional("date"),
        text: find("text")?,
        categories,
    })
}

/// Load a dataset from CSV, remapping columns through `schema`.
///
/// Row order is preserved. Ids come from the mapped id column when present,
/// otherwise the zero-based row index.
pub fn load_dataset(path: &Path, schema: &SchemaMapping) -> Result<Vec<AnnotatedHeadline>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        // Completely empty file.
        return Ok(Vec::new());
    }
    let columns = resolve_columns(&headers, schema)?;

    let mut dataset = Vec::new();
    let mut seen_ids = BTreeSet::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        let row = row_idx + 1;

        let text = record
            .get(columns.text)
            .unwrap_or_default()
            .trim()
            .to_string();
        if text.is_empty() {
            return Err(Error::Validation {
                row,
                message: "empty headline text".into(),
            });
        }

        let mut labels = LabelSet::default();
        for category in Category::ALL {
            let col = columns.categories[category.index()];
            let cell = record.get(col).unwrap_or_default();
            labels.set(category, parse_binary_label(cell, row, category.name())?);
        }

        let id = match columns.id.and_then(|c| record.get(c)) {
            Some(cell) if !cell.trim().is_empty() => cell.trim().to_string(),
            _ => row_idx.to_string(),
        };
        if !seen_ids.insert(id.clone()) {
            return Err(Error::Validation {
                row,
                message: format!("duplicate headline id {id:?}"),
            });
        }

        let timestamp = match columns.date.and_then(|c| record.get(c)) {
            Some(cell) if !cell.trim().is_empty() => Some(HeadlineTimestamp::parse(cell).map_err(
                |e| Error::Validation {
                    row,
                    message: e.to_string(),
                },
            )?),
            _ => None,
        };

        dataset.push(AnnotatedHeadline {
            id,
            text,
            timestamp,
            labels,
        });
    }
    Ok(dataset)
}

/// Write a dataset in the canonical CSV layout:
/// `id,date,text,<nine category columns>`.
pub fn write_dataset<W: std::io::Write>(writer: W, dataset: &[AnnotatedHeadline]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["id".to_string(), "date".to_string(), "text".to_string()];
    header.extend(Category::ALL.iter().map(|c| c.name().to_string()));
    w.write_record(&header)?;

    for headline in dataset {
        let mut record = vec![
            headline.id.clone(),
            headline.timestamp.map(|t| t.render()).unwrap_or_default(),
            headline.text.clone(),
        ];
        for category in Category::ALL {
            record.push(
                if headline.labels.get(category) {
                    "1"
                } else {
                    "0"
                }
                .to_string(),
            );
        }
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::io("<writer>", e))?;
    Ok(())
}

pub fn write_dataset_file(path: &Path, dataset: &[AnnotatedHeadline]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    write_dataset(file, dataset)
}

/// Load one annotator's series from a canonical-format CSV. The text column
/// is optional here; only ids and labels matter.
pub fn load_annotation_series(
    path: &Path,
    schema: &SchemaMapping,
    annotator_id: impl Into<String>,
) -> Result<AnnotationSeries> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader.headers()?.clone();

    let mut categories = [0usize; 9];
    for category in Category::ALL {
        let source = schema.source_for(category.name()).ok_or_else(|| {
            Error::Schema(format!("schema maps no column for {:?}", category.name()))
        })?;
        categories[category.index()] = headers
            .iter()
            .position(|h| h == source)
            .ok_or_else(|| Error::Schema(format!("missing column {source:?}")))?;
    }
    let id_col = schema
        .source_for("id")
        .and_then(|source| headers.iter().position(|h| h == source));

    let mut labels = BTreeMap::new();
    let mut seen = BTreeSet::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        let row = row_idx + 1;
        let id = match id_col.and_then(|c| record.get(c)) {
            Some(cell) if !cell.trim().is_empty() => cell.trim().to_string(),
            _ => row_idx.to_string(),
        };
        if !seen.insert(id.clone()) {
            return Err(Error::Validation {
                row,
                message: format!("duplicate headline id {id:?}"),
            });
        }
        let mut set = LabelSet::default();
        for category in Category::ALL {
            let cell = record.get(categories[category.index()]).unwrap_or_default();
            set.set(category, parse_binary_label(cell, row, category.name())?);
        }
        labels.insert(id, set);
    }
    Ok(AnnotationSeries::new(annotator_id, labels))
}
