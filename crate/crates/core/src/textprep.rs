//! Deterministic headline normalization and tokenization.
//!
//! The pipeline applies, in order: number masking, punctuation removal,
//! case folding, whitespace tokenization, and an optional selective
//! stop-word filter that exempts direction and time words.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The literal token every numeric run is replaced with.
pub const NUM_TOKEN: &str = "NUM";

/// Placeholder for masked numbers while punctuation stripping and case
/// folding run; swapped for [`NUM_TOKEN`] at tokenization time.
const NUM_SENTINEL: char = '\u{E000}';

/// Stop words removed by default when filtering is enabled.
pub const DEFAULT_STOPWORDS: [&str; 9] = ["a", "an", "the", "of", "in", "on", "at", "and", "for"];

/// Words exempt from stop-word filtering: direction and time cues carry the
/// signal the classifiers need.
pub const DEFAULT_PRESERVED: [&str; 10] = [
    "up", "down", "above", "below", "under", "after", "before", "to", "higher", "lower",
];

/// An ordered sequence of normalized tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    tokens: Vec<String>,
}

impl TokenSequence {
    pub fn new(tokens: Vec<String>) -> Self {
        TokenSequence { tokens }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }

    /// Space-joined rendering, reparseable by [`preprocess`].
    pub fn join(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Tokenization options.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub filter_stopwords: bool,
    pub stopword_list: BTreeSet<String>,
    pub preserve_list: BTreeSet<String>,
}

impl PreprocessConfig {
    /// Defaults for the word-frequency path: selective stop-word filtering on.
    pub fn tfidf_default() -> Self {
        PreprocessConfig {
            filter_stopwords: true,
            stopword_list: DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect(),
            preserve_list: DEFAULT_PRESERVED.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Defaults for the embedding path: no stop words filtered.
    pub fn embedding_default() -> Self {
        PreprocessConfig {
            filter_stopwords: false,
            ..PreprocessConfig::tfidf_default()
        }
    }

    /// Stable fingerprint over the effective configuration. Bundles embed it
    /// so prediction-time mismatches fail loudly.
    pub fn fingerprint(&self) -> String {
        let mut canon = String::new();
        canon.push_str(if self.filter_stopwords {
            "filter=1"
        } else {
            "filter=0"
        });
        canon.push_str(";stop=");
        for word in &self.stopword_list {
            canon.push_str(word);
            canon.push(',');
        }
        canon.push_str(";keep=");
        for word in &self.preserve_list {
            canon.push_str(word);
            canon.push(',');
        }
        format!("{:016x}", fnv1a64(canon.as_bytes()))
    }

    fn is_filtered(&self, token: &str) -> bool {
        self.filter_stopwords
            && self.stopword_list.contains(token)
            && !self.preserve_list.contains(token)
    }
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig::tfidf_default()
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Replace every maximal numeric run with the sentinel. A run is an optional
/// currency sign, digits with optional `,ddd` thousands groups, an optional
/// decimal part, and an optional trailing percent sign.
fn mask_numbers(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < chars.len() {
        let start = i;
        let mut j = i;
        if matches!(chars[j], '$' | '€' | '£') {
            j += 1;
        }
        let digits_start = j;
        while j < chars.len() && chars[j].is_ascii_digit() {
            j += 1;
        }
        if j == digits_start {
            // No digits here; not a numeric run.
            out.push(chars[start]);
            i = start + 1;
            continue;
        }
        // Thousands groups: a comma followed by exactly three digits.
        loop {
            if j < chars.len()
                && chars[j] == ','
                && chars.len() - j > 3
                && chars[j + 1..j + 4].iter().all(|c| c.is_ascii_digit())
            {
                j += 4;
            } else {
                break;
            }
        }
        // Decimal part.
        if j + 1 < chars.len() && chars[j] == '.' && chars[j + 1].is_ascii_digit() {
            j += 2;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
        }
        if j < chars.len() && chars[j] == '%' {
            j += 1;
        }
        out.push(' ');
        out.push(NUM_SENTINEL);
        out.push(' ');
        i = j;
    }
    out
}

/// Normalize `text` into tokens.
///
/// Steps, in order: (1) mask numeric runs, (2) replace punctuation and
/// special characters with spaces, (3) fold case, (4) split on whitespace,
/// (5) filter stop words when enabled. Deterministic for a fixed config.
pub fn preprocess(text: &str, config: &PreprocessConfig) -> TokenSequence {
    let masked = mask_numbers(text);

    let mut cleaned = String::with_capacity(masked.len());
    for ch in masked.chars() {
        if ch == NUM_SENTINEL {
            cleaned.push(ch);
        } else if ch.is_alphanumeric() {
            for lower in ch.to_lowercase() {
                cleaned.push(lower);
            }
        } else {
            cleaned.push(' ');
        }
    }

    let sentinel_str = NUM_SENTINEL.to_string();
    let tokens = cleaned
        .split_whitespace()
        .map(|token| {
            // Already-masked text tokenizes back to NUM, which keeps
            // preprocessing idempotent over its own output.
            if token == sentinel_str || token == "num" {
                NUM_TOKEN.to_string()
            } else {
                token.to_string()
            }
        })
        .filter(|token| !config.is_filtered(token))
        .collect();

    TokenSequence::new(tokens)
}

/// All contiguous n-grams for n = 1..max_n, space-joined, emitted in
/// increasing-n then left-to-right order.
pub fn ngrams(tokens: &TokenSequence, max_n: usize) -> Result<Vec<String>> {
    if !(1..=3).contains(&max_n) {
        return Err(Error::Input(format!(
            "max_n must be 1, 2, or 3, got {max_n}"
        )));
    }
    let words = tokens.tokens();
    let mut grams = Vec::new();
    for n in 1..=max_n {
        if words.len() < n {
            break;
        }
        for window in words.windows(n) {
            grams.push(window.join(" "));
        }
    }
    Ok(grams)
}

/// Load a newline-delimited word list; blank lines and `#` comments ignored.
pub fn load_word_list(path: &Path) -> Result<BTreeSet<String>> {
    let contents =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(contents
        .lines()
        .map(str::trim)
        .filter(|line| !line.is_empty() && !line.starts_with('#'))
        .map(|line| line.to_lowercase())
        .collect())
}
