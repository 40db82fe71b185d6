//! N-gram vocabularies, TF-IDF sparse document vectors, and GloVe-format
//! embedding tables with fixed-length sequence matrices.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textprep::{ngrams, TokenSequence};

/// Dense 0-based term index, assigned in lexicographic term order so that
/// fitting is corpus-order independent.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    max_n: usize,
}

impl Vocabulary {
    fn from_sorted_terms(terms: Vec<String>, max_n: usize) -> Self {
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary {
            terms,
            index,
            max_n,
        }
    }

    pub fn size(&self) -> usize {
        self.terms.len()
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> Option<&str> {
        self.terms.get(index).map(String::as_str)
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }
}

/// A document vector: strictly increasing indices with nonzero values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
    dim: usize,
}

impl SparseVector {
    pub fn new(entries: Vec<(usize, f64)>, dim: usize) -> Result<Self> {
        let mut prev: Option<usize> = None;
        for &(index, value) in &entries {
            if index >= dim {
                return Err(Error::Input(format!(
                    "sparse index {index} out of range for dimension {dim}"
                )));
            }
            if prev.is_some_and(|p| p >= index) {
                return Err(Error::Input(
                    "sparse indices must be strictly increasing".into(),
                ));
            }
            if value == 0.0 {
                return Err(Error::Input("sparse values must be nonzero".into()));
            }
            prev = Some(index);
        }
        Ok(SparseVector { entries, dim })
    }

    pub fn empty(dim: usize) -> Self {
        SparseVector {
            entries: Vec::new(),
            dim,
        }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn l2_norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    /// Dot product against a dense vector of the same dimension.
    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| v * dense[i]).sum()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.dim];
        for &(i, v) in &self.entries {
            dense[i] = v;
        }
        dense
    }

    /// Multiply every value by `factor` (nonzero).
    pub fn scaled(&self, factor: f64) -> SparseVector {
        SparseVector {
            entries: self.entries.iter().map(|&(i, v)| (i, v * factor)).collect(),
            dim: self.dim,
        }
    }
}

/// Fitted TF-IDF weighting: vocabulary plus smoothed inverse document
/// frequencies, idf(t) = ln((1 + N) / (1 + df(t))) + 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "TfIdfModelData", into = "TfIdfModelData")]
pub struct TfIdfModel {
    vocabulary: Vocabulary,
    idf: Vec<f64>,
    document_count: usize,
}

/// Wire form of [`TfIdfModel`]: `{max_n, document_count, terms: [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct TfIdfModelData {
    max_n: usize,
    document_count: usize,
    terms: Vec<TermEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TermEntry {
    term: String,
    index: usize,
    idf: f64,
}

impl From<TfIdfModel> for TfIdfModelData {
    fn from(model: TfIdfModel) -> Self {
        let terms = model
            .vocabulary
            .terms
            .iter()
            .enumerate()
            .map(|(index, term)| TermEntry {
                term: term.clone(),
                index,
                idf: model.idf[index],
            })
            .collect();
        TfIdfModelData {
            max_n: model.vocabulary.max_n,
            document_count: model.document_count,
            terms,
        }
    }
}

impl TryFrom<TfIdfModelData> for TfIdfModel {
    type Error = Error;

    fn try_from(data: TfIdfModelData) -> Result<Self> {
        if !(1..=3).contains(&data.max_n) {
            return Err(Error::Model(format!(
                "max_n must be 1, 2, or 3, got {}",
                data.max_n
            )));
        }
        let size = data.terms.len();
        let mut terms = vec![String::new(); size];
        let mut idf = vec![0.0; size];
        let mut seen = vec![false; size];
        for entry in data.terms {
            if entry.index >= size || seen[entry.index] {
                return Err(Error::Model(format!(
                    "term indices are not a bijection onto 0..{size}"
                )));
            }
            seen[entry.index] = true;
            terms[entry.index] = entry.term;
            idf[entry.index] = entry.idf;
        }
        if terms.windows(2).any(|pair| pair[0] >= pair[1]) {
            return Err(Error::Model(
                "vocabulary terms must be unique and lexicographically ordered".into(),
            ));
        }
        Ok(TfIdfModel {
            vocabulary: Vocabulary::from_sorted_terms(terms, data.max_n),
            idf,
            document_count: data.document_count,
        })
    }
}

impl TfIdfModel {
    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn document_count(&self) -> usize {
        self.document_count
    }

    pub fn dim(&self) -> usize {
        self.vocabulary.size()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file =
            std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        serde_json::to_writer(file, self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file =
            std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(serde_json::from_reader(file)?)
    }
}

/// Fit a TF-IDF model over a tokenized corpus. Every n-gram (n <= max_n)
/// occurring at least once enters the vocabulary.
pub fn fit_tfidf(corpus: &[TokenSequence], max_n: usize) -> Result<TfIdfModel> {
    if corpus.is_empty() {
        return Err(Error::Input("cannot fit tf-idf on an empty corpus".into()));
    }
    let mut document_frequency: HashMap<String, usize> = HashMap::new();
    for doc in corpus {
        let mut grams = ngrams(doc, max_n)?;
        grams.sort_unstable();
        grams.dedup();
        for gram in grams {
            *document_frequency.entry(gram).or_insert(0) += 1;
        }
    }

    let mut terms: Vec<String> = document_frequency.keys().cloned().collect();
    terms.sort_unstable();

    let n_docs = corpus.len();
    let idf = terms
        .iter()
        .map(|term| {
            let df = document_frequency[term];
            ((1 + n_docs) as f64 / (1 + df) as f64).ln() + 1.0
        })
        .collect();

    Ok(TfIdfModel {
        vocabulary: Vocabulary::from_sorted_terms(terms, max_n),
        idf,
        document_count: n_docs,
    })
}

/// Transform one document: raw n-gram counts times idf, L2-normalized.
/// Terms outside the vocabulary are dropped; an all-unseen document maps to
/// the empty vector.
pub fn transform_tfidf(doc: &TokenSequence, model: &TfIdfModel) -> SparseVector {
    let grams = match ngrams(doc, model.vocabulary.max_n) {
        Ok(grams) => grams,
        Err(_) => unreachable!("fitted models always carry a valid max_n"),
    };

    let mut counts: std::collections::BTreeMap<usize, usize> = std::collections::BTreeMap::new();
    for gram in &grams {
        if let Some(index) = model.vocabulary.index_of(gram) {
            *counts.entry(index).or_insert(0) += 1;
        }
    }
    if counts.is_empty() {
        return SparseVector::empty(model.dim());
    }

    let mut entries: Vec<(usize, f64)> = counts
        .into_iter()
        .map(|(index, count)| (index, count as f64 * model.idf[index]))
        .collect();
    let norm = entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
    for (_, value) in &mut entries {
        *value /= norm;
    }
    SparseVector {
        entries,
        dim: model.dim(),
    }
}

/// Word-to-vector table loaded from GloVe text format, with a zero-vector
/// fallback for out-of-vocabulary words.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    vectors: HashMap<String, Vec<f64>>,
    dim: usize,
    fallback: Vec<f64>,
}

impl EmbeddingTable {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.vectors.contains_key(word)
    }

    /// The word's vector, or the zero fallback when absent.
    pub fn lookup(&self, word: &str) -> &[f64] {
        self.vectors.get(word).map_or(&self.fallback, Vec::as_slice)
    }
}

/// Parse a whitespace-separated embedding file: one word followed by
/// `expected_dim` reals per line.
pub fn load_glove(path: &Path, expected_dim: usize) -> Result<EmbeddingTable> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let reader = std::io::BufReader::new(file);

    let mut vectors = HashMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let word = fields.next().expect("non-empty line has a first field");
        let values: Vec<f64> = fields
            .map(|field| {
                field.parse::<f64>().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    message: format!("bad embedding value {field:?}"),
                })
            })
            .collect::<Result<_>>()?;
        if values.len() != expected_dim {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!("expected {expected_dim} dimensions, found {}", values.len()),
            });
        }
        vectors.insert(word.to_string(), values);
    }

    Ok(EmbeddingTable {
        vectors,
        dim: expected_dim,
        fallback: vec![0.0; expected_dim],
    })
}

/// Fixed-length per-headline embedding matrix: `max_len` rows of `dim`
/// reals, with a mask marking which rows hold real tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceMatrix {
    rows: Vec<Vec<f64>>,
    mask: Vec<bool>,
    dim: usize,
}

impl SequenceMatrix {
    pub fn max_len(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }
}

/// Embed the first `min(|doc|, max_len)` tokens; remaining rows are zero.
pub fn embed_sequence(
    doc: &TokenSequence,
    table: &EmbeddingTable,
    max_len: usize,
) -> Result<SequenceMatrix> {
    if max_len == 0 {
        return Err(Error::Input(
            "max sequence length must be at least 1".into(),
        ));
    }
    let mut rows = Vec::with_capacity(max_len);
    let mut mask = Vec::with_capacity(max_len);
    for slot in 0..max_len {
        match doc.tokens().get(slot) {
            Some(token) => {
                rows.push(table.lookup(token).to_vec());
                mask.push(true);
            }
            None => {
                rows.push(vec![0.0; table.dim()]);
                mask.push(false);
            }
        }
    }
    Ok(SequenceMatrix {
        rows,
        mask,
        dim: table.dim(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn seq(words: &[&str]) -> TokenSequence {
        TokenSequence::new(words.iter().map(|w| w.to_string()).collect())
    }

    #[test]
    fn fit_assigns_lexicographic_indices_and_smoothed_idf() {
        let corpus = vec![seq(&["gold", "up"]), seq(&["gold", "down"])];
        let model = fit_tfidf(&corpus, 1).unwrap();
        assert_eq!(model.vocabulary().index_of("down"), Some(0));
        assert_eq!(model.vocabulary().index_of("gold"), Some(1));
        assert_eq!(model.vocabulary().index_of("up"), Some(2));
        // Frozen from the formula: idf = ln((1+N)/(1+df)) + 1.
        assert!((model.idf()[1] - 1.0).abs() < 1e-15);
        assert!((model.idf()[2] - 1.405_465_108_108_164_4).abs() < 1e-12);
        assert!((model.idf()[0] - model.idf()[2]).abs() < 1e-15);
    }

    #[test]
    fn single_document_corpus_has_unit_idf() {
        let model = fit_tfidf(&[seq(&["gold", "steady"])], 1).unwrap();
        for &idf in model.idf() {
            assert!((idf - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn identical_documents_have_uniform_idf() {
        let corpus = vec![seq(&["gold", "up"]); 5];
        let model = fit_tfidf(&corpus, 2).unwrap();
        let first = model.idf()[0];
        for &idf in model.idf() {
            assert_eq!(idf, first);
        }
    }

    #[test]
    fn fit_rejects_empty_corpus() {
        assert!(fit_tfidf(&[], 1).is_err());
    }

    #[test]
    fn transform_matches_frozen_fixture() {
        let corpus = vec![seq(&["gold", "up"]), seq(&["gold", "down"])];
        let model = fit_tfidf(&corpus, 1).unwrap();
        let vector = transform_tfidf(&seq(&["gold", "gold", "up"]), &model);
        // Frozen before the build from the dense computation.
        let entries = vector.entries();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].0, 1); // gold
        assert_eq!(entries[1].0, 2); // up
        assert!((entries[0].1 - 0.818_180_207_366_719_7).abs() < 1e-12);
        assert!((entries[1].1 - 0.574_961_866_799_313_5).abs() < 1e-12);
        assert!((vector.l2_norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn transform_drops_unseen_terms() {
        let model = fit_tfidf(&[seq(&["gold", "up"])], 1).unwrap();
        let vector = transform_tfidf(&seq(&["silver", "palladium"]), &model);
        assert!(vector.is_empty());
        assert_eq!(vector.dim(), 2);
    }

    #[test]
    fn transform_single_term_doc_normalizes_to_one() {
        let model = fit_tfidf(&[seq(&["gold"]), seq(&["gold", "up"])], 1).unwrap();
        let vector = transform_tfidf(&seq(&["gold"]), &model);
        assert_eq!(vector.entries().len(), 1);
        assert!((vector.entries()[0].1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn vocabulary_is_corpus_order_independent() {
        let a = vec![
            seq(&["gold", "up"]),
            seq(&["silver", "down"]),
            seq(&["oil"]),
        ];
        let mut b = a.clone();
        b.reverse();
        let model_a = fit_tfidf(&a, 2).unwrap();
        let model_b = fit_tfidf(&b, 2).unwrap();
        assert_eq!(model_a.vocabulary().terms(), model_b.vocabulary().terms());
        assert_eq!(model_a.idf(), model_b.idf());
    }

    #[test]
    fn model_round_trips_through_json() {
        let corpus = vec![seq(&["gold", "up", "today"]), seq(&["gold", "down"])];
        let model = fit_tfidf(&corpus, 2).unwrap();
        let json = serde_json::to_string(&model).unwrap();
        let reloaded: TfIdfModel = serde_json::from_str(&json).unwrap();
        assert_eq!(model.vocabulary().terms(), reloaded.vocabulary().terms());
        assert_eq!(model.idf(), reloaded.idf());
        assert_eq!(model.document_count(), reloaded.document_count());
    }

    #[test]
    fn model_json_rejects_tampered_fields() {
        let corpus = vec![seq(&["gold", "up"]), seq(&["gold", "down"])];
        let model = fit_tfidf(&corpus, 2).unwrap();
        let json = serde_json::to_string(&model).unwrap();

        let bad_order = json.replacen("\"max_n\":2", "\"max_n\":9", 1);
        assert!(serde_json::from_str::<TfIdfModel>(&bad_order).is_err());

        let duplicated_index = json.replacen("\"index\":1", "\"index\":0", 1);
        assert!(serde_json::from_str::<TfIdfModel>(&duplicated_index).is_err());
    }

    #[test]
    fn sparse_vector_validates_entries() {
        assert!(SparseVector::new(vec![(0, 1.0), (2, 0.5)], 3).is_ok());
        assert!(SparseVector::new(vec![(2, 1.0), (0, 0.5)], 3).is_err());
        assert!(SparseVector::new(vec![(0, 0.0)], 3).is_err());
        assert!(SparseVector::new(vec![(3, 1.0)], 3).is_err());
    }

    fn write_temp(contents: &str) -> tempfile::NamedTempFile {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(contents.as_bytes()).unwrap();
        file
    }

    #[test]
    fn glove_loads_small_table() {
        let file = write_temp("up 0.1 0.2\ndown 0.3 0.4\n");
        let table = load_glove(file.path(), 2).unwrap();
        assert_eq!(table.len(), 2);
        assert_eq!(table.lookup("up"), &[0.1, 0.2]);
        assert_eq!(table.lookup("absent"), &[0.0, 0.0]);
    }

    #[test]
    fn glove_rejects_dimension_mismatch_with_line_number() {
        let file = write_temp("up 0.1 0.2\ndown 0.3 0.4 0.5\n");
        match load_glove(file.path(), 2) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn embed_sequence_truncates_and_masks() {
        let file = write_temp("up 1.0 0.0\ndown 0.0 1.0\n");
        let table = load_glove(file.path(), 2).unwrap();

        let short = embed_sequence(&seq(&["up", "down"]), &table, 4).unwrap();
        assert_eq!(short.mask(), &[true, true, false, false]);
        assert_eq!(short.row(0), &[1.0, 0.0]);
        assert_eq!(short.row(2), &[0.0, 0.0]);

        let long =
            embed_sequence(&seq(&["up", "down", "up", "up", "down", "down"]), &table, 4).unwrap();
        assert_eq!(long.max_len(), 4);
        assert_eq!(long.mask(), &[true, true, true, true]);

        let empty = embed_sequence(&seq(&[]), &table, 3).unwrap();
        assert_eq!(empty.mask(), &[false, false, false]);

        assert!(embed_sequence(&seq(&["up"]), &table, 0).is_err());
    }
}
