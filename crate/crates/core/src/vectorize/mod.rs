//! Tokenization, vocabularies, bag-of-words / TF-IDF matrices and pixel flattening.

mod sparse;

use std::collections::{BTreeMap, HashSet};
use std::sync::OnceLock;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mnist::{ImageSet, PIXELS};
use crate::newsgroups::Corpus;
use crate::par::Exec;

pub use sparse::{read_dense_triplets, write_dense_triplets, CsrMatrix};

#[derive(Debug, Error, PartialEq)]
pub enum VectorizeError {
    #[error("document-frequency filtering removed every term")]
    EmptyVocabulary,
    #[error("invalid vectorizer config: {0}")]
    InvalidConfig(String),
}

static STOPWORDS: OnceLock<HashSet<&'static str>> = OnceLock::new();

/// The shipped English stopword list.
pub fn stopwords() -> &'static HashSet<&'static str> {
    STOPWORDS.get_or_init(|| include_str!("stopwords.txt").lines().filter(|l| !l.is_empty()).collect())
}

/// Splits `text` into lowercase alphanumeric tokens.
///
/// Tokens shorter than two characters and purely numeric tokens longer than
/// six digits are dropped; stopwords are dropped when `drop_stopwords` is set.
pub fn tokenize(text: &str, drop_stopwords: bool) -> Vec<String> {
    let lower = text.to_lowercase();
    lower
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2)
        .filter(|t| !(t.len() > 6 && t.chars().all(|c| c.is_ascii_digit())))
        .filter(|t| !drop_stopwords || !stopwords().contains(t))
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub terms: Vec<String>,
    pub document_frequency: Vec<usize>,
    pub n_documents: usize,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.terms.binary_search_by(|t| t.as_str().cmp(term)).ok()
    }

    /// Smoothed inverse document frequency `ln((1+N)/(1+df)) + 1`.
    pub fn idf(&self, term_index: usize) -> f64 {
        let n = self.n_documents as f64;
        let df = self.document_frequency[term_index] as f64;
        ((1.0 + n) / (1.0 + df)).ln() + 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    Counts,
    #[default]
    Tfidf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowNorm {
    None,
    #[default]
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuoteLines {
    Include,
    #[default]
    Exclude,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VectorizerConfig {
    pub min_df: usize,
    pub max_df_fraction: f64,
    pub stopwords: bool,
    pub quote_lines: QuoteLines,
    pub weighting: Weighting,
    pub row_norm: RowNorm,
}

impl Default for VectorizerConfig {
    fn default() -> Self {
        VectorizerConfig {
            min_df: 5,
            max_df_fraction: 0.5,
            stopwords: true,
            quote_lines: QuoteLines::Exclude,
            weighting: Weighting::Tfidf,
            row_norm: RowNorm::L2,
        }
    }
}

impl VectorizerConfig {
    /// Raw integer counts without normalization, as topic samplers need.
    pub fn counts() -> Self {
        VectorizerConfig {
            weighting: Weighting::Counts,
            row_norm: RowNorm::None,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<(), VectorizeError> {
        if self.min_df < 1 {
            return Err(VectorizeError::InvalidConfig("min_df must be at least 1".into()));
        }
        if self.max_df_fraction == 0.0 || !(0.0..=1.0).contains(&self.max_df_fraction) {
            return Err(VectorizeError::InvalidConfig("max_df_fraction must be in (0, 1]".into()));
        }
        Ok(())
    }
}

/// A weighted document-term matrix together with its row identities.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSpace {
    pub vocabulary: Vocabulary,
    pub matrix: CsrMatrix,
    pub weighting: Weighting,
    pub row_norm: RowNorm,
    pub ids: Vec<u64>,
    pub labels: Vec<String>,
}

impl VectorSpace {
    pub fn n_documents(&self) -> usize {
        self.matrix.rows()
    }

    /// True when every stored value is a nonnegative integer.
    pub fn is_integer_counts(&self) -> bool {
        self.weighting == Weighting::Counts
            && self.row_norm == RowNorm::None
            && self.matrix.values().iter().all(|v| *v >= 0.0 && v.fract() == 0.0)
    }
}

/// Builds a vector space from raw texts. `ids`, `labels` and `texts` are parallel.
pub fn build_from_texts(
    ids: Vec<u64>,
    labels: Vec<String>,
    texts: &[String],
    config: &VectorizerConfig,
    exec: Exec,
) -> Result<VectorSpace, VectorizeError> {
    config.validate()?;
    assert_eq!(ids.len(), texts.len());
    assert_eq!(labels.len(), texts.len());
    let n = texts.len();

    let token_counts: Vec<BTreeMap<String, u32>> = exec.map_slice(texts, |t| {
        let mut counts = BTreeMap::new();
        for tok in tokenize(t, config.stopwords) {
            *counts.entry(tok).or_insert(0) += 1;
        }
        counts
    });

    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in &token_counts {
        for term in doc.keys() {
            *df.entry(term.as_str()).or_insert(0) += 1;
        }
    }
    let max_df = config.max_df_fraction * n as f64;
    let (terms, dfs): (Vec<String>, Vec<usize>) = df
        .into_iter()
        .filter(|&(_, d)| d >= config.min_df && d as f64 <= max_df)
        .map(|(t, d)| (t.to_string(), d))
        .unzip();
    if terms.is_empty() {
        return Err(VectorizeError::EmptyVocabulary);
    }
    let vocabulary = Vocabulary {
        terms,
        document_frequency: dfs,
        n_documents: n,
    };

    let rows: Vec<Vec<(usize, f64)>> = exec.map_slice(&token_counts, |doc| {
        let mut row: Vec<(usize, f64)> = doc
            .iter()
            .filter_map(|(t, &c)| vocabulary.index_of(t).map(|i| (i, c as f64)))
            .collect();
        if config.weighting == Weighting::Tfidf {
            for (i, v) in row.iter_mut() {
                *v *= vocabulary.idf(*i);
            }
        }
        if config.row_norm == RowNorm::L2 {
            let norm = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|(_, v)| *v /= norm);
            }
        }
        row
    });

    Ok(VectorSpace {
        matrix: CsrMatrix::from_rows(vocabulary.len(), rows),
        vocabulary,
        weighting: config.weighting,
        row_norm: config.row_norm,
        ids,
        labels,
    })
}

/// Vectorizes document bodies; quote lines are skipped under `QuoteLines::Exclude`.
pub fn build_vector_space(corpus: &Corpus, config: &VectorizerConfig) -> Result<VectorSpace, VectorizeError> {
    build_vector_space_with(corpus, config, Exec::default())
}

pub fn build_vector_space_with(
    corpus: &Corpus,
    config: &VectorizerConfig,
    exec: Exec,
) -> Result<VectorSpace, VectorizeError> {
    let include = config.quote_lines == QuoteLines::Include;
    let texts = exec.map_slice(&corpus.documents, |d| d.body_text(include));
    let ids = corpus.documents.iter().map(|d| d.id).collect();
    let labels = corpus.documents.iter().map(|d| d.label.clone()).collect();
    build_from_texts(ids, labels, &texts, config, exec)
}

/// `N x 784` matrix of row-major pixels scaled to `[0, 1]`.
pub fn flatten_images(set: &ImageSet) -> Array2<f64> {
    let mut out = Array2::zeros((set.len(), PIXELS));
    for (mut row, s) in out.outer_iter_mut().zip(&set.samples) {
        for (dst, &p) in row.iter_mut().zip(&s.pixels) {
            *dst = p as f64 / 255.0;
        }
    }
    out
}
