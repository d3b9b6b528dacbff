use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::porter::porter_stem;

const STOPWORDS: &str = include_str!("../../data/stopwords.txt");

pub fn builtin_stopwords() -> BTreeSet<String> {
    STOPWORDS
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

/// Sparse row sorted by column index.
pub type SparseRow = Vec<(u32, f64)>;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub rows: Vec<SparseRow>,
    pub n_cols: usize,
}

impl FeatureMatrix {
    pub fn new(rows: Vec<SparseRow>, n_cols: usize) -> Result<Self> {
        for row in &rows {
            if row.iter().any(|&(j, v)| j as usize >= n_cols || !v.is_finite()) {
                return Err(Error::Invalid(
                    "feature row has out-of-range column or non-finite value".into(),
                ));
            }
            if row.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err(Error::Invalid("feature row columns must be strictly increasing".into()));
            }
        }
        Ok(FeatureMatrix { rows, n_cols })
    }

    /// Builds a matrix from dense rows, dropping zeros.
    pub fn from_dense(dense: &[Vec<f64>]) -> Result<Self> {
        let n_cols = dense.first().map_or(0, Vec::len);
        if dense.iter().any(|r| r.len() != n_cols) {
            return Err(Error::Invalid("dense rows differ in length".into()));
        }
        let rows = dense
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(j, v)| (j as u32, *v))
                    .collect()
            })
            .collect();
        Self::new(rows, n_cols)
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn subset(&self, idx: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            n_cols: self.n_cols,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TfidfConfig {
    pub ngram_max: usize,
    pub min_df: usize,
    pub stem: bool,
    pub stopwords: BTreeSet<String>,
}

impl Default for TfidfConfig {
    fn default() -> Self {
        TfidfConfig {
            ngram_max: 3,
            min_df: 2,
            stem: true,
            stopwords: builtin_stopwords(),
        }
    }
}

/// Fitted n-gram vocabulary with smoothed idf weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "TfidfRepr", into = "TfidfRepr")]
pub struct TfidfModel {
    terms: Vec<String>,
    idf: Vec<f64>,
    index: HashMap<String, u32>,
    ngram_max: usize,
    stem: bool,
    stopwords: BTreeSet<String>,
    n_docs: usize,
}

#[derive(Serialize, Deserialize)]
struct TfidfRepr {
    terms: Vec<String>,
    idf: Vec<f64>,
    ngram_max: usize,
    stem: bool,
    stopwords: BTreeSet<String>,
    n_docs: usize,
}

impl From<TfidfRepr> for TfidfModel {
    fn from(r: TfidfRepr) -> Self {
        let index = r.terms.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        TfidfModel {
            terms: r.terms,
            idf: r.idf,
            index,
            ngram_max: r.ngram_max,
            stem: r.stem,
            stopwords: r.stopwords,
            n_docs: r.n_docs,
        }
    }
}

impl From<TfidfModel> for TfidfRepr {
    fn from(m: TfidfModel) -> Self {
        TfidfRepr {
            terms: m.terms,
            idf: m.idf,
            ngram_max: m.ngram_max,
            stem: m.stem,
            stopwords: m.stopwords,
            n_docs: m.n_docs,
        }
    }
}

fn analyze(tokens: &[String], ngram_max: usize, stem: bool, stopwords: &BTreeSet<String>) -> Vec<String> {
    let kept: Vec<String> = tokens
        .iter()
        .filter(|t| !stopwords.contains(t.as_str()))
        .map(|t| if stem { porter_stem(t) } else { t.clone() })
        .collect();
    let mut grams = Vec::new();
    for n in 1..=ngram_max.max(1) {
        for w in kept.windows(n) {
            grams.push(w.join(" "));
        }
    }
    grams
}

impl TfidfModel {
    pub fn fit(docs: &[Vec<String>], cfg: &TfidfConfig) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::Invalid("cannot fit a featurizer on an empty corpus".into()));
        }
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for doc in docs {
            let grams: BTreeSet<String> = analyze(doc, cfg.ngram_max, cfg.stem, &cfg.stopwords)
                .into_iter()
                .collect();
            for g in grams {
                *df.entry(g).or_default() += 1;
            }
        }
        let n = docs.len() as f64;
        let (terms, idf): (Vec<String>, Vec<f64>) = df
            .into_iter()
            .filter(|(_, d)| *d >= cfg.min_df)
            .map(|(t, d)| (t, ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0))
            .unzip();
        if terms.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        Ok(TfidfRepr {
            terms,
            idf,
            ngram_max: cfg.ngram_max,
            stem: cfg.stem,
            stopwords: cfg.stopwords.clone(),
            n_docs: docs.len(),
        }
        .into())
    }

    pub fn fit_transform(docs: &[Vec<String>], cfg: &TfidfConfig) -> Result<(Self, FeatureMatrix)> {
        let model = Self::fit(docs, cfg)?;
        let x = model.transform_many(docs);
        Ok((model, x))
    }

    /// L2-normalized tf-idf row; out-of-vocabulary n-grams are ignored.
    pub fn transform(&self, tokens: &[String]) -> SparseRow {
        let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
        for g in analyze(tokens, self.ngram_max, self.stem, &self.stopwords) {
            if let Some(&j) = self.index.get(&g) {
                *counts.entry(j).or_default() += 1.0;
            }
        }
        let mut row: SparseRow = counts
            .into_iter()
            .map(|(j, tf)| (j, tf * self.idf[j as usize]))
            .collect();
        let norm = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, v) in &mut row {
                *v /= norm;
            }
        }
        row
    }

    pub fn transform_many(&self, docs: &[Vec<String>]) -> FeatureMatrix {
        FeatureMatrix {
            rows: docs.iter().map(|d| self.transform(d)).collect(),
            n_cols: self.terms.len(),
        }
    }

    pub fn n_features(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn column(&self, term: &str) -> Option<usize> {
        self.index.get(term).map(|&j| j as usize)
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn docs(texts: &[&str]) -> Vec<Vec<String>> {
        texts
            .iter()
            .map(|t| t.split_whitespace().map(str::to_string).collect())
            .collect()
    }

    fn unigram(min_df: usize) -> TfidfConfig {
        TfidfConfig {
            ngram_max: 1,
            min_df,
            stem: false,
            stopwords: builtin_stopwords(),
        }
    }

    #[test]
    fn two_doc_hand_arithmetic() {
        let corpus = docs(&["buy buy", "sell"]);
        let (m, x) = TfidfModel::fit_transform(&corpus, &unigram(1)).unwrap();
        assert_eq!(m.terms(), ["buy", "sell"]);
        let idf = (3.0f64 / 2.0).ln() + 1.0;
        assert_abs_diff_eq!(m.idf()[0], idf, epsilon = 1e-15);
        assert_eq!(x.rows[0], vec![(0, 1.0)]);

        // two terms with different idf in one row
        let corpus = docs(&["buy buy sell", "sell"]);
        let (m, x) = TfidfModel::fit_transform(&corpus, &unigram(1)).unwrap();
        let idf_buy = 1.5f64.ln() + 1.0;
        let (a, b) = (2.0 * idf_buy, 1.0);
        let norm = (a * a + b * b).sqrt();
        assert_abs_diff_eq!(m.idf()[1], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x.rows[0][0].1, a / norm, epsilon = 1e-12);
        assert_abs_diff_eq!(x.rows[0][1].1, b / norm, epsilon = 1e-12);
    }

    #[test]
    fn term_in_every_doc_has_unit_idf() {
        let (m, _) = TfidfModel::fit_transform(&docs(&["moon x", "moon y", "moon"]), &unigram(1)).unwrap();
        assert_eq!(m.idf()[m.column("moon").unwrap()], 1.0);
    }

    #[test]
    fn stopwords_removed_and_stemming_applied() {
        let cfg = TfidfConfig {
            min_df: 1,
            ..TfidfConfig::default()
        };
        let (m, _) = TfidfModel::fit_transform(&docs(&["the stock is trading higher", "the stock"]), &cfg).unwrap();
        assert!(m.column("the").is_none());
        assert!(m.column("trade").is_some());
        assert!(m.column("stock trade higher").is_some());
        assert!(m.column("stock trade").is_some());
    }

    #[test]
    fn min_df_filters_and_empty_vocab_errors() {
        let (m, _) = TfidfModel::fit_transform(&docs(&["buy sell", "buy"]), &unigram(2)).unwrap();
        assert_eq!(m.terms(), ["buy"]);
        assert!(matches!(
            TfidfModel::fit(&docs(&["the", "and"]), &unigram(1)),
            Err(Error::EmptyVocabulary)
        ));
        assert!(TfidfModel::fit(&[], &unigram(1)).is_err());
    }

    #[test]
    fn rows_are_unit_norm_or_empty() {
        let corpus = docs(&["buy now moon", "sell now", "hold", "zzz"]);
        let (m, x) = TfidfModel::fit_transform(
            &corpus,
            &TfidfConfig {
                min_df: 1,
                ..Default::default()
            },
        )
        .unwrap();
        for row in &x.rows {
            let n: f64 = row.iter().map(|(_, v)| v * v).sum();
            assert!(row.is_empty() || (n - 1.0).abs() < 1e-12);
        }
        assert!(m.transform(&docs(&["unseen words"])[0]).is_empty());
        assert!(m.idf().iter().all(|v| v.is_finite() && *v > 0.0));
    }

    #[test]
    fn serde_round_trip_keeps_index() {
        let (m, x) = TfidfModel::fit_transform(&docs(&["buy buy", "sell"]), &unigram(1)).unwrap();
        let back: TfidfModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back.transform_many(&docs(&["buy buy", "sell"])), x);
    }

    #[test]
    fn feature_matrix_validation() {
        assert!(FeatureMatrix::new(vec![vec![(2, 1.0)]], 2).is_err());
        assert!(FeatureMatrix::new(vec![vec![(1, 1.0), (0, 1.0)]], 2).is_err());
        let m = FeatureMatrix::from_dense(&[vec![0.0, 2.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(m.rows, vec![vec![(1, 2.0)], vec![(0, 1.0)]]);
    }
}
