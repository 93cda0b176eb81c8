use serde::{Deserialize, Serialize};

use super::tokenize::token_strings;
use crate::error::{Error, Result};

/// Dense TF-IDF weights aligned with a fixed term list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TfidfVector {
    pub weights: Vec<f64>,
    pub unit_l2: bool,
}

impl TfidfVector {
    pub fn norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }
}

/// Smoothed inverse document frequencies for a term list.
///
/// `weight(t, d) = tf(t, d) * (ln((1 + N) / (1 + df(t))) + 1)`, then the
/// vector is L2-normalized. A term may span several tokens; its frequency
/// counts contiguous occurrences.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    terms: Vec<String>,
    idf: Vec<f64>,
    n_documents: usize,
    #[serde(skip)]
    term_tokens: Vec<Vec<String>>,
}

fn term_frequency(doc: &[String], term: &[String]) -> usize {
    if term.is_empty() || term.len() > doc.len() {
        return 0;
    }
    doc.windows(term.len()).filter(|w| *w == term).count()
}

impl TfidfModel {
    /// Fits document frequencies on tokenized training documents.
    pub fn fit<D: AsRef<[String]>>(terms: &[String], documents: &[D]) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidArgument("TF-IDF term list is empty".into()));
        }
        let term_tokens: Vec<Vec<String>> = terms.iter().map(|t| token_strings(t)).collect();
        let n = documents.len();
        let idf = term_tokens
            .iter()
            .map(|tt| {
                let df = documents
                    .iter()
                    .filter(|d| term_frequency(d.as_ref(), tt) > 0)
                    .count();
                ((1.0 + n as f64) / (1.0 + df as f64)).ln() + 1.0
            })
            .collect();
        Ok(TfidfModel {
            terms: terms.to_vec(),
            idf,
            n_documents: n,
            term_tokens,
        })
    }

    /// Rebuilds a model from persisted terms and idf values.
    pub fn from_parts(terms: Vec<String>, idf: Vec<f64>, n_documents: usize) -> Result<Self> {
        if terms.len() != idf.len() {
            return Err(Error::Shape(format!("{} terms but {} idf values", terms.len(), idf.len())));
        }
        let term_tokens = terms.iter().map(|t| token_strings(t)).collect();
        Ok(TfidfModel {
            terms,
            idf,
            n_documents,
            term_tokens,
        })
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn n_documents(&self) -> usize {
        self.n_documents
    }

    pub fn dim(&self) -> usize {
        self.terms.len()
    }

    /// Unnormalized tf-idf weights of a tokenized document.
    pub fn raw_weights(&self, doc: &[String]) -> Vec<f64> {
        self.term_tokens
            .iter()
            .zip(&self.idf)
            .map(|(tt, idf)| term_frequency(doc, tt) as f64 * idf)
            .collect()
    }

    /// L2-normalized weights; an all-zero vector stays zero.
    pub fn transform(&self, doc: &[String]) -> TfidfVector {
        let mut weights = self.raw_weights(doc);
        let norm = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            weights.iter_mut().for_each(|w| *w /= norm);
        }
        TfidfVector { weights, unit_l2: true }
    }

    pub fn transform_text(&self, text: &str) -> TfidfVector {
        self.transform(&token_strings(text))
    }
}

/// Fits on `documents` and transforms the same documents.
pub fn compute_tfidf<D: AsRef<[String]>>(documents: &[D], terms: &[String]) -> Result<Vec<TfidfVector>> {
    let model = TfidfModel::fit(terms, documents)?;
    Ok(documents.iter().map(|d| model.transform(d.as_ref())).collect())
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn toks(s: &str) -> Vec<String> {
        token_strings(s)
    }

    // Independent counting oracle: loops over raw token positions.
    fn oracle(docs: &[Vec<String>], terms: &[&str]) -> Vec<Vec<f64>> {
        let n = docs.len() as f64;
        let count = |d: &Vec<String>, t: &str| d.iter().filter(|w| w.as_str() == t).count() as f64;
        let df: Vec<f64> = terms
            .iter()
            .map(|t| docs.iter().filter(|d| count(d, t) > 0.0).count() as f64)
            .collect();
        docs.iter()
            .map(|d| {
                let raw: Vec<f64> = terms
                    .iter()
                    .enumerate()
                    .map(|(k, t)| count(d, t) * (((1.0 + n) / (1.0 + df[k])).ln() + 1.0))
                    .collect();
                let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
                raw.iter().map(|x| if norm > 0.0 { x / norm } else { 0.0 }).collect()
            })
            .collect()
    }

    #[test]
    fn toy_corpus_matches_oracle() {
        let docs = vec![toks("renal failure renal"), toks("heart failure"), toks("renal stones pain")];
        let terms = ["renal", "failure", "pain", "absent"];
        let owned: Vec<String> = terms.iter().map(|s| s.to_string()).collect();
        let got = compute_tfidf(&docs, &owned).unwrap();
        let want = oracle(&docs, &terms);
        for (g, w) in got.iter().zip(&want) {
            for (a, b) in g.weights.iter().zip(w) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn ubiquitous_term_has_unit_idf() {
        let docs = vec![toks("sepsis a"), toks("sepsis b"), toks("sepsis sepsis")];
        let model = TfidfModel::fit(&["sepsis".to_string()], &docs).unwrap();
        assert!((model.idf()[0] - 1.0).abs() < 1e-15);
        assert_eq!(model.raw_weights(&docs[2]), vec![2.0]);
    }

    #[test]
    fn absent_term_weighs_zero() {
        let docs = vec![toks("a b"), toks("c")];
        let terms = vec!["a".to_string(), "c".to_string()];
        let v = compute_tfidf(&docs, &terms).unwrap();
        assert_eq!(v[0].weights[1], 0.0);
        assert_eq!(v[1].weights[0], 0.0);
    }

    #[test]
    fn multi_token_terms_count_contiguous_matches() {
        let docs = vec![toks("heart failure and heart rate failure")];
        let model = TfidfModel::fit(&["heart failure".to_string()], &docs).unwrap();
        assert_eq!(model.raw_weights(&docs[0])[0], model.idf()[0]);
    }

    #[test]
    fn empty_term_list_is_rejected() {
        assert!(compute_tfidf(&[toks("x")], &[]).is_err());
    }

    proptest! {
        #[test]
        fn oracle_equivalence(
            docs in prop::collection::vec(prop::collection::vec(0usize..12, 0..15), 1..10),
            terms in prop::collection::btree_set(0usize..15, 1..12),
        ) {
            let word = |i: &usize| format!("w{}", ["a","b","c","d","e","f","g","h","i","j","k","l","m","n","o"][*i]);
            let docs: Vec<Vec<String>> = docs.iter().map(|d| d.iter().map(word).collect()).collect();
            let term_names: Vec<String> = terms.iter().map(word).collect();
            let term_refs: Vec<&str> = term_names.iter().map(String::as_str).collect();
            let got = compute_tfidf(&docs, &term_names).unwrap();
            let want = oracle(&docs, &term_refs);
            for (g, w) in got.iter().zip(&want) {
                let norm = g.norm();
                prop_assert!(norm == 0.0 || (norm - 1.0).abs() < 1e-6);
                for (a, b) in g.weights.iter().zip(w) {
                    prop_assert!(*a >= 0.0);
                    prop_assert!((a - b).abs() < 1e-9);
                }
            }
        }
    }
}
