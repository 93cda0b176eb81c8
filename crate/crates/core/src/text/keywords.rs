//! Guideline keyword extraction for the TF-IDF side channel.

use std::collections::HashSet;
use std::path::Path;

use log::warn;

use super::tfidf::TfidfModel;
use super::tokenize::{token_strings, NUM_TOKEN};
use crate::corpus::CodeCatalog;
use crate::error::{Error, Result};

const STOPWORDS: &[&str] = &[
    "a", "about", "after", "all", "also", "an", "and", "any", "are", "as", "at", "be", "been",
    "before", "but", "by", "can", "do", "does", "each", "for", "from", "has", "have", "if", "in",
    "into", "is", "it", "its", "may", "more", "most", "no", "not", "of", "on", "or", "other",
    "should", "such", "than", "that", "the", "their", "them", "then", "there", "these", "they",
    "this", "to", "under", "used", "was", "were", "when", "which", "while", "who", "will", "with",
    "within", "without",
];

/// Guideline text for one code; `None` when the code has no guideline.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Guideline {
    pub code: String,
    pub text: Option<String>,
}

fn content_tokens(text: &str) -> Vec<String> {
    token_strings(text)
        .into_iter()
        .filter(|t| t != NUM_TOKEN && t.chars().count() > 1 && !STOPWORDS.contains(&t.as_str()))
        .collect()
}

/// Per code, the `top_k` guideline tokens by tf-idf against the guideline
/// corpus, unioned in catalog order. Ties break lexicographically.
pub fn extract_guideline_keywords(guidelines: &[Guideline], top_k: usize) -> Result<Vec<String>> {
    if top_k == 0 {
        return Ok(Vec::new());
    }
    let docs: Vec<(&str, Vec<String>)> = guidelines
        .iter()
        .filter_map(|g| match &g.text {
            Some(text) => Some((g.code.as_str(), content_tokens(text))),
            None => {
                warn!("no guideline for {}; it contributes no keywords", g.code);
                None
            }
        })
        .collect();
    if docs.is_empty() {
        return Ok(Vec::new());
    }

    let mut vocabulary: Vec<String> = docs.iter().flat_map(|(_, d)| d.iter().cloned()).collect();
    vocabulary.sort();
    vocabulary.dedup();
    let token_docs: Vec<&Vec<String>> = docs.iter().map(|(_, d)| d).collect();
    let model = TfidfModel::fit(&vocabulary, &token_docs)?;

    let mut seen = HashSet::new();
    let mut terms = Vec::new();
    for (_, doc) in &docs {
        let weights = model.raw_weights(doc);
        let mut ranked: Vec<(usize, f64)> = weights.into_iter().enumerate().filter(|(_, w)| *w > 0.0).collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| vocabulary[a.0].cmp(&vocabulary[b.0])));
        for (i, _) in ranked.into_iter().take(top_k) {
            if seen.insert(i) {
                terms.push(vocabulary[i].clone());
            }
        }
    }
    Ok(terms)
}

const BUNDLED: [(&str, &str); 5] = [
    ("I10", include_str!("../../fixtures/guidelines/I10.txt")),
    ("I50.9", include_str!("../../fixtures/guidelines/I50.9.txt")),
    ("N17.9", include_str!("../../fixtures/guidelines/N17.9.txt")),
    ("E11.9", include_str!("../../fixtures/guidelines/E11.9.txt")),
    ("D64.9", include_str!("../../fixtures/guidelines/D64.9.txt")),
];

/// Bundled guideline fixtures for the catalog's codes; codes without a
/// fixture get `None`.
pub fn bundled_guidelines(catalog: &CodeCatalog) -> Vec<Guideline> {
    catalog
        .entries()
        .iter()
        .map(|e| Guideline {
            code: e.code.clone(),
            text: BUNDLED.iter().find(|(c, _)| *c == e.code).map(|(_, t)| t.to_string()),
        })
        .collect()
}

/// Reads `<dir>/<code>.txt` for every catalog code.
pub fn load_guidelines(dir: impl AsRef<Path>, catalog: &CodeCatalog) -> Result<Vec<Guideline>> {
    let dir = dir.as_ref();
    if !dir.is_dir() {
        return Err(Error::MissingFile(dir.to_path_buf()));
    }
    catalog
        .entries()
        .iter()
        .map(|e| {
            let path = dir.join(format!("{}.txt", e.code));
            let text = if path.is_file() {
                Some(std::fs::read_to_string(&path).map_err(|err| Error::io(&path, err))?)
            } else {
                None
            };
            Ok(Guideline {
                code: e.code.clone(),
                text,
            })
        })
        .collect()
}

/// One term per line.
pub fn write_term_list(path: impl AsRef<Path>, terms: &[String]) -> Result<()> {
    let path = path.as_ref();
    let mut body = terms.join("\n");
    if !body.is_empty() {
        body.push('\n');
    }
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

pub fn read_term_list(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(body.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metformin_is_a_diabetes_keyword() {
        let guidelines = bundled_guidelines(&CodeCatalog::fixture_5());
        let terms = extract_guideline_keywords(&guidelines, 5).unwrap();
        assert!(terms.iter().any(|t| t == "metformin"), "{terms:?}");
    }

    #[test]
    fn zero_k_gives_no_terms() {
        let guidelines = bundled_guidelines(&CodeCatalog::fixture_5());
        assert!(extract_guideline_keywords(&guidelines, 0).unwrap().is_empty());
    }

    #[test]
    fn deterministic_order() {
        let guidelines = bundled_guidelines(&CodeCatalog::fixture_5());
        assert_eq!(
            extract_guideline_keywords(&guidelines, 8).unwrap(),
            extract_guideline_keywords(&guidelines, 8).unwrap()
        );
    }

    #[test]
    fn missing_guideline_contributes_nothing() {
        let guidelines = vec![
            Guideline {
                code: "A".into(),
                text: Some("alpha alpha beta".into()),
            },
            Guideline { code: "B".into(), text: None },
            Guideline {
                code: "C".into(),
                text: Some("gamma beta".into()),
            },
        ];
        let terms = extract_guideline_keywords(&guidelines, 1).unwrap();
        assert_eq!(terms, vec!["alpha", "gamma"]);
    }

    #[test]
    fn term_list_file_round_trip() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("terms.txt");
        let terms = vec!["metformin".to_string(), "heart failure".to_string()];
        write_term_list(&path, &terms).unwrap();
        assert_eq!(read_term_list(&path).unwrap(), terms);
    }
}
