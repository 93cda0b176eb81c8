use std::path::Path;

use serde::{Deserialize, Serialize};

use super::influence::PhraseEvidence;
use super::jaccard::{jaccard_ids, jaccard_text};
use super::surrogate::FeatureEvidence;
use crate::error::{Error, Result};

/// Evidence for one predicted code of one admission.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvidenceReport {
    pub schema_version: u32,
    pub admission_id: String,
    pub code: String,
    pub probability: f64,
    pub phrases: Vec<PhraseEvidence>,
    pub features: Vec<FeatureEvidence>,
}

/// Physician-marked evidence for one (admission, code).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub admission_id: String,
    pub code_id: String,
    #[serde(default)]
    pub text_snippets: Vec<String>,
    #[serde(default)]
    pub feature_ids: Vec<String>,
}

/// Mean Jaccard agreement between reports and annotations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgreementSummary {
    pub pairs: usize,
    pub text_jaccard: f64,
    pub tabular_jaccard: f64,
}

pub fn read_annotations(path: impl AsRef<Path>) -> Result<Vec<Annotation>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|_| Error::MissingFile(path.to_path_buf()))?;
    Ok(serde_json::from_str(&text)?)
}

/// Scores every annotated (admission, code) that has a report; annotations
/// without a report are skipped.
pub fn agreement(reports: &[EvidenceReport], annotations: &[Annotation], threshold: f64) -> AgreementSummary {
    let (mut n, mut text, mut tab) = (0usize, 0.0, 0.0);
    for a in annotations {
        let Some(r) = reports.iter().find(|r| r.admission_id == a.admission_id && r.code == a.code_id) else {
            continue;
        };
        let phrases: Vec<&str> = r.phrases.iter().map(|p| p.phrase.as_str()).collect();
        let snippets: Vec<&str> = a.text_snippets.iter().map(String::as_str).collect();
        let features: Vec<String> = r.features.iter().map(|f| f.feature.to_string()).collect();
        text += jaccard_text(&phrases, &snippets, threshold);
        tab += jaccard_ids(&features, &a.feature_ids);
        n += 1;
    }
    let mean = |s: f64| if n == 0 { 0.0 } else { s / n as f64 };
    AgreementSummary {
        pairs: n,
        text_jaccard: mean(text),
        tabular_jaccard: mean(tab),
    }
}
