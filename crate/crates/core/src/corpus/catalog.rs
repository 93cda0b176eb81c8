use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One target code.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeEntry {
    pub code: String,
    pub description: String,
    #[serde(default)]
    pub synonyms: Vec<String>,
}

impl CodeEntry {
    pub fn new(code: impl Into<String>, description: impl Into<String>) -> Self {
        CodeEntry {
            code: code.into(),
            description: description.into(),
            synonyms: Vec::new(),
        }
    }

    /// Description followed by synonyms.
    pub fn positives(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.description.as_str()).chain(self.synonyms.iter().map(String::as_str))
    }
}

/// The ordered set of target codes. Position `j` in the catalog is column `j`
/// of every label vector and probability vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CatalogFile", into = "CatalogFile")]
pub struct CodeCatalog {
    entries: Vec<CodeEntry>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct CatalogFile {
    schema_version: u32,
    codes: Vec<CodeEntry>,
}

impl TryFrom<CatalogFile> for CodeCatalog {
    type Error = Error;

    fn try_from(file: CatalogFile) -> Result<Self> {
        CodeCatalog::new(file.codes)
    }
}

impl From<CodeCatalog> for CatalogFile {
    fn from(catalog: CodeCatalog) -> Self {
        CatalogFile {
            schema_version: crate::SCHEMA_VERSION,
            codes: catalog.entries,
        }
    }
}

/// ICD-10 codes commonly assigned in ICU admissions, with their official
/// short descriptions.
const ICD10_32: [(&str, &str); 32] = [
    ("I10", "Essential (primary) hypertension"),
    ("I50.9", "Heart failure, unspecified"),
    ("I48.91", "Unspecified atrial fibrillation"),
    (
        "I25.10",
        "Atherosclerotic heart disease of native coronary artery without angina pectoris",
    ),
    ("N17.9", "Acute kidney failure, unspecified"),
    ("E11.9", "Type 2 diabetes mellitus without complications"),
    ("E78.5", "Hyperlipidemia, unspecified"),
    ("N39.0", "Urinary tract infection, site not specified"),
    ("E78.0", "Pure hypercholesterolemia, unspecified"),
    ("D64.9", "Anemia, unspecified"),
    ("E03.9", "Hypothyroidism, unspecified"),
    ("J18.9", "Pneumonia, unspecified organism"),
    ("D62", "Acute posthemorrhagic anemia"),
    ("R65.20", "Severe sepsis without septic shock"),
    ("F32.9", "Major depressive disorder, single episode, unspecified"),
    ("F17.200", "Nicotine dependence, unspecified, uncomplicated"),
    ("D69.6", "Thrombocytopenia, unspecified"),
    ("Z95.1", "Presence of aortocoronary bypass graft"),
    ("Z87.891", "Personal history of nicotine dependence"),
    (
        "I12.0",
        "Hypertensive chronic kidney disease with stage 5 chronic kidney disease or end stage renal disease",
    ),
    ("R65.21", "Severe sepsis with septic shock"),
    ("Z79.4", "Long term (current) use of insulin"),
    ("G47.33", "Obstructive sleep apnea (adult) (pediatric)"),
    ("J45.909", "Unspecified asthma, uncomplicated"),
    (
        "M81.0",
        "Age-related osteoporosis without current pathological fracture",
    ),
    ("R56.9", "Unspecified convulsions"),
    ("N18.6", "End stage renal disease"),
    ("E66.9", "Obesity, unspecified"),
    ("R78.81", "Bacteremia"),
    ("F05", "Delirium due to known physiological condition"),
    ("E46", "Unspecified protein-calorie malnutrition"),
    ("E66.01", "Morbid (severe) obesity due to excess calories"),
];

/// Codes covered by the bundled synonym and guideline fixtures.
pub const FIXTURE_CODES: [&str; 5] = ["I10", "I50.9", "N17.9", "E11.9", "D64.9"];

impl CodeCatalog {
    pub fn new(entries: Vec<CodeEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument("code catalog is empty".into()));
        }
        let mut index = HashMap::with_capacity(entries.len());
        for (j, entry) in entries.iter().enumerate() {
            if entry.code.trim().is_empty() {
                return Err(Error::InvalidArgument(format!("code #{j} has an empty id")));
            }
            if entry.description.trim().is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "code {} has no description",
                    entry.code
                )));
            }
            if index.insert(entry.code.clone(), j).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "duplicate code id {}",
                    entry.code
                )));
            }
        }
        Ok(CodeCatalog { entries, index })
    }

    /// The 32-code catalog, without synonyms.
    pub fn icd10_32() -> Self {
        let entries = ICD10_32
            .iter()
            .map(|(code, description)| CodeEntry::new(*code, *description))
            .collect();
        CodeCatalog::new(entries).expect("bundled catalog is valid")
    }

    /// The five fixture codes with synonyms from the bundled synonym corpus.
    pub fn fixture_5() -> Self {
        let full = CodeCatalog::icd10_32();
        let synonyms = crate::ranker::SynonymCorpus::bundled();
        let entries = FIXTURE_CODES
            .iter()
            .map(|code| {
                let mut entry = full.entries[full.index[*code]].clone();
                if let Some(s) = synonyms.get(code) {
                    entry.synonyms = s
                        .positives
                        .iter()
                        .filter(|p| **p != entry.description)
                        .cloned()
                        .collect();
                }
                entry
            })
            .collect();
        CodeCatalog::new(entries).expect("fixture catalog is valid")
    }

    /// Resolves `builtin:icd10-32`, `builtin:fixture-5`, or a JSON path.
    pub fn from_source(source: &str) -> Result<Self> {
        match source {
            "builtin:icd10-32" => Ok(CodeCatalog::icd10_32()),
            "builtin:fixture-5" => Ok(CodeCatalog::fixture_5()),
            path => CodeCatalog::load(path),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_slice(&bytes)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[CodeEntry] {
        &self.entries
    }

    pub fn entry(&self, j: usize) -> &CodeEntry {
        &self.entries[j]
    }

    pub fn index_of(&self, code: &str) -> Option<usize> {
        self.index.get(code).copied()
    }

    pub fn code_ids(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.code.clone()).collect()
    }
}
