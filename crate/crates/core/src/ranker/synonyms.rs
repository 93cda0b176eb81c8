use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::CodeCatalog;
use crate::error::{Error, Result};
use crate::text::phrase_tokens;

const BUNDLED: &str = include_str!("../../fixtures/synonyms_5.json");

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SynonymEntry {
    /// The official description first, then synonyms.
    pub positives: Vec<String>,
    #[serde(default)]
    pub negatives: Vec<String>,
}

/// Per-code positive and negative strings for triplet training.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SynonymCorpus {
    codes: BTreeMap<String, SynonymEntry>,
}

/// A held-out synonym and the code it belongs to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledPhrase {
    pub code: String,
    pub phrase: String,
}

pub(crate) fn normalized(s: &str) -> String {
    phrase_tokens(s).join(" ")
}

impl SynonymCorpus {
    pub fn new(codes: BTreeMap<String, SynonymEntry>) -> Result<Self> {
        let corpus = SynonymCorpus { codes };
        corpus.validate()?;
        Ok(corpus)
    }

    /// The bundled five-code fixture.
    pub fn bundled() -> Self {
        let codes = serde_json::from_str(BUNDLED).expect("bundled synonym fixture parses");
        SynonymCorpus::new(codes).expect("bundled synonym fixture is valid")
    }

    /// Positives from `catalog` (description plus synonyms), negatives
    /// taken from `extra` where it covers the code.
    pub fn for_catalog(catalog: &CodeCatalog, extra: Option<&SynonymCorpus>) -> Result<Self> {
        let mut codes = BTreeMap::new();
        for e in catalog.entries() {
            let mut positives: Vec<String> = e.positives().map(String::from).collect();
            let mut negatives = Vec::new();
            if let Some(x) = extra.and_then(|x| x.get(&e.code)) {
                for p in &x.positives {
                    if !positives.iter().any(|q| normalized(q) == normalized(p)) {
                        positives.push(p.clone());
                    }
                }
                negatives = x.negatives.clone();
            }
            codes.insert(e.code.clone(), SynonymEntry { positives, negatives });
        }
        SynonymCorpus::new(codes)
    }

    fn validate(&self) -> Result<()> {
        if self.codes.is_empty() {
            return Err(Error::Data("synonym corpus has no codes".into()));
        }
        for (code, e) in &self.codes {
            if e.positives.is_empty() {
                return Err(Error::Data(format!("code {code} has no positive strings")));
            }
            if e.positives.iter().any(|p| normalized(p).is_empty()) {
                return Err(Error::Data(format!("code {code} has an empty positive string")));
            }
            for n in &e.negatives {
                if e.positives.iter().any(|p| normalized(p) == normalized(n)) {
                    return Err(Error::Data(format!("{n:?} is both positive and negative for {code}")));
                }
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let body = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        SynonymCorpus::new(serde_json::from_slice(&body)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn get(&self, code: &str) -> Option<&SynonymEntry> {
        self.codes.get(code)
    }

    pub fn get_mut(&mut self, code: &str) -> Option<&mut SynonymEntry> {
        self.codes.get_mut(code)
    }

    pub fn codes(&self) -> impl Iterator<Item = &str> {
        self.codes.keys().map(String::as_str)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &SynonymEntry)> {
        self.codes.iter().map(|(c, e)| (c.as_str(), e))
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    /// Every positive with index `i >= 1` and `i % 4 == 3` is held out;
    /// descriptions always stay in training.
    pub fn split_held_out(&self) -> (SynonymCorpus, Vec<LabeledPhrase>) {
        let mut train = self.clone();
        let mut held = Vec::new();
        for (code, e) in train.codes.iter_mut() {
            let mut kept = Vec::new();
            for (i, p) in e.positives.drain(..).enumerate() {
                if i >= 1 && i % 4 == 3 {
                    held.push(LabeledPhrase {
                        code: code.clone(),
                        phrase: p,
                    });
                } else {
                    kept.push(p);
                }
            }
            e.positives = kept;
        }
        (train, held)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_fixture_covers_the_fixture_codes() {
        let corpus = SynonymCorpus::bundled();
        for code in crate::corpus::FIXTURE_CODES {
            let e = corpus.get(code).unwrap();
            assert!(e.positives.len() >= 8);
            assert!(!e.negatives.is_empty());
        }
    }

    #[test]
    fn no_string_is_both_positive_and_negative() {
        let mut codes = BTreeMap::new();
        codes.insert(
            "X".to_string(),
            SynonymEntry {
                positives: vec!["Renal failure".into()],
                negatives: vec!["renal failure".into()],
            },
        );
        assert!(SynonymCorpus::new(codes).is_err());
    }

    #[test]
    fn held_out_split_keeps_descriptions() {
        let (train, held) = SynonymCorpus::bundled().split_held_out();
        assert_eq!(held.len(), 10);
        for (code, e) in train.entries() {
            let full = SynonymCorpus::bundled();
            assert_eq!(e.positives[0], full.get(code).unwrap().positives[0]);
            assert!(held.iter().all(|h| !e.positives.contains(&h.phrase) || h.code != code));
        }
    }

    #[test]
    fn json_round_trip() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("syn.json");
        let corpus = SynonymCorpus::bundled();
        corpus.save(&path).unwrap();
        assert_eq!(SynonymCorpus::load(&path).unwrap(), corpus);
    }
}
