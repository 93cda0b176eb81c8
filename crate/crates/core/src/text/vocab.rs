use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tokenize::{tokenize_words, TokenizedDocument, NUM_TOKEN};
use crate::error::{Error, Result};

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const NUM_ID: u32 = 2;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

/// Frequency-pruned token to id mapping.
///
/// Ids are dense from 0. `<pad>`, `<unk>` and `NUM` always occupy ids 0, 1
/// and 2; the remaining tokens follow in descending training frequency,
/// ties broken lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "VocabularyFile", into = "VocabularyFile")]
pub struct Vocabulary {
    min_frequency: usize,
    tokens: Vec<String>,
    frequencies: Vec<usize>,
    index: HashMap<String, u32>,
}

#[derive(Serialize, Deserialize)]
struct VocabEntry {
    token: String,
    id: u32,
    frequency: usize,
}

#[derive(Serialize, Deserialize)]
struct VocabularyFile {
    schema_version: u32,
    min_frequency: usize,
    entries: Vec<VocabEntry>,
}

impl TryFrom<VocabularyFile> for Vocabulary {
    type Error = Error;

    fn try_from(file: VocabularyFile) -> Result<Self> {
        let mut entries = file.entries;
        entries.sort_by_key(|e| e.id);
        for (i, e) in entries.iter().enumerate() {
            if e.id as usize != i {
                return Err(Error::Data(format!("vocabulary ids are not dense at {i}")));
            }
        }
        let tokens: Vec<String> = entries.iter().map(|e| e.token.clone()).collect();
        if tokens.len() < 3 || tokens[0] != PAD_TOKEN || tokens[1] != UNK_TOKEN || tokens[2] != NUM_TOKEN {
            return Err(Error::Data("vocabulary lacks the reserved tokens".into()));
        }
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Ok(Vocabulary {
            min_frequency: file.min_frequency,
            frequencies: entries.iter().map(|e| e.frequency).collect(),
            tokens,
            index,
        })
    }
}

impl From<Vocabulary> for VocabularyFile {
    fn from(v: Vocabulary) -> Self {
        VocabularyFile {
            schema_version: crate::SCHEMA_VERSION,
            min_frequency: v.min_frequency,
            entries: v
                .tokens
                .into_iter()
                .zip(v.frequencies)
                .enumerate()
                .map(|(id, (token, frequency))| VocabEntry {
                    token,
                    id: id as u32,
                    frequency,
                })
                .collect(),
        }
    }
}

impl Vocabulary {
    /// Builds from raw training documents.
    pub fn build<S: AsRef<str>>(documents: &[S], min_frequency: usize) -> Result<Self> {
        if documents.is_empty() {
            return Err(Error::InvalidArgument("cannot build a vocabulary from zero documents".into()));
        }
        let mut counts: HashMap<String, usize> = HashMap::new();
        for doc in documents {
            for t in tokenize_words(doc.as_ref()) {
                *counts.entry(t.text).or_insert(0) += 1;
            }
        }
        Ok(Self::from_counts(counts, min_frequency))
    }

    /// Builds from already-normalized token sequences.
    pub fn from_tokens<D: AsRef<[String]>>(documents: &[D], min_frequency: usize) -> Result<Self> {
        if documents.is_empty() {
            return Err(Error::InvalidArgument("cannot build a vocabulary from zero documents".into()));
        }
        let mut counts: HashMap<String, usize> = HashMap::new();
        for doc in documents {
            for t in doc.as_ref() {
                *counts.entry(t.clone()).or_insert(0) += 1;
            }
        }
        Ok(Self::from_counts(counts, min_frequency))
    }

    fn from_counts(mut counts: HashMap<String, usize>, min_frequency: usize) -> Self {
        let num_frequency = counts.remove(NUM_TOKEN).unwrap_or(0);
        let mut kept: Vec<(String, usize)> = counts.into_iter().filter(|(_, c)| *c >= min_frequency).collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

        let mut tokens = vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string(), NUM_TOKEN.to_string()];
        let mut frequencies = vec![0, 0, num_frequency];
        for (token, count) in kept {
            tokens.push(token);
            frequencies.push(count);
        }
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Vocabulary {
            min_frequency,
            tokens,
            frequencies,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn min_frequency(&self) -> usize {
        self.min_frequency
    }

    /// Id of a normalized token; unseen tokens map to [`UNK_ID`].
    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn frequency(&self, token: &str) -> Option<usize> {
        self.index.get(token).map(|&i| self.frequencies[i as usize])
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Tokenizes raw text against this vocabulary.
    pub fn tokenize(&self, text: &str) -> TokenizedDocument {
        let mut doc = TokenizedDocument::default();
        for t in tokenize_words(text) {
            doc.ids.push(self.id(&t.text));
            doc.spans.push(t.span);
        }
        doc
    }

    /// Space-joined tokens for the given ids.
    pub fn detokenize(&self, ids: &[u32]) -> String {
        ids.iter()
            .map(|&i| self.token(i).unwrap_or(UNK_TOKEN))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_slice(&bytes)?)
    }
}
