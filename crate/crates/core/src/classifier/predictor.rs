use std::path::Path;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::config::TextModelConfig;
use super::model::{TextModel, TextModelShape};
use super::train::{train_text_model, TextExample, TrainingLog};
use crate::corpus::{AdmissionRecord, CodeCatalog};
use crate::error::{Error, Result};
use crate::nn::{read_checkpoint, write_checkpoint};
use crate::text::{
    extract_guideline_keywords, token_strings, write_term_list, Guideline, TfidfModel, TokenizedDocument, Vocabulary,
    UNK_ID,
};

pub const TEXT_CHECKPOINT: &str = "model.ckpt";
pub const VOCAB_FILE: &str = "vocab.json";
pub const TERMS_FILE: &str = "terms.txt";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextClassifierConfig {
    pub model: TextModelConfig,
    pub min_frequency: usize,
    /// Combined notes are truncated to this many tokens.
    pub max_tokens: usize,
    /// Guideline keywords per code for the TF-IDF side channel.
    pub guideline_top_k: usize,
}

impl Default for TextClassifierConfig {
    fn default() -> Self {
        TextClassifierConfig {
            model: TextModelConfig::default(),
            min_frequency: 10,
            max_tokens: 2500,
            guideline_top_k: 10,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct TfidfState {
    terms: Vec<String>,
    idf: Vec<f64>,
    n_documents: usize,
}

#[derive(Serialize, Deserialize)]
struct CheckpointConfig {
    kind: String,
    schema_version: u32,
    model: TextModelConfig,
    shape: TextModelShape,
    max_tokens: usize,
    codes: Vec<String>,
    tfidf: Option<TfidfState>,
}

/// Vocabulary, optional guideline TF-IDF model and Text-CNN, applied to
/// whole admissions.
#[derive(Clone, Debug)]
pub struct TextClassifier {
    pub vocab: Vocabulary,
    pub tfidf: Option<TfidfModel>,
    pub model: TextModel,
    pub max_tokens: usize,
    pub codes: Vec<String>,
}

/// An admission's combined notes as model input.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedText {
    pub text: String,
    /// Spans index into `text`; empty when the notes had no tokens.
    pub document: TokenizedDocument,
    /// Ids fed to the network; a lone UNK for an empty document.
    pub ids: Vec<u32>,
    pub tfidf: Option<Vec<f64>>,
}

fn truncated_tokens(text: &str, max_tokens: usize) -> Vec<String> {
    let mut t = token_strings(text);
    t.truncate(max_tokens);
    t
}

fn encode_with(vocab: &Vocabulary, tfidf: Option<&TfidfModel>, max_tokens: usize, text: &str) -> EncodedText {
    let mut document = vocab.tokenize(text);
    document.truncate(max_tokens);
    let ids = if document.is_empty() { vec![UNK_ID] } else { document.ids.clone() };
    let tfidf = tfidf.map(|m| m.transform(&truncated_tokens(text, max_tokens)).weights);
    EncodedText {
        text: text.to_string(),
        document,
        ids,
        tfidf,
    }
}

impl TextClassifier {
    /// Fits vocabulary and TF-IDF statistics on `train` only, then trains
    /// the network. Training admissions without notes are skipped.
    pub fn fit(
        config: &TextClassifierConfig,
        catalog: &CodeCatalog,
        train: &[&AdmissionRecord],
        validation: &[&AdmissionRecord],
        guidelines: &[Guideline],
    ) -> Result<(Self, TrainingLog)> {
        let with_notes: Vec<&AdmissionRecord> = train.iter().copied().filter(|r| !r.notes.is_empty()).collect();
        if with_notes.len() < train.len() {
            warn!("{} training admission(s) have no notes and are skipped", train.len() - with_notes.len());
        }
        if with_notes.is_empty() {
            return Err(Error::Data("no training admission has a note".into()));
        }
        let texts: Vec<String> = with_notes.iter().map(|r| r.combined_text()).collect();
        let truncated: Vec<Vec<String>> = texts.iter().map(|t| truncated_tokens(t, config.max_tokens)).collect();
        let vocab = Vocabulary::from_tokens(&truncated, config.min_frequency)?;

        let mut model_config = config.model.clone();
        let tfidf = if model_config.tfidf_side_channel {
            let terms = extract_guideline_keywords(guidelines, config.guideline_top_k)?;
            if terms.is_empty() {
                warn!("guideline term list is empty; training without the TF-IDF side channel");
                model_config.tfidf_side_channel = false;
                None
            } else {
                Some(TfidfModel::fit(&terms, &truncated)?)
            }
        } else {
            None
        };
        info!(
            "text vocabulary: {} tokens; TF-IDF terms: {}",
            vocab.len(),
            tfidf.as_ref().map_or(0, |t| t.dim())
        );

        let shape = TextModelShape {
            vocab_size: vocab.len(),
            num_codes: catalog.len(),
            tfidf_dim: tfidf.as_ref().map_or(0, |t| t.dim()),
        };
        let example = |r: &AdmissionRecord| {
            let enc = encode_with(&vocab, tfidf.as_ref(), config.max_tokens, &r.combined_text());
            TextExample {
                ids: enc.ids,
                tfidf: enc.tfidf,
                labels: r.labels.clone(),
            }
        };
        let train_ex: Vec<TextExample> = with_notes.iter().map(|r| example(r)).collect();
        let val_ex: Vec<TextExample> = validation.iter().map(|r| example(r)).collect();
        let (model, log) = train_text_model(&model_config, shape, &train_ex, &val_ex)?;
        let classifier = TextClassifier {
            vocab,
            tfidf,
            model,
            max_tokens: config.max_tokens,
            codes: catalog.code_ids(),
        };
        Ok((classifier, log))
    }

    pub fn num_codes(&self) -> usize {
        self.model.num_codes()
    }

    pub fn encode_text(&self, text: &str) -> EncodedText {
        encode_with(&self.vocab, self.tfidf.as_ref(), self.max_tokens, text)
    }

    pub fn encode(&self, record: &AdmissionRecord) -> EncodedText {
        self.encode_text(&record.combined_text())
    }

    pub fn example(&self, record: &AdmissionRecord) -> TextExample {
        let enc = self.encode(record);
        TextExample {
            ids: enc.ids,
            tfidf: enc.tfidf,
            labels: record.labels.clone(),
        }
    }

    pub fn predict(&self, record: &AdmissionRecord) -> Result<Vec<f64>> {
        let enc = self.encode(record);
        self.model.forward(&enc.ids, enc.tfidf.as_deref())
    }

    /// Writes `model.ckpt`, `vocab.json` and `terms.txt` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        let config = CheckpointConfig {
            kind: "text_cnn".into(),
            schema_version: crate::SCHEMA_VERSION,
            model: self.model.config().clone(),
            shape: self.model.shape().clone(),
            max_tokens: self.max_tokens,
            codes: self.codes.clone(),
            tfidf: self.tfidf.as_ref().map(|t| TfidfState {
                terms: t.terms().to_vec(),
                idf: t.idf().to_vec(),
                n_documents: t.n_documents(),
            }),
        };
        write_checkpoint(dir.join(TEXT_CHECKPOINT), &serde_json::to_value(&config)?, self.model.params())?;
        self.vocab.save(dir.join(VOCAB_FILE))?;
        let terms = self.tfidf.as_ref().map(|t| t.terms().to_vec()).unwrap_or_default();
        write_term_list(dir.join(TERMS_FILE), &terms)
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let ck = read_checkpoint(dir.join(TEXT_CHECKPOINT))?;
        let config: CheckpointConfig = serde_json::from_value(ck.config)?;
        if config.kind != "text_cnn" {
            return Err(Error::Data(format!("checkpoint kind {} is not text_cnn", config.kind)));
        }
        let vocab = Vocabulary::load(dir.join(VOCAB_FILE))?;
        if vocab.len() != config.shape.vocab_size {
            return Err(Error::Data(format!(
                "vocabulary has {} tokens, checkpoint expects {}",
                vocab.len(),
                config.shape.vocab_size
            )));
        }
        let tfidf = config
            .tfidf
            .map(|t| TfidfModel::from_parts(t.terms, t.idf, t.n_documents))
            .transpose()?;
        let model = TextModel::from_parts(config.model, config.shape, ck.params)?;
        Ok(TextClassifier {
            vocab,
            tfidf,
            model,
            max_tokens: config.max_tokens,
            codes: config.codes,
        })
    }
}
