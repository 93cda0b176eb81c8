use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::config::{CorpusConfig, RunConfig};
use super::io::{read_json, read_jsonl, write_json, write_jsonl};
use super::Command;
use crate::classifier::{TextClassifier, TEXT_CHECKPOINT};
use crate::corpus::{
    generate_synthetic, load_tables, split_by_patient, write_tables, AdmissionRecord, CodeCatalog, DatasetSplit,
    IngestSummary, SchemaConfig, SplitPart,
};
use crate::ensemble::{
    fuse_all, tune_thresholds, tune_weights, AdmissionPrediction, CandidateScore, EnsembleModel, EnsembleWeights,
    ModalityPrediction, ENSEMBLE_FILE, RANKER_PREDICTOR, TABULAR_PREDICTOR, TEXT_PREDICTOR,
};
use crate::error::{Error, Result};
use crate::explain::{
    agreement, assemble_phrases, explain_tabular, read_annotations, word_influence, AgreementSummary, EvidenceReport,
};
use crate::matrix::Matrix;
use crate::metrics::{apply_thresholds, micro_f1_at_half, MetricReport};
use crate::ranker::{
    mine_corpus_negatives, train_ranker as fit_ranker, DiagnosisRanker, SynonymCorpus, RANKER_CHECKPOINT,
};
use crate::tabular::{TreeEnsembleModel, TABULAR_MODEL_FILE};
use crate::text::{bundled_guidelines, load_guidelines, phrase_tokens};

pub const ADMISSIONS_FILE: &str = "admissions.jsonl";
const CATALOG_FILE: &str = "catalog.json";
const SPLIT_FILE: &str = "split.json";
const SUMMARY_FILE: &str = "summary.json";
const PLANTED_FILE: &str = "planted.json";
const TABLES_DIR: &str = "tables";
const TRAINING_LOG: &str = "training_log.jsonl";
pub const SEARCH_FILE: &str = "search.json";
pub const PREDICTIONS_FILE: &str = "predictions.jsonl";
const MODALITIES_FILE: &str = "modalities.jsonl";
pub const EVIDENCE_FILE: &str = "evidence.jsonl";
pub const AGREEMENT_FILE: &str = "agreement.json";
pub const METRICS_FILE: &str = "metrics.json";
pub const PER_CODE_FILE: &str = "per_code.txt";
pub const REPORT_FILE: &str = "report.txt";

/// The output of `ingest`.
#[derive(Clone, Debug)]
pub struct Ingested {
    pub catalog: CodeCatalog,
    pub records: Vec<AdmissionRecord>,
    pub split: DatasetSplit,
}

impl Ingested {
    pub fn part(&self, part: SplitPart) -> Vec<&AdmissionRecord> {
        self.split.select(&self.records, part)
    }

    fn by_id(&self) -> BTreeMap<&str, &AdmissionRecord> {
        self.records.iter().map(|r| (r.admission_id.as_str(), r)).collect()
    }
}

/// Reads an `ingest` output directory.
pub fn load_ingested(dir: impl AsRef<Path>) -> Result<Ingested> {
    let dir = dir.as_ref();
    Ok(Ingested {
        catalog: CodeCatalog::load(dir.join(CATALOG_FILE))?,
        records: read_jsonl(dir.join(ADMISSIONS_FILE))?,
        split: read_json(&dir.join(SPLIT_FILE))?,
    })
}

/// Every modality's output for one admission.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModalityScores {
    pub admission_id: String,
    pub predictions: Vec<ModalityPrediction>,
}

/// Written by `tune-ensemble`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSummary {
    pub predictors: Vec<String>,
    pub weights: Vec<f64>,
    pub validation_micro_f1: f64,
    /// Validation micro-F1 with all weight on one predictor. Admissions the
    /// predictor cannot score fall back to the text model.
    pub single_predictor_micro_f1: BTreeMap<String, f64>,
    pub thresholds: Vec<f64>,
    pub validation_micro_f1_tuned_thresholds: f64,
    pub candidates: Vec<CandidateScore>,
}

#[derive(Serialize)]
struct RankerSummary<'a> {
    best_epoch: usize,
    held_out_phrases: usize,
    held_out_top1_accuracy: f64,
    epochs: &'a [crate::ranker::RankerEpoch],
}

#[derive(Serialize, Deserialize)]
struct PredictSummary {
    split: String,
    admissions: usize,
    missing_predictors: Vec<String>,
    /// Weights actually applied when every loaded predictor is available.
    effective_weights: BTreeMap<String, f64>,
}

/// Loaded modality models.
struct Models {
    text: TextClassifier,
    ranker: Option<DiagnosisRanker>,
    tabular: Option<TreeEnsembleModel>,
}

fn has_structured_data(r: &AdmissionRecord) -> bool {
    !(r.lab_events.is_empty() && r.chart_events.is_empty() && r.medications.is_empty() && r.micro_events.is_empty())
}

impl Models {
    /// One prediction per requested predictor; the ranker is unavailable
    /// for admissions without tokenized diagnosis phrases and the tabular
    /// model for admissions without structured events.
    fn predict(&self, record: &AdmissionRecord, predictors: &[String]) -> Result<Vec<ModalityPrediction>> {
        predictors
            .iter()
            .map(|p| {
                Ok(match p.as_str() {
                    TEXT_PREDICTOR => ModalityPrediction::available(p.clone(), self.text.predict(record)?),
                    RANKER_PREDICTOR => {
                        let phrases: Vec<&String> = record
                            .diagnosis_phrases
                            .iter()
                            .filter(|s| !phrase_tokens(s).is_empty())
                            .collect();
                        match &self.ranker {
                            Some(r) if !phrases.is_empty() => {
                                ModalityPrediction::available(p.clone(), r.rank_codes(&phrases)?)
                            }
                            _ => ModalityPrediction::missing(p.clone()),
                        }
                    }
                    TABULAR_PREDICTOR => match &self.tabular {
                        Some(t) if has_structured_data(record) => {
                            ModalityPrediction::available(p.clone(), t.predict(record))
                        }
                        _ => ModalityPrediction::missing(p.clone()),
                    },
                    other => return Err(Error::Usage(format!("unknown predictor {other:?}"))),
                })
            })
            .collect()
    }
}

fn label_matrix(records: &[&AdmissionRecord], c: usize) -> Result<Matrix<bool>> {
    let mut data = Vec::with_capacity(records.len() * c);
    for r in records {
        if r.labels.len() != c {
            return Err(Error::Shape(format!(
                "admission {} has {} labels, catalog has {c} codes",
                r.admission_id,
                r.labels.len()
            )));
        }
        data.extend_from_slice(&r.labels);
    }
    Matrix::from_vec(records.len(), c, data)
}

fn check_codes(what: &str, producer: Command, got: &[String], catalog: &CodeCatalog) -> Result<()> {
    if got != catalog.code_ids().as_slice() {
        return Err(Error::MissingDependency(format!(
            "{what} covers {} codes but the ingested catalog {CATALOG_FILE} has {}; re-run `{producer}`",
            got.len(),
            catalog.len()
        )));
    }
    Ok(())
}

pub(super) struct Run<'a> {
    config: &'a RunConfig,
}

impl<'a> Run<'a> {
    pub(super) fn new(config: &'a RunConfig) -> Self {
        Run { config }
    }

    pub(super) fn stage_dir(&self, command: Command) -> PathBuf {
        self.config.out_dir.join(command.as_str())
    }

    /// Clears and recreates the command's own output directory.
    fn fresh_dir(&self, command: Command) -> Result<PathBuf> {
        let dir = self.stage_dir(command);
        if dir.exists() {
            std::fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(dir)
    }

    /// Path of an upstream artifact, or a dependency error naming the stage
    /// that produces it.
    fn upstream(&self, producer: Command, file: &str) -> Result<PathBuf> {
        let path = self.stage_dir(producer).join(file);
        if path.exists() {
            Ok(path)
        } else {
            Err(Error::MissingDependency(format!(
                "{} not found; run `medcoder {producer}` first",
                path.display()
            )))
        }
    }

    fn ingested(&self) -> Result<Ingested> {
        self.upstream(Command::Ingest, ADMISSIONS_FILE)?;
        load_ingested(self.stage_dir(Command::Ingest))
    }

    fn text_model(&self, catalog: &CodeCatalog) -> Result<TextClassifier> {
        self.upstream(Command::TrainText, TEXT_CHECKPOINT)?;
        let text = TextClassifier::load(self.stage_dir(Command::TrainText))?;
        check_codes("the text checkpoint", Command::TrainText, &text.codes, catalog)?;
        Ok(text)
    }

    fn ranker_model(&self, catalog: &CodeCatalog) -> Result<Option<DiagnosisRanker>> {
        if self.upstream(Command::TrainRanker, RANKER_CHECKPOINT).is_err() {
            return Ok(None);
        }
        let ranker = DiagnosisRanker::load(self.stage_dir(Command::TrainRanker))?;
        check_codes("the ranker checkpoint", Command::TrainRanker, &ranker.codes, catalog)?;
        Ok(Some(ranker))
    }

    fn tabular_model(&self, catalog: &CodeCatalog) -> Result<Option<TreeEnsembleModel>> {
        if self.upstream(Command::TrainTabular, TABULAR_MODEL_FILE).is_err() {
            return Ok(None);
        }
        let model = TreeEnsembleModel::load(self.stage_dir(Command::TrainTabular))?;
        check_codes("the tabular model", Command::TrainTabular, &model.codes, catalog)?;
        Ok(Some(model))
    }

    /// Loads the text model plus whichever of `predictors` have
    /// checkpoints; returns the names of those that do not.
    fn models(&self, catalog: &CodeCatalog, predictors: &[String]) -> Result<(Models, Vec<String>)> {
        let text = self.text_model(catalog)?;
        let wants = |p: &str| predictors.iter().any(|x| x == p);
        let ranker = if wants(RANKER_PREDICTOR) { self.ranker_model(catalog)? } else { None };
        let tabular = if wants(TABULAR_PREDICTOR) { self.tabular_model(catalog)? } else { None };
        let mut missing = Vec::new();
        if wants(RANKER_PREDICTOR) && ranker.is_none() {
            missing.push(RANKER_PREDICTOR.to_string());
        }
        if wants(TABULAR_PREDICTOR) && tabular.is_none() {
            missing.push(TABULAR_PREDICTOR.to_string());
        }
        Ok((Models { text, ranker, tabular }, missing))
    }

    pub(super) fn gen_synthetic(&self) -> Result<()> {
        let generator = self.config.corpus.generator().ok_or_else(|| {
            Error::Usage("gen-synthetic needs a synthetic corpus; the config reads CSV tables".into())
        })?;
        let corpus = generate_synthetic(&generator, self.config.seed)?;
        let dir = self.fresh_dir(Command::GenSynthetic)?;
        write_tables(dir.join(TABLES_DIR), &corpus.records, &SchemaConfig::default(), &corpus.catalog)?;
        corpus.catalog.save(dir.join(CATALOG_FILE))?;
        write_json(&dir.join(PLANTED_FILE), &corpus.planted)?;
        info!("generated {} admissions over {} codes", corpus.records.len(), corpus.catalog.len());
        Ok(())
    }

    pub(super) fn ingest(&self) -> Result<()> {
        let (tables, schema, catalog) = match &self.config.corpus {
            CorpusConfig::Synthetic { .. } => {
                let tables = self.upstream(Command::GenSynthetic, TABLES_DIR)?;
                let catalog = CodeCatalog::load(self.upstream(Command::GenSynthetic, CATALOG_FILE)?)?;
                (tables, SchemaConfig::default(), catalog)
            }
            CorpusConfig::Tables { dir, schema, catalog } => {
                (dir.clone(), schema.clone(), CodeCatalog::from_source(catalog)?)
            }
        };
        let corpus = load_tables(&tables, &schema, &catalog)?;
        let split = split_by_patient(&corpus.records, self.config.split_ratios, self.config.seed)?;
        info!(
            "ingested {} admissions; split {}/{}/{}",
            corpus.records.len(),
            split.train.len(),
            split.validation.len(),
            split.test.len()
        );
        let dir = self.fresh_dir(Command::Ingest)?;
        write_jsonl(dir.join(ADMISSIONS_FILE), &corpus.records)?;
        catalog.save(dir.join(CATALOG_FILE))?;
        write_json(&dir.join(SPLIT_FILE), &split)?;
        write_json::<IngestSummary>(&dir.join(SUMMARY_FILE), &corpus.summary)?;
        Ok(())
    }

    pub(super) fn train_text(&self) -> Result<()> {
        let data = self.ingested()?;
        let guidelines = match &self.config.guidelines_dir {
            Some(d) => load_guidelines(d, &data.catalog)?,
            None => bundled_guidelines(&data.catalog),
        };
        let (model, log) = TextClassifier::fit(
            &self.config.text,
            &data.catalog,
            &data.part(SplitPart::Train),
            &data.part(SplitPart::Validation),
            &guidelines,
        )?;
        let dir = self.fresh_dir(Command::TrainText)?;
        model.save(&dir)?;
        log.write_jsonl(dir.join(TRAINING_LOG))
    }

    pub(super) fn train_ranker(&self) -> Result<()> {
        let data = self.ingested()?;
        let extra = match &self.config.synonyms {
            Some(p) => SynonymCorpus::load(p)?,
            None => SynonymCorpus::bundled(),
        };
        let full = SynonymCorpus::for_catalog(&data.catalog, Some(&extra))?;
        let (train_corpus, held_out) = full.split_held_out();
        // Training diagnosis phrases feed negative mining, except strings that
        // are positives of some code (held-out ones included).
        let positives: BTreeSet<String> = full
            .entries()
            .flat_map(|(_, e)| e.positives.iter().map(|p| phrase_tokens(p).join(" ")))
            .collect();
        let phrases: BTreeSet<String> = data
            .part(SplitPart::Train)
            .iter()
            .flat_map(|r| r.diagnosis_phrases.iter())
            .map(|p| phrase_tokens(p).join(" "))
            .filter(|p| !p.is_empty() && !positives.contains(p))
            .collect();
        let phrases: Vec<String> = phrases.into_iter().collect();
        let cfg = &self.config.ranker;
        let mined = mine_corpus_negatives(&train_corpus, &phrases, cfg.ngram_range, cfg.negatives_per_anchor)?;
        let (ranker, log) = fit_ranker(cfg, &mined, &data.catalog, &held_out)?;
        let accuracy = if held_out.is_empty() { f64::NAN } else { ranker.top1_accuracy(&held_out)? };
        info!("ranker held-out top-1 accuracy {accuracy:.3} over {} phrases", held_out.len());
        let dir = self.fresh_dir(Command::TrainRanker)?;
        ranker.save(&dir)?;
        mined.save(dir.join("synonyms.json"))?;
        write_json(
            &dir.join("training_log.json"),
            &RankerSummary {
                best_epoch: log.best_epoch,
                held_out_phrases: held_out.len(),
                held_out_top1_accuracy: accuracy,
                epochs: &log.epochs,
            },
        )
    }

    pub(super) fn train_tabular(&self) -> Result<()> {
        let data = self.ingested()?;
        let model = TreeEnsembleModel::fit(&self.config.tabular, &data.catalog.code_ids(), &data.part(SplitPart::Train))?;
        info!("tabular schema: {} binary features", model.schema.width());
        let dir = self.fresh_dir(Command::TrainTabular)?;
        model.save(&dir)
    }

    pub(super) fn tune_ensemble(&self) -> Result<()> {
        let data = self.ingested()?;
        let (models, missing) = self.models(&data.catalog, &self.config.ensemble.predictors)?;
        for m in &missing {
            warn!("no {m} checkpoint; tuning the ensemble without it");
        }
        let predictors: Vec<String> =
            self.config.ensemble.predictors.iter().filter(|p| !missing.contains(p)).cloned().collect();
        let validation = data.part(SplitPart::Validation);
        let c = data.catalog.len();
        let labels = label_matrix(&validation, c)?;
        let preds = validation
            .iter()
            .map(|r| models.predict(r, &predictors))
            .collect::<Result<Vec<_>>>()?;
        let search = tune_weights(&preds, &labels, &predictors, 0, self.config.ensemble.grid_step)?;
        let mut single = BTreeMap::new();
        for k in 0..predictors.len() {
            let mut w = vec![0.0; predictors.len()];
            w[k] = 1.0;
            let weights = EnsembleWeights::new(predictors.clone(), w, 0)?;
            single.insert(predictors[k].clone(), micro_f1_at_half(&fuse_all(&preds, &weights)?, &labels)?);
        }
        let fused = fuse_all(&preds, &search.weights)?;
        let thresholds = if self.config.ensemble.tune_thresholds {
            tune_thresholds(&fused, &labels)?
        } else {
            vec![0.5; c]
        };
        let tuned_f1 = crate::metrics::f1_scores(&apply_thresholds(&fused, &thresholds)?, &labels)?.micro_f1;
        let model = EnsembleModel::new(data.catalog.code_ids(), search.weights.clone(), thresholds.clone(), search.micro_f1)?;
        let dir = self.fresh_dir(Command::TuneEnsemble)?;
        model.save(&dir)?;
        write_json(
            &dir.join(SEARCH_FILE),
            &SearchSummary {
                predictors,
                weights: search.weights.weights().to_vec(),
                validation_micro_f1: search.micro_f1,
                single_predictor_micro_f1: single,
                thresholds,
                validation_micro_f1_tuned_thresholds: tuned_f1,
                candidates: search.candidates,
            },
        )
    }

    pub(super) fn predict(&self) -> Result<()> {
        let data = self.ingested()?;
        let ensemble = match self.upstream(Command::TuneEnsemble, ENSEMBLE_FILE) {
            Ok(_) => EnsembleModel::load(self.stage_dir(Command::TuneEnsemble))?,
            Err(_) => {
                warn!("no tuned ensemble; predicting with the text model alone at threshold 0.5");
                let weights = EnsembleWeights::fallback_only(vec![TEXT_PREDICTOR.to_string()], 0)?;
                EnsembleModel::new(data.catalog.code_ids(), weights, vec![0.5; data.catalog.len()], f64::NAN)?
            }
        };
        check_codes("the ensemble", Command::TuneEnsemble, &ensemble.codes, &data.catalog)?;
        let predictors = ensemble.weights.predictors().to_vec();
        let (models, missing) = self.models(&data.catalog, &predictors)?;
        let available: Vec<bool> = predictors.iter().map(|p| !missing.contains(p)).collect();
        let effective = ensemble.weights.reallocate(&available)?;
        for m in &missing {
            warn!(
                "no {m} checkpoint; its weight {:.3} moves to {}",
                ensemble.weights.weight_of(m).unwrap_or(0.0),
                ensemble.weights.fallback_id()
            );
        }
        let test = data.part(SplitPart::Test);
        let mut scores = Vec::with_capacity(test.len());
        let mut out = Vec::with_capacity(test.len());
        for r in &test {
            let preds = models.predict(r, &predictors)?;
            out.push(ensemble.predict(&r.admission_id, &preds)?);
            scores.push(ModalityScores {
                admission_id: r.admission_id.clone(),
                predictions: preds,
            });
        }
        let dir = self.fresh_dir(Command::Predict)?;
        write_jsonl(dir.join(PREDICTIONS_FILE), &out)?;
        write_jsonl(dir.join(MODALITIES_FILE), &scores)?;
        write_json(
            &dir.join(SUMMARY_FILE),
            &PredictSummary {
                split: "test".into(),
                admissions: out.len(),
                missing_predictors: missing,
                effective_weights: predictors.into_iter().zip(effective).collect(),
            },
        )
    }

    pub(super) fn explain(&self) -> Result<()> {
        let data = self.ingested()?;
        let predictions: Vec<AdmissionPrediction> = read_jsonl(self.upstream(Command::Predict, PREDICTIONS_FILE)?)?;
        let text = self.text_model(&data.catalog)?;
        let tabular = self.tabular_model(&data.catalog)?;
        if tabular.is_none() {
            warn!("no tabular model; evidence has phrases only");
        }
        let cfg = &self.config.explain;
        let by_id = data.by_id();
        let mut reports = Vec::new();
        for p in &predictions {
            let record = by_id.get(p.admission_id.as_str()).ok_or_else(|| {
                Error::MissingDependency(format!(
                    "admission {} is not in the ingested corpus; re-run `predict`",
                    p.admission_id
                ))
            })?;
            let enc = text.encode(record);
            let bits = tabular.as_ref().map(|t| t.vectorize(record).bits);
            for (j, d) in p.codes.iter().enumerate() {
                if !d.selected {
                    continue;
                }
                let phrases = if enc.document.is_empty() {
                    Vec::new()
                } else {
                    let scores = word_influence(&text.model, &enc.ids, j)?;
                    assemble_phrases(&scores, &enc.document.spans, &enc.text, cfg.top_phrases)?
                };
                let features = match (&tabular, &bits) {
                    (Some(t), Some(b)) => explain_tabular(
                        |x: &[bool]| Ok(t.predict_bits(x)?[j]),
                        b,
                        &t.schema.features,
                        &cfg.surrogate,
                    )?,
                    _ => Vec::new(),
                };
                reports.push(EvidenceReport {
                    schema_version: crate::SCHEMA_VERSION,
                    admission_id: p.admission_id.clone(),
                    code: d.code.clone(),
                    probability: d.probability,
                    phrases,
                    features,
                });
            }
        }
        let summary = match &cfg.annotations {
            Some(path) => Some(agreement(&reports, &read_annotations(path)?, cfg.overlap_threshold)),
            None => None,
        };
        let dir = self.fresh_dir(Command::Explain)?;
        write_jsonl(dir.join(EVIDENCE_FILE), &reports)?;
        if let Some(s) = summary {
            info!(
                "agreement over {} pairs: text {:.3}, tabular {:.3}",
                s.pairs, s.text_jaccard, s.tabular_jaccard
            );
            write_json::<AgreementSummary>(&dir.join(AGREEMENT_FILE), &s)?;
        }
        Ok(())
    }

    pub(super) fn evaluate(&self) -> Result<()> {
        let data = self.ingested()?;
        let predictions: Vec<AdmissionPrediction> = read_jsonl(self.upstream(Command::Predict, PREDICTIONS_FILE)?)?;
        let c = data.catalog.len();
        let by_id = data.by_id();
        let mut probs = Vec::with_capacity(predictions.len() * c);
        let mut decisions = Vec::with_capacity(predictions.len() * c);
        let mut records = Vec::with_capacity(predictions.len());
        for p in &predictions {
            let codes: Vec<String> = p.codes.iter().map(|d| d.code.clone()).collect();
            check_codes(&format!("the prediction for admission {}", p.admission_id), Command::Predict, &codes, &data.catalog)?;
            let r = by_id.get(p.admission_id.as_str()).ok_or_else(|| {
                Error::MissingDependency(format!(
                    "admission {} is not in the ingested corpus; re-run `predict`",
                    p.admission_id
                ))
            })?;
            records.push(*r);
            probs.extend(p.probabilities());
            decisions.extend(p.decisions());
        }
        let labels = label_matrix(&records, c)?;
        let mut train_counts = vec![0usize; c];
        for r in data.part(SplitPart::Train) {
            for j in r.positive_codes() {
                train_counts[j] += 1;
            }
        }
        let report = MetricReport::compute(
            &data.catalog.code_ids(),
            &Matrix::from_vec(records.len(), c, probs)?,
            &Matrix::from_vec(records.len(), c, decisions)?,
            &labels,
            &train_counts,
        )?;
        info!(
            "test micro-F1 {:.4}, macro-F1 {:.4}, micro-AUC {:.4}, macro-AUC {:.4}",
            report.micro_f1, report.macro_f1, report.micro_auc, report.macro_auc
        );
        let dir = self.fresh_dir(Command::Evaluate)?;
        write_json(&dir.join(METRICS_FILE), &report)?;
        std::fs::write(dir.join(PER_CODE_FILE), report.per_code_table()).map_err(|e| Error::io(&dir, e))
    }

    pub(super) fn report(&self) -> Result<()> {
        let metrics: MetricReport = read_json(&self.upstream(Command::Evaluate, METRICS_FILE)?)?;
        let mut out = String::new();
        out.push_str(&format!(
            "admissions scored: {}\nmicro-F1  {:.4}\nmacro-F1  {:.4}\nmicro-AUC {:.4}\nmacro-AUC {:.4}\n",
            metrics.n_admissions, metrics.micro_f1, metrics.macro_f1, metrics.micro_auc, metrics.macro_auc
        ));
        if let Ok(path) = self.upstream(Command::TuneEnsemble, SEARCH_FILE) {
            let search: SearchSummary = read_json(&path)?;
            out.push_str("\nensemble weights\n");
            for (p, w) in search.predictors.iter().zip(&search.weights) {
                let single = search.single_predictor_micro_f1.get(p).copied().unwrap_or(f64::NAN);
                out.push_str(&format!("  {p:<8} {w:.2}  (alone: validation micro-F1 {single:.4})\n"));
            }
            out.push_str(&format!("  fused validation micro-F1 {:.4}\n", search.validation_micro_f1));
        }
        if let Ok(path) = self.upstream(Command::Predict, SUMMARY_FILE) {
            let summary: PredictSummary = read_json(&path)?;
            if !summary.missing_predictors.is_empty() {
                out.push_str(&format!(
                    "\npredicted without: {}\n",
                    summary.missing_predictors.join(", ")
                ));
            }
        }
        out.push_str("\nper code\n");
        out.push_str(&metrics.per_code_table());
        if let Ok(path) = self.upstream(Command::Explain, EVIDENCE_FILE) {
            let evidence: Vec<EvidenceReport> = read_jsonl(path)?;
            out.push_str(&format!("\nevidence for {} predicted codes; first examples\n", evidence.len()));
            for e in evidence.iter().take(5) {
                let phrases: Vec<String> = e
                    .phrases
                    .iter()
                    .map(|p| p.phrase.split_whitespace().collect::<Vec<_>>().join(" "))
                    .collect();
                let features: Vec<String> = e.features.iter().map(|f| f.feature.to_string()).collect();
                out.push_str(&format!(
                    "  {} {} p={:.3}\n    phrases: {}\n    features: {}\n",
                    e.admission_id,
                    e.code,
                    e.probability,
                    phrases.join(" | "),
                    features.join(", ")
                ));
            }
        }
        if let Ok(path) = self.upstream(Command::Explain, AGREEMENT_FILE) {
            let a: AgreementSummary = read_json(&path)?;
            out.push_str(&format!(
                "\nannotation agreement over {} pairs: text {:.3}, tabular {:.3}\n",
                a.pairs, a.text_jaccard, a.tabular_jaccard
            ));
        }
        let dir = self.fresh_dir(Command::Report)?;
        std::fs::write(dir.join(REPORT_FILE), &out).map_err(|e| Error::io(&dir, e))?;
        print!("{out}");
        Ok(())
    }
}
