//! Schema-faithful synthetic admissions with planted, known signals.
//!
//! Every admission is first generated from label-independent background
//! processes; planting for positive codes is applied afterwards, so with
//! `p_signal = 0` the tabular features carry no label information at all.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::catalog::{CodeCatalog, CodeEntry};
use super::record::{AdmissionRecord, ChartEvent, LabEvent, LabFlag, MicroEvent, MicroResult, Note};
use crate::error::{Error, Result};
use crate::tabular::{default_chart_ranges, ChartRange, FeatureId, Table};

/// Signals planted for one code.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedCode {
    pub code: String,
    pub description: String,
    /// Phrases drawn for the diagnosis field.
    #[serde(default)]
    pub synonyms: Vec<String>,
    pub prevalence: f64,
    /// Phrases inserted into a note of positive admissions.
    #[serde(default)]
    pub keywords: Vec<String>,
    /// Tabular features set for positive admissions.
    #[serde(default)]
    pub features: Vec<FeatureId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub codes: Vec<PlantedCode>,
    pub admissions: usize,
    pub max_admissions_per_patient: usize,
    /// Probability a positive code contributes a synonym to the diagnosis field.
    pub p_diag: f64,
    /// Probability each informative tabular feature is set for a positive code.
    pub p_signal: f64,
    /// Probability a positive code's keyword is written into a note.
    pub p_keyword: f64,
    /// Probability a negative code's keyword still appears in a note.
    pub keyword_noise: f64,
    /// Background rate at which any informative feature is set.
    pub feature_noise: f64,
    /// Probability of an unrelated phrase in the diagnosis field.
    pub extra_diagnosis_rate: f64,
    pub notes_per_admission: [usize; 2],
    pub sentences_per_note: [usize; 2],
    pub labs_per_admission: [usize; 2],
    pub meds_per_admission: [usize; 2],
    pub micro_per_admission: [usize; 2],
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            codes: Vec::new(),
            admissions: 500,
            max_admissions_per_patient: 3,
            p_diag: 0.8,
            p_signal: 0.9,
            p_keyword: 1.0,
            keyword_noise: 0.0,
            feature_noise: 0.05,
            extra_diagnosis_rate: 0.3,
            notes_per_admission: [1, 2],
            sentences_per_note: [6, 10],
            labs_per_admission: [6, 12],
            meds_per_admission: [3, 8],
            micro_per_admission: [0, 2],
        }
    }
}

/// The generator's answer key: which keywords, synonyms and features were
/// planted for each code.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedMapping {
    pub schema_version: u32,
    pub codes: Vec<PlantedCode>,
}

impl PlantedMapping {
    pub fn get(&self, code: &str) -> Option<&PlantedCode> {
        self.codes.iter().find(|c| c.code == code)
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticCorpus {
    pub catalog: CodeCatalog,
    pub records: Vec<AdmissionRecord>,
    pub planted: PlantedMapping,
}

const FILLER: &[&str] = &[
    "patient", "admitted", "with", "history", "of", "and", "the", "was", "noted", "to", "be", "on",
    "stable", "overnight", "denies", "pain", "reports", "mild", "discomfort", "family", "at",
    "bedside", "plan", "continue", "current", "regimen", "follow", "up", "outpatient", "clinic",
    "exam", "notable", "for", "no", "acute", "distress", "alert", "oriented", "ambulating",
    "tolerating", "diet", "vitals", "within", "limits", "review", "systems", "otherwise",
    "negative", "social", "lives", "alone", "retired", "teacher", "wife", "daughter", "home",
    "services", "physical", "therapy", "evaluated", "cleared", "discharge", "instructions",
    "given", "understood", "questions", "answered", "consult", "recommended", "imaging",
    "chest", "film", "unremarkable", "abdomen", "soft", "nontender", "extremities", "warm",
    "well", "perfused", "skin", "intact", "sleeping", "comfortably", "nursing", "note", "day",
    "shift", "morning", "afternoon", "evening", "labs", "drawn", "pending", "medications",
    "reconciled", "allergies", "none", "known", "code", "status", "full", "contact", "primary",
    "team", "aware", "monitor", "closely", "encourage", "mobility", "incentive", "spirometry",
    "pressure", "ulcer", "prevention", "fall", "precautions", "in", "place",
];

const BACKGROUND_LABS: &[&str] = &[
    "sodium", "potassium", "chloride", "bicarbonate", "calcium", "magnesium", "phosphate",
    "albumin", "bilirubin", "alt", "ast", "lipase", "wbc", "platelets", "inr", "ptt", "lactate",
    "ph", "po2", "pco2", "urea_nitrogen", "monocytes", "basophils", "lymphocytes",
];

const BACKGROUND_MEDS: &[&str] = &[
    "acetaminophen", "heparin", "docusate", "senna", "pantoprazole", "ondansetron",
    "sodium_chloride_flush", "potassium_chloride", "magnesium_sulfate", "vancomycin",
    "piperacillin", "oxycodone", "morphine", "lorazepam", "famotidine", "bisacodyl",
    "polyethylene_glycol", "albuterol", "ipratropium", "aspirin",
];

const BACKGROUND_ORGANISMS: &[&str] = &[
    "staph_aureus", "e_coli", "klebsiella", "pseudomonas", "enterococcus", "candida",
    "strep_pneumoniae", "c_difficile",
];

const UNRELATED_DIAGNOSES: &[&str] = &[
    "chest pain", "fall", "altered mental status", "shortness of breath", "syncope",
    "abdominal pain", "fever", "weakness",
];

fn range_draw<R: Rng>(rng: &mut R, bounds: [usize; 2]) -> usize {
    let (lo, hi) = (bounds[0].min(bounds[1]), bounds[0].max(bounds[1]));
    rng.random_range(lo..=hi)
}

impl GeneratorConfig {
    /// Five fixture codes with planted keywords, synonyms and tabular
    /// features, used by the examples and the acceptance suite.
    pub fn planted_fixture(admissions: usize) -> Self {
        let catalog = CodeCatalog::fixture_5();
        let plan: [(&str, &[&str], Vec<FeatureId>); 5] = [
            (
                "I10",
                &["essential hypertension", "htn"],
                vec![FeatureId::new(Table::Chart, "sbp"), FeatureId::new(Table::Med, "atenolol")],
            ),
            (
                "I50.9",
                &["congestive heart failure", "chf exacerbation"],
                vec![FeatureId::new(Table::Lab, "troponin_t"), FeatureId::new(Table::Med, "furosemide")],
            ),
            (
                "N17.9",
                &["acute kidney injury", "rising creatinine"],
                vec![FeatureId::new(Table::Lab, "creatinine")],
            ),
            (
                "E11.9",
                &["metformin", "type 2 diabetes"],
                vec![FeatureId::new(Table::Lab, "glucose"), FeatureId::new(Table::Med, "insulin")],
            ),
            (
                "D64.9",
                &["anemia", "low hemoglobin"],
                vec![FeatureId::new(Table::Lab, "hematocrit")],
            ),
        ];
        let codes = plan
            .into_iter()
            .map(|(code, keywords, features)| {
                let entry = catalog.entry(catalog.index_of(code).expect("fixture code"));
                PlantedCode {
                    code: code.to_string(),
                    description: entry.description.clone(),
                    synonyms: entry.synonyms.clone(),
                    prevalence: 0.3,
                    keywords: keywords.iter().map(|k| k.to_string()).collect(),
                    features,
                }
            })
            .collect();
        GeneratorConfig {
            codes,
            admissions,
            ..GeneratorConfig::default()
        }
    }

    pub fn catalog(&self) -> Result<CodeCatalog> {
        CodeCatalog::new(
            self.codes
                .iter()
                .map(|c| CodeEntry {
                    code: c.code.clone(),
                    description: c.description.clone(),
                    synonyms: c.synonyms.clone(),
                })
                .collect(),
        )
    }

    fn validate(&self) -> Result<()> {
        if self.codes.is_empty() {
            return Err(Error::InvalidArgument("generator config has no codes".into()));
        }
        if self.admissions == 0 {
            return Err(Error::InvalidArgument("generator config requests zero admissions".into()));
        }
        let probs = [
            ("p_diag", self.p_diag),
            ("p_signal", self.p_signal),
            ("p_keyword", self.p_keyword),
            ("keyword_noise", self.keyword_noise),
            ("feature_noise", self.feature_noise),
            ("extra_diagnosis_rate", self.extra_diagnosis_rate),
        ];
        for (name, p) in probs
            .into_iter()
            .chain(self.codes.iter().map(|c| ("prevalence", c.prevalence)))
        {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!("{name} = {p} is not a probability")));
            }
        }
        if self.max_admissions_per_patient == 0 || self.notes_per_admission[1] == 0 {
            return Err(Error::InvalidArgument(
                "admissions per patient and notes per admission must allow at least one".into(),
            ));
        }
        Ok(())
    }
}

struct Generator<'a> {
    config: &'a GeneratorConfig,
    chart_ranges: Vec<ChartRange>,
    lab_pool: Vec<String>,
    planted_meds: Vec<String>,
    planted_organisms: Vec<String>,
}

impl Generator<'_> {
    fn sentence<R: Rng>(&self, rng: &mut R) -> Vec<String> {
        let len = rng.random_range(6..=12);
        let mut words: Vec<String> = (0..len).map(|_| FILLER.choose(rng).unwrap().to_string()).collect();
        if rng.random_bool(0.15) {
            let (label, lo, hi) = [("hr", 60, 110), ("temp", 97, 101), ("rr", 12, 24)].choose(rng).copied().unwrap();
            let at = rng.random_range(0..=words.len());
            words.insert(at, format!("{label} {}", rng.random_range(lo..=hi)));
        }
        words
    }

    fn render(sentences: &[Vec<String>]) -> String {
        sentences
            .iter()
            .map(|s| {
                let mut text = s.join(" ");
                if let Some(first) = text.get(0..1) {
                    text.replace_range(0..1, &first.to_uppercase());
                }
                text.push('.');
                text
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn lab_flags<R: Rng>(rng: &mut R, abnormal: bool) -> Vec<LabFlag> {
        let m = rng.random_range(1..=3usize);
        let n_abnormal = if abnormal { m / 2 + 1 } else { rng.random_range(0..=(m - 1) / 2) };
        let mut flags: Vec<LabFlag> = (0..m)
            .map(|i| if i < n_abnormal { LabFlag::Abnormal } else { LabFlag::Normal })
            .collect();
        flags.shuffle(rng);
        flags
    }

    fn chart_value<R: Rng>(rng: &mut R, range: &ChartRange, out_of_range: bool) -> f64 {
        let width = range.high - range.low;
        let value = if out_of_range {
            if rng.random_bool(0.5) {
                range.high + rng.random_range(0.1..0.5) * width
            } else {
                range.low - rng.random_range(0.1..0.3) * width
            }
        } else {
            range.low + rng.random_range(0.05..0.95) * width
        };
        (value * 10.0).round() / 10.0
    }

    fn background<R: Rng>(&self, rng: &mut R, record: &mut AdmissionRecord) {
        let cfg = self.config;
        let n_notes = range_draw(rng, cfg.notes_per_admission).max(1);
        for i in 0..n_notes {
            let n_sent = range_draw(rng, cfg.sentences_per_note).max(1);
            let sentences: Vec<Vec<String>> = (0..n_sent).map(|_| self.sentence(rng)).collect();
            record.notes.push(Note {
                category: if i == 0 { "Discharge summary".into() } else { "Nursing".into() },
                text: Self::render(&sentences),
            });
        }

        let n_labs = range_draw(rng, cfg.labs_per_admission).min(self.lab_pool.len());
        for test in self.lab_pool.choose_multiple(rng, n_labs) {
            let abnormal = rng.random_bool(cfg.feature_noise);
            for flag in Self::lab_flags(rng, abnormal) {
                record.lab_events.push(LabEvent {
                    test_id: test.clone(),
                    flag,
                });
            }
        }

        for range in &self.chart_ranges {
            let readings = rng.random_range(1..=3);
            for r in 0..readings {
                let out = if r + 1 == readings {
                    rng.random_bool(cfg.feature_noise)
                } else {
                    rng.random_bool(0.2)
                };
                record.chart_events.push(ChartEvent {
                    measure_id: range.measure_id.clone(),
                    value: Self::chart_value(rng, range, out),
                });
            }
        }

        let n_meds = range_draw(rng, cfg.meds_per_admission).min(BACKGROUND_MEDS.len());
        record
            .medications
            .extend(BACKGROUND_MEDS.choose_multiple(rng, n_meds).map(|m| m.to_string()));
        for med in &self.planted_meds {
            if rng.random_bool(cfg.feature_noise) {
                record.medications.push(med.clone());
            }
        }

        let n_micro = range_draw(rng, cfg.micro_per_admission).min(BACKGROUND_ORGANISMS.len());
        for org in BACKGROUND_ORGANISMS.choose_multiple(rng, n_micro) {
            let result = if rng.random_bool(0.3) { MicroResult::Positive } else { MicroResult::Negative };
            record.micro_events.push(MicroEvent {
                organism_id: org.to_string(),
                result,
            });
        }
        for org in &self.planted_organisms {
            if rng.random_bool(cfg.feature_noise) {
                record.micro_events.push(MicroEvent {
                    organism_id: org.clone(),
                    result: MicroResult::Positive,
                });
            }
        }
    }

    fn plant_keyword<R: Rng>(rng: &mut R, record: &mut AdmissionRecord, keyword: &str) {
        let note = rng.random_range(0..record.notes.len());
        let text = &mut record.notes[note].text;
        // Insert at a word boundary inside the note.
        let boundaries: Vec<usize> = text
            .char_indices()
            .filter(|(_, c)| *c == ' ')
            .map(|(i, _)| i)
            .collect();
        match boundaries.choose(rng) {
            Some(&at) => text.insert_str(at, &format!(" {keyword}")),
            None => {
                text.push(' ');
                text.push_str(keyword);
            }
        }
    }

    fn plant_feature<R: Rng>(&self, rng: &mut R, record: &mut AdmissionRecord, feature: &FeatureId) {
        match feature.table {
            Table::Lab => {
                record.lab_events.retain(|e| e.test_id != feature.id);
                for flag in Self::lab_flags(rng, true) {
                    record.lab_events.push(LabEvent {
                        test_id: feature.id.clone(),
                        flag,
                    });
                }
            }
            Table::Chart => {
                if let Some(range) = self.chart_ranges.iter().find(|r| r.measure_id == feature.id) {
                    let value = Self::chart_value(rng, range, true);
                    record.chart_events.push(ChartEvent {
                        measure_id: feature.id.clone(),
                        value,
                    });
                }
            }
            Table::Med => {
                if !record.medications.contains(&feature.id) {
                    record.medications.push(feature.id.clone());
                }
            }
            Table::Bio => record.micro_events.push(MicroEvent {
                organism_id: feature.id.clone(),
                result: MicroResult::Positive,
            }),
        }
    }
}

/// Generates `config.admissions` admissions. Identical `(config, seed)`
/// always yields an identical corpus.
pub fn generate_synthetic(config: &GeneratorConfig, seed: u64) -> Result<SyntheticCorpus> {
    config.validate()?;
    let catalog = config.catalog()?;
    let features = || config.codes.iter().flat_map(|c| c.features.iter());
    let mut lab_pool: Vec<String> = BACKGROUND_LABS.iter().map(|s| s.to_string()).collect();
    for f in features().filter(|f| f.table == Table::Lab) {
        if !lab_pool.contains(&f.id) {
            lab_pool.push(f.id.clone());
        }
    }
    let collect = |table: Table| -> Vec<String> {
        let mut ids: Vec<String> = features().filter(|f| f.table == table).map(|f| f.id.clone()).collect();
        ids.dedup();
        ids
    };
    let gen = Generator {
        config,
        chart_ranges: default_chart_ranges(),
        lab_pool,
        planted_meds: collect(Table::Med),
        planted_organisms: collect(Table::Bio),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(config.admissions);
    let mut patient = 0usize;
    let mut left_for_patient = 0usize;
    for a in 0..config.admissions {
        if left_for_patient == 0 {
            patient += 1;
            left_for_patient = rng.random_range(1..=config.max_admissions_per_patient);
        }
        left_for_patient -= 1;
        let mut record = AdmissionRecord::new(format!("{}", 100_001 + a), format!("{}", 10_000 + patient), catalog.len());
        gen.background(&mut rng, &mut record);

        for (j, code) in config.codes.iter().enumerate() {
            record.labels[j] = rng.random_bool(code.prevalence);
        }

        let mut phrases = Vec::new();
        for (j, code) in config.codes.iter().enumerate() {
            let positive = record.labels[j];
            let keyword_p = if positive { config.p_keyword } else { config.keyword_noise };
            if !code.keywords.is_empty() && rng.random_bool(keyword_p) {
                let kw = code.keywords.choose(&mut rng).unwrap();
                Generator::plant_keyword(&mut rng, &mut record, kw);
            }
            if !positive {
                continue;
            }
            if rng.random_bool(config.p_diag) {
                let phrase = code.synonyms.choose(&mut rng).unwrap_or(&code.description);
                phrases.push(phrase.replace(';', ","));
            }
            for feature in &code.features {
                if rng.random_bool(config.p_signal) {
                    gen.plant_feature(&mut rng, &mut record, feature);
                }
            }
        }
        if rng.random_bool(config.extra_diagnosis_rate) {
            phrases.push(UNRELATED_DIAGNOSES.choose(&mut rng).unwrap().to_string());
        }
        phrases.shuffle(&mut rng);
        record.diagnosis_phrases = phrases;
        records.push(record);
    }

    Ok(SyntheticCorpus {
        catalog,
        records,
        planted: PlantedMapping {
            schema_version: crate::SCHEMA_VERSION,
            codes: config.codes.clone(),
        },
    })
}
