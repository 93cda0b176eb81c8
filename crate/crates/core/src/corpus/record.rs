use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Note {
    pub category: String,
    pub text: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabFlag {
    Normal,
    Abnormal,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabEvent {
    pub test_id: String,
    pub flag: LabFlag,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartEvent {
    pub measure_id: String,
    pub value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MicroResult {
    Positive,
    Negative,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MicroEvent {
    pub organism_id: String,
    pub result: MicroResult,
}

/// One hospital admission with everything the three predictors consume.
///
/// `labels[j]` is the ground truth for catalog code `j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissionRecord {
    pub admission_id: String,
    pub patient_id: String,
    /// In chronological (file) order.
    pub notes: Vec<Note>,
    pub diagnosis_phrases: Vec<String>,
    pub lab_events: Vec<LabEvent>,
    pub chart_events: Vec<ChartEvent>,
    pub medications: Vec<String>,
    pub micro_events: Vec<MicroEvent>,
    pub labels: Vec<bool>,
}

impl AdmissionRecord {
    pub fn new(admission_id: impl Into<String>, patient_id: impl Into<String>, num_codes: usize) -> Self {
        AdmissionRecord {
            admission_id: admission_id.into(),
            patient_id: patient_id.into(),
            notes: Vec::new(),
            diagnosis_phrases: Vec::new(),
            lab_events: Vec::new(),
            chart_events: Vec::new(),
            medications: Vec::new(),
            micro_events: Vec::new(),
            labels: vec![false; num_codes],
        }
    }

    /// All notes joined in order, separated by blank lines.
    pub fn combined_text(&self) -> String {
        self.notes
            .iter()
            .map(|n| n.text.as_str())
            .collect::<Vec<_>>()
            .join("\n\n")
    }

    pub fn positive_codes(&self) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(j, &y)| y.then_some(j))
    }
}
