use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::record::AdmissionRecord;
use crate::error::{Error, Result};

/// Train/validation/test admission ids. Admission ids within a split keep
/// the order of the input records.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitPart {
    Train,
    Validation,
    Test,
}

impl DatasetSplit {
    pub fn part(&self, part: SplitPart) -> &[String] {
        match part {
            SplitPart::Train => &self.train,
            SplitPart::Validation => &self.validation,
            SplitPart::Test => &self.test,
        }
    }

    /// Records belonging to `part`, in split order.
    pub fn select<'a>(&self, records: &'a [AdmissionRecord], part: SplitPart) -> Vec<&'a AdmissionRecord> {
        let by_id: HashMap<&str, &AdmissionRecord> =
            records.iter().map(|r| (r.admission_id.as_str(), r)).collect();
        self.part(part)
            .iter()
            .filter_map(|id| by_id.get(id.as_str()).copied())
            .collect()
    }
}

/// Shuffles patients by `seed` and fills train, then validation, then test
/// until each reaches its share of admissions. All admissions of a patient
/// land in the same split.
pub fn split_by_patient(records: &[AdmissionRecord], ratios: [f64; 3], seed: u64) -> Result<DatasetSplit> {
    if ratios.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::InvalidArgument(format!("split ratios must be positive: {ratios:?}")));
    }
    let total: f64 = ratios.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("split ratios sum to {total}, not 1")));
    }

    // Patients in order of first appearance so the shuffle input is stable.
    let mut patients: Vec<&str> = Vec::new();
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for r in records {
        let c = counts.entry(r.patient_id.as_str()).or_insert(0);
        if *c == 0 {
            patients.push(r.patient_id.as_str());
        }
        *c += 1;
    }
    if patients.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 patients to split, found {}",
            patients.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    patients.shuffle(&mut rng);

    let n = records.len() as f64;
    let targets = ratios.map(|r| r * n);
    let mut filled = [0usize; 3];
    let mut assignment: HashMap<&str, usize> = HashMap::new();
    let mut part = 0usize;
    for (i, patient) in patients.iter().enumerate() {
        let remaining_patients = patients.len() - i;
        // Leave at least one patient for every later split.
        while part < 2 && remaining_patients <= 2 - part {
            if filled[part] == 0 {
                break;
            }
            part += 1;
        }
        assignment.insert(patient, part);
        filled[part] += counts[patient];
        if part < 2 && filled[part] as f64 >= targets[part] - 1e-9 {
            part += 1;
        }
    }

    let mut split = DatasetSplit {
        train: Vec::new(),
        validation: Vec::new(),
        test: Vec::new(),
        seed,
    };
    for r in records {
        let bucket = match assignment[r.patient_id.as_str()] {
            0 => &mut split.train,
            1 => &mut split.validation,
            _ => &mut split.test,
        };
        bucket.push(r.admission_id.clone());
    }
    Ok(split)
}
