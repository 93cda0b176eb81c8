//! CSV ingestion of MIMIC-III-shaped tables.
//!
//! Only the columns each stage needs are read; extra columns are ignored.
//! Column names match case-insensitively.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::catalog::CodeCatalog;
use super::record::{AdmissionRecord, ChartEvent, LabEvent, LabFlag, MicroEvent, MicroResult, Note};
use crate::error::{Error, Result};

/// File names and parsing options for a corpus directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemaConfig {
    pub admissions: String,
    pub notes: String,
    pub labs: String,
    pub prescriptions: String,
    pub microbiology: String,
    pub chart: String,
    pub labels: String,
    /// Separator between diagnosis phrases inside `ADMISSIONS.DIAGNOSIS`.
    pub diagnosis_separator: String,
    /// When false, a missing labels file yields all-negative labels.
    pub require_labels: bool,
}

impl Default for SchemaConfig {
    fn default() -> Self {
        SchemaConfig {
            admissions: "ADMISSIONS.csv".into(),
            notes: "NOTEEVENTS.csv".into(),
            labs: "LABEVENTS.csv".into(),
            prescriptions: "PRESCRIPTIONS.csv".into(),
            microbiology: "MICROBIOLOGYEVENTS.csv".into(),
            chart: "CHARTEVENTS.csv".into(),
            labels: "LABELS.csv".into(),
            diagnosis_separator: ";".into(),
            require_labels: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSummary {
    pub rows: usize,
    pub loaded: usize,
    pub malformed: usize,
    /// Rows whose admission id is not in ADMISSIONS.
    pub orphaned: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub admission_rows: usize,
    pub admissions_loaded: usize,
    pub admissions_dropped: usize,
    /// Per table name.
    pub tables: BTreeMap<String, TableSummary>,
    pub labels_outside_catalog: usize,
    pub distinct_lab_tests: usize,
    pub distinct_medications: usize,
    pub distinct_organisms: usize,
}

#[derive(Clone, Debug)]
pub struct IngestedCorpus {
    pub records: Vec<AdmissionRecord>,
    pub summary: IngestSummary,
}

struct Table {
    path: PathBuf,
    columns: Vec<usize>,
    reader: csv::Reader<std::fs::File>,
}

impl Table {
    fn open(dir: &Path, file: &str, required: &[&str]) -> Result<Self> {
        let path = dir.join(file);
        if !path.is_file() {
            return Err(Error::MissingFile(path));
        }
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(&path)
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        let headers = reader
            .headers()
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?
            .clone();
        let columns = required
            .iter()
            .map(|name| {
                headers
                    .iter()
                    .position(|h| h.trim().eq_ignore_ascii_case(name))
                    .ok_or_else(|| {
                        Error::Data(format!("{} lacks required column {name}", path.display()))
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Table {
            path,
            columns,
            reader,
        })
    }

    /// Visits each row's required fields; `None` marks an unreadable row.
    fn for_each(mut self, mut visit: impl FnMut(Option<Vec<&str>>)) {
        let mut record = csv::StringRecord::new();
        loop {
            match self.reader.read_record(&mut record) {
                Ok(false) => break,
                Ok(true) => {
                    let fields: Option<Vec<&str>> =
                        self.columns.iter().map(|&c| record.get(c)).collect();
                    visit(fields);
                }
                Err(e) => {
                    if e.is_io_error() {
                        warn!("{}: {e}", self.path.display());
                        break;
                    }
                    visit(None);
                }
            }
        }
    }
}

fn parse_lab_flag(raw: &str) -> Option<LabFlag> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "" | "normal" => Some(LabFlag::Normal),
        "abnormal" | "delta" => Some(LabFlag::Abnormal),
        _ => None,
    }
}

fn parse_micro_result(raw: &str) -> Option<MicroResult> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "positive" | "pos" | "p" => Some(MicroResult::Positive),
        "negative" | "neg" | "n" => Some(MicroResult::Negative),
        _ => None,
    }
}

/// Loads one record per admission in `ADMISSIONS`, in file order.
///
/// Rows in the event tables referencing unknown admissions are dropped and
/// counted; unparseable rows are skipped and counted. Fails when a required
/// file is missing or no admission survives.
pub fn load_tables(dir: impl AsRef<Path>, schema: &SchemaConfig, catalog: &CodeCatalog) -> Result<IngestedCorpus> {
    let dir = dir.as_ref();
    let mut summary = IngestSummary::default();

    let tables = [
        (&schema.admissions, "ADMISSIONS"),
        (&schema.notes, "NOTEEVENTS"),
        (&schema.labs, "LABEVENTS"),
        (&schema.prescriptions, "PRESCRIPTIONS"),
        (&schema.microbiology, "MICROBIOLOGYEVENTS"),
        (&schema.chart, "CHARTEVENTS"),
    ];
    for (file, _) in tables {
        if !dir.join(file).is_file() {
            return Err(Error::MissingFile(dir.join(file)));
        }
    }

    let mut records: Vec<AdmissionRecord> = Vec::new();
    let mut by_id: HashMap<String, usize> = HashMap::new();
    let separator = schema.diagnosis_separator.as_str();
    Table::open(dir, &schema.admissions, &["HADM_ID", "SUBJECT_ID", "DIAGNOSIS"])?.for_each(|row| {
        summary.admission_rows += 1;
        let Some(row) = row else {
            summary.admissions_dropped += 1;
            return;
        };
        let (hadm, subject) = (row[0].trim(), row[1].trim());
        if hadm.is_empty() || subject.is_empty() || by_id.contains_key(hadm) {
            summary.admissions_dropped += 1;
            return;
        }
        let mut record = AdmissionRecord::new(hadm, subject, catalog.len());
        record.diagnosis_phrases = row[2]
            .split(separator)
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(String::from)
            .collect();
        by_id.insert(hadm.to_string(), records.len());
        records.push(record);
    });
    summary.admissions_loaded = records.len();
    if records.is_empty() {
        return Err(Error::Data(format!(
            "{} contains no usable admissions",
            dir.join(&schema.admissions).display()
        )));
    }

    // Shared row handling for the event tables.
    fn visit_events(
        table: Table,
        name: &str,
        by_id: &HashMap<String, usize>,
        records: &mut [AdmissionRecord],
        summary: &mut IngestSummary,
        mut apply: impl FnMut(&mut AdmissionRecord, &[&str]) -> bool,
    ) {
        let mut stats = TableSummary::default();
        table.for_each(|row| {
            stats.rows += 1;
            let Some(row) = row else {
                stats.malformed += 1;
                return;
            };
            match by_id.get(row[0].trim()) {
                None => stats.orphaned += 1,
                Some(&i) => {
                    if apply(&mut records[i], &row[1..]) {
                        stats.loaded += 1;
                    } else {
                        stats.malformed += 1;
                    }
                }
            }
        });
        if stats.orphaned > 0 {
            info!("{name}: dropped {} rows with unknown admission ids", stats.orphaned);
        }
        if stats.malformed > 0 {
            warn!("{name}: skipped {} malformed rows", stats.malformed);
        }
        summary.tables.insert(name.to_string(), stats);
    }

    let table = Table::open(dir, &schema.notes, &["HADM_ID", "CATEGORY", "TEXT"])?;
    visit_events(table, "NOTEEVENTS", &by_id, &mut records, &mut summary, |r, f| {
        r.notes.push(Note {
            category: f[0].to_string(),
            text: f[1].to_string(),
        });
        true
    });

    let table = Table::open(dir, &schema.labs, &["HADM_ID", "ITEMID", "FLAG"])?;
    visit_events(table, "LABEVENTS", &by_id, &mut records, &mut summary, |r, f| {
        let test_id = f[0].trim();
        match parse_lab_flag(f[1]) {
            Some(flag) if !test_id.is_empty() => {
                r.lab_events.push(LabEvent {
                    test_id: test_id.to_string(),
                    flag,
                });
                true
            }
            _ => false,
        }
    });

    let table = Table::open(dir, &schema.prescriptions, &["HADM_ID", "DRUG"])?;
    visit_events(table, "PRESCRIPTIONS", &by_id, &mut records, &mut summary, |r, f| {
        let drug = f[0].trim();
        if drug.is_empty() {
            return false;
        }
        r.medications.push(drug.to_string());
        true
    });

    let table = Table::open(dir, &schema.microbiology, &["HADM_ID", "ORG_ITEMID", "INTERPRETATION"])?;
    visit_events(table, "MICROBIOLOGYEVENTS", &by_id, &mut records, &mut summary, |r, f| {
        let organism = f[0].trim();
        match parse_micro_result(f[1]) {
            Some(result) if !organism.is_empty() => {
                r.micro_events.push(MicroEvent {
                    organism_id: organism.to_string(),
                    result,
                });
                true
            }
            _ => false,
        }
    });

    let table = Table::open(dir, &schema.chart, &["HADM_ID", "ITEMID", "VALUENUM"])?;
    visit_events(table, "CHARTEVENTS", &by_id, &mut records, &mut summary, |r, f| {
        let measure = f[0].trim();
        match f[1].trim().parse::<f64>() {
            Ok(value) if value.is_finite() && !measure.is_empty() => {
                r.chart_events.push(ChartEvent {
                    measure_id: measure.to_string(),
                    value,
                });
                true
            }
            _ => false,
        }
    });

    let labels_path = dir.join(&schema.labels);
    if labels_path.is_file() {
        let mut outside = 0usize;
        let table = Table::open(dir, &schema.labels, &["HADM_ID", "ICD10"])?;
        visit_events(table, "LABELS", &by_id, &mut records, &mut summary, |r, f| {
            match catalog.index_of(f[0].trim()) {
                Some(j) => r.labels[j] = true,
                None => outside += 1,
            }
            true
        });
        summary.labels_outside_catalog = outside;
    } else if schema.require_labels {
        return Err(Error::MissingFile(labels_path));
    } else {
        warn!("{} not found; all labels are negative", labels_path.display());
    }

    let distinct = |ids: Vec<&str>| {
        let mut ids = ids;
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    };
    summary.distinct_lab_tests =
        distinct(records.iter().flat_map(|r| r.lab_events.iter().map(|e| e.test_id.as_str())).collect());
    summary.distinct_medications =
        distinct(records.iter().flat_map(|r| r.medications.iter().map(String::as_str)).collect());
    summary.distinct_organisms = distinct(
        records
            .iter()
            .flat_map(|r| r.micro_events.iter().map(|e| e.organism_id.as_str()))
            .collect(),
    );
    // Reference extract sizes: 753 lab tests, 1135 medications, 363 organisms.
    info!(
        "ingested {} admissions: {} lab tests, {} medications, {} organisms",
        records.len(),
        summary.distinct_lab_tests,
        summary.distinct_medications,
        summary.distinct_organisms
    );

    Ok(IngestedCorpus { records, summary })
}

/// Writes records in the same layout [`load_tables`] reads.
pub fn write_tables(
    dir: impl AsRef<Path>,
    records: &[AdmissionRecord],
    schema: &SchemaConfig,
    catalog: &CodeCatalog,
) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    fn writer(dir: &Path, file: &str, header: &[&str]) -> Result<csv::Writer<std::fs::File>> {
        let mut w = csv::Writer::from_path(dir.join(file))?;
        w.write_record(header)?;
        Ok(w)
    }

    for r in records {
        if r.diagnosis_phrases.iter().any(|p| p.contains(&schema.diagnosis_separator)) {
            return Err(Error::Data(format!(
                "admission {}: diagnosis phrase contains the separator {:?}",
                r.admission_id, schema.diagnosis_separator
            )));
        }
    }

    let mut adm = writer(dir, &schema.admissions, &["HADM_ID", "SUBJECT_ID", "DIAGNOSIS"])?;
    let mut notes = writer(dir, &schema.notes, &["HADM_ID", "CATEGORY", "TEXT"])?;
    let mut labs = writer(dir, &schema.labs, &["HADM_ID", "ITEMID", "FLAG"])?;
    let mut meds = writer(dir, &schema.prescriptions, &["HADM_ID", "DRUG"])?;
    let mut micro = writer(dir, &schema.microbiology, &["HADM_ID", "ORG_ITEMID", "INTERPRETATION"])?;
    let mut chart = writer(dir, &schema.chart, &["HADM_ID", "ITEMID", "VALUENUM"])?;
    let mut labels = writer(dir, &schema.labels, &["HADM_ID", "ICD10"])?;

    for r in records {
        let id = r.admission_id.as_str();
        adm.write_record([id, &r.patient_id, &r.diagnosis_phrases.join(&schema.diagnosis_separator)])?;
        for n in &r.notes {
            notes.write_record([id, &n.category, &n.text])?;
        }
        for e in &r.lab_events {
            let flag = match e.flag {
                LabFlag::Normal => "",
                LabFlag::Abnormal => "abnormal",
            };
            labs.write_record([id, &e.test_id, flag])?;
        }
        for d in &r.medications {
            meds.write_record([id, d])?;
        }
        for e in &r.micro_events {
            let result = match e.result {
                MicroResult::Positive => "positive",
                MicroResult::Negative => "negative",
            };
            micro.write_record([id, &e.organism_id, result])?;
        }
        for e in &r.chart_events {
            chart.write_record([id, &e.measure_id, &e.value.to_string()])?;
        }
        for j in r.positive_codes() {
            labels.write_record([id, &catalog.entry(j).code])?;
        }
    }
    for w in [&mut adm, &mut notes, &mut labs, &mut meds, &mut micro, &mut chart, &mut labels] {
        w.flush().map_err(|e| Error::io(dir, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::catalog::CodeEntry;

    fn catalog() -> CodeCatalog {
        CodeCatalog::new(vec![CodeEntry::new("N17.9", "Acute kidney failure"), CodeEntry::new("I10", "Hypertension")])
            .unwrap()
    }

    fn write(dir: &Path, file: &str, body: &str) {
        std::fs::write(dir.join(file), body).unwrap();
    }

    fn minimal_dir() -> tempfile::TempDir {
        let tmp = tempfile::tempdir().unwrap();
        let d = tmp.path();
        write(d, "ADMISSIONS.csv", "HADM_ID,SUBJECT_ID,DIAGNOSIS\n100,7,ACUTE RENAL FAILURE;HTN\n");
        write(d, "NOTEEVENTS.csv", "HADM_ID,CATEGORY,TEXT\n100,Discharge summary,\"Creatinine rose, AKI.\"\n");
        write(d, "LABEVENTS.csv", "HADM_ID,ITEMID,FLAG\n100,50912,abnormal\n100,51006,abnormal\n");
        write(d, "PRESCRIPTIONS.csv", "HADM_ID,DRUG\n100,Furosemide\n");
        write(d, "MICROBIOLOGYEVENTS.csv", "HADM_ID,ORG_ITEMID,INTERPRETATION\n");
        write(d, "CHARTEVENTS.csv", "HADM_ID,ITEMID,VALUENUM\n100,heart_rate,88\n");
        write(d, "LABELS.csv", "HADM_ID,ICD10\n100,N17.9\n100,Z99.9\n");
        tmp
    }

    #[test]
    fn single_admission_maps_rows_directly() {
        let tmp = minimal_dir();
        let out = load_tables(tmp.path(), &SchemaConfig::default(), &catalog()).unwrap();
        assert_eq!(out.records.len(), 1);
        let r = &out.records[0];
        assert_eq!(r.lab_events.len(), 2);
        assert_eq!(r.notes.len(), 1);
        assert_eq!(r.diagnosis_phrases, vec!["ACUTE RENAL FAILURE", "HTN"]);
        assert_eq!(r.labels, vec![true, false]);
        assert_eq!(out.summary.labels_outside_catalog, 1);
    }

    #[test]
    fn orphan_note_rows_are_dropped() {
        let tmp = minimal_dir();
        write(
            tmp.path(),
            "NOTEEVENTS.csv",
            "HADM_ID,CATEGORY,TEXT\n100,Discharge summary,ok\n999,Nursing,orphan\n",
        );
        let out = load_tables(tmp.path(), &SchemaConfig::default(), &catalog()).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].notes.len(), 1);
        assert_eq!(out.summary.tables["NOTEEVENTS"].orphaned, 1);
    }

    #[test]
    fn malformed_rows_are_counted_and_skipped() {
        let tmp = minimal_dir();
        write(
            tmp.path(),
            "CHARTEVENTS.csv",
            "HADM_ID,ITEMID,VALUENUM\n100,heart_rate,abc\n100,heart_rate,90\n100,sbp\n",
        );
        let out = load_tables(tmp.path(), &SchemaConfig::default(), &catalog()).unwrap();
        let chart = &out.summary.tables["CHARTEVENTS"];
        assert_eq!(chart.rows, 3);
        assert_eq!(chart.loaded, 1);
        assert_eq!(chart.malformed, 2);
    }

    #[test]
    fn missing_file_is_fatal_and_named() {
        let tmp = minimal_dir();
        std::fs::remove_file(tmp.path().join("LABEVENTS.csv")).unwrap();
        let err = load_tables(tmp.path(), &SchemaConfig::default(), &catalog()).unwrap_err();
        assert!(err.to_string().contains("LABEVENTS.csv"), "{err}");
    }

    #[test]
    fn zero_admissions_is_fatal() {
        let tmp = minimal_dir();
        write(tmp.path(), "ADMISSIONS.csv", "HADM_ID,SUBJECT_ID,DIAGNOSIS\n");
        assert!(matches!(
            load_tables(tmp.path(), &SchemaConfig::default(), &catalog()),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn admission_conservation_with_duplicates() {
        let tmp = minimal_dir();
        write(
            tmp.path(),
            "ADMISSIONS.csv",
            "HADM_ID,SUBJECT_ID,DIAGNOSIS\n100,7,x\n100,7,dup\n101,,missing subject\n102,8,\n",
        );
        let out = load_tables(tmp.path(), &SchemaConfig::default(), &catalog()).unwrap();
        let s = &out.summary;
        assert_eq!(s.admission_rows, 4);
        assert_eq!(s.admissions_loaded + s.admissions_dropped, s.admission_rows);
        assert_eq!(s.admissions_loaded, 2);
        assert!(out.records[1].diagnosis_phrases.is_empty());
    }
}
