use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use log::info;
use serde::{Deserialize, Serialize};

use crate::corpus::{AdmissionRecord, LabFlag, MicroResult};
use crate::error::{Error, Result};

/// Source table of a tabular feature.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Table {
    Lab,
    Chart,
    Med,
    Bio,
}

impl Table {
    pub const ALL: [Table; 4] = [Table::Lab, Table::Chart, Table::Med, Table::Bio];

    pub fn as_str(self) -> &'static str {
        match self {
            Table::Lab => "LAB",
            Table::Chart => "CHART",
            Table::Med => "MED",
            Table::Bio => "BIO",
        }
    }
}

impl fmt::Display for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Table {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Table::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown table {s:?}")))
    }
}

/// A table-qualified feature, written `TABLE:id` (e.g. `LAB:creatinine`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct FeatureId {
    pub table: Table,
    pub id: String,
}

impl FeatureId {
    pub fn new(table: Table, id: impl Into<String>) -> Self {
        FeatureId { table, id: id.into() }
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.table, self.id)
    }
}

impl FromStr for FeatureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (table, id) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidArgument(format!("feature id {s:?} is not TABLE:id")))?;
        Ok(FeatureId::new(table.parse()?, id))
    }
}

impl TryFrom<String> for FeatureId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<FeatureId> for String {
    fn from(f: FeatureId) -> String {
        f.to_string()
    }
}

/// Normal range of a chart measure; values outside are abnormal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartRange {
    pub measure_id: String,
    pub low: f64,
    pub high: f64,
}

impl ChartRange {
    pub fn new(measure_id: impl Into<String>, low: f64, high: f64) -> Self {
        ChartRange {
            measure_id: measure_id.into(),
            low,
            high,
        }
    }

    pub fn contains(&self, value: f64) -> bool {
        value >= self.low && value <= self.high
    }
}

/// Conventional adult ranges, overridable through configuration.
pub fn default_chart_ranges() -> Vec<ChartRange> {
    vec![
        ChartRange::new("heart_rate", 60.0, 100.0),
        ChartRange::new("sbp", 90.0, 120.0),
        ChartRange::new("dbp", 60.0, 80.0),
        ChartRange::new("bmi", 18.5, 25.0),
    ]
}

/// Frozen feature order: lab, chart, med, then bio block.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub features: Vec<FeatureId>,
    pub chart_ranges: Vec<ChartRange>,
    pub med_min_frequency: usize,
    #[serde(skip)]
    index: HashMap<FeatureId, usize>,
}

impl PartialEq for FeatureSchema {
    fn eq(&self, other: &Self) -> bool {
        self.features == other.features
            && self.chart_ranges == other.chart_ranges
            && self.med_min_frequency == other.med_min_frequency
    }
}

impl FeatureSchema {
    pub fn new(features: Vec<FeatureId>, chart_ranges: Vec<ChartRange>, med_min_frequency: usize) -> Result<Self> {
        let mut schema = FeatureSchema {
            features,
            chart_ranges,
            med_min_frequency,
            index: HashMap::new(),
        };
        schema.reindex()?;
        Ok(schema)
    }

    /// Rebuilds the lookup table; call after deserializing.
    pub fn reindex(&mut self) -> Result<()> {
        self.index.clear();
        for (i, f) in self.features.iter().enumerate() {
            if self.index.insert(f.clone(), i).is_some() {
                return Err(Error::Data(format!("duplicate feature {f}")));
            }
        }
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.features.len()
    }

    pub fn position(&self, feature: &FeatureId) -> Option<usize> {
        self.index.get(feature).copied()
    }

    pub fn block(&self, table: Table) -> impl Iterator<Item = &FeatureId> {
        self.features.iter().filter(move |f| f.table == table)
    }
}

/// Fits the feature list on training records. `blocks` restricts the
/// tables used (all four when `None`).
pub fn fit_schema<R: Borrow<AdmissionRecord>>(
    records: &[R],
    chart_ranges: &[ChartRange],
    med_min_frequency: usize,
    blocks: Option<&[Table]>,
) -> Result<FeatureSchema> {
    if records.is_empty() {
        return Err(Error::Data("cannot fit a feature schema on zero records".into()));
    }
    let wanted = |t: Table| blocks.is_none_or(|b| b.contains(&t));
    let mut labs = BTreeSet::new();
    let mut meds: BTreeMap<&str, usize> = BTreeMap::new();
    let mut organisms = BTreeSet::new();
    for r in records {
        let r = r.borrow();
        labs.extend(r.lab_events.iter().map(|e| e.test_id.as_str()));
        for m in &r.medications {
            *meds.entry(m.as_str()).or_insert(0) += 1;
        }
        organisms.extend(r.micro_events.iter().map(|e| e.organism_id.as_str()));
    }
    let mut features = Vec::new();
    if wanted(Table::Lab) {
        features.extend(labs.iter().map(|l| FeatureId::new(Table::Lab, *l)));
    }
    if wanted(Table::Chart) {
        features.extend(chart_ranges.iter().map(|c| FeatureId::new(Table::Chart, &c.measure_id)));
    }
    let kept_meds: Vec<&str> = meds
        .iter()
        .filter(|(_, &n)| n >= med_min_frequency)
        .map(|(m, _)| *m)
        .collect();
    if wanted(Table::Med) {
        features.extend(kept_meds.iter().map(|m| FeatureId::new(Table::Med, *m)));
    }
    if wanted(Table::Bio) {
        features.extend(organisms.iter().map(|o| FeatureId::new(Table::Bio, *o)));
    }
    info!(
        "tabular schema: {} lab tests, {} medications (of {} seen), {} organisms",
        labs.len(),
        kept_meds.len(),
        meds.len(),
        organisms.len()
    );
    FeatureSchema::new(features, chart_ranges.to_vec(), med_min_frequency)
}

/// Fixed-order bits of one admission.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryFeatureVector {
    pub bits: Vec<bool>,
}

impl BinaryFeatureVector {
    pub fn active(&self) -> Vec<usize> {
        self.bits.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i).collect()
    }
}

/// Lab: strict majority of abnormal flags. Chart: latest value outside its
/// range. Med: prescribed. Bio: any positive result. Missing is 0; ids not
/// in the schema are ignored.
pub fn vectorize(record: &AdmissionRecord, schema: &FeatureSchema) -> BinaryFeatureVector {
    let mut bits = vec![false; schema.width()];
    let mut lab_votes: HashMap<&str, (usize, usize)> = HashMap::new();
    for e in &record.lab_events {
        let v = lab_votes.entry(e.test_id.as_str()).or_insert((0, 0));
        match e.flag {
            LabFlag::Abnormal => v.0 += 1,
            LabFlag::Normal => v.1 += 1,
        }
    }
    for (test, (abnormal, normal)) in lab_votes {
        if let Some(i) = schema.position(&FeatureId::new(Table::Lab, test)) {
            bits[i] = abnormal > normal;
        }
    }
    for range in &schema.chart_ranges {
        let latest = record.chart_events.iter().rev().find(|e| e.measure_id == range.measure_id);
        if let (Some(e), Some(i)) = (latest, schema.position(&FeatureId::new(Table::Chart, &range.measure_id))) {
            bits[i] = !range.contains(e.value);
        }
    }
    for m in &record.medications {
        if let Some(i) = schema.position(&FeatureId::new(Table::Med, m)) {
            bits[i] = true;
        }
    }
    for e in &record.micro_events {
        if e.result == MicroResult::Positive {
            if let Some(i) = schema.position(&FeatureId::new(Table::Bio, &e.organism_id)) {
                bits[i] = true;
            }
        }
    }
    BinaryFeatureVector { bits }
}
