use std::path::Path;

use log::info;
use serde::{Deserialize, Serialize};

use super::schema::{default_chart_ranges, fit_schema, vectorize, BinaryFeatureVector, ChartRange, FeatureSchema, Table};
use super::tree::{fit_trees, DecisionTree, TreeParams};
use crate::corpus::AdmissionRecord;
use crate::error::{Error, Result};

pub const TABULAR_MODEL_FILE: &str = "model.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TabularConfig {
    /// Medications prescribed fewer times than this in training are dropped.
    pub med_min_frequency: usize,
    pub chart_ranges: Vec<ChartRange>,
    /// Tables feeding the combined model; a single table gives a
    /// per-table sub-model.
    pub blocks: Vec<Table>,
    pub tree: TreeParams,
}

impl Default for TabularConfig {
    fn default() -> Self {
        TabularConfig {
            med_min_frequency: 50,
            chart_ranges: default_chart_ranges(),
            blocks: vec![Table::Lab, Table::Med, Table::Bio, Table::Chart],
            tree: TreeParams::default(),
        }
    }
}

/// One-vs-all decision trees over a frozen feature schema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsembleModel {
    pub schema_version: u32,
    pub codes: Vec<String>,
    pub schema: FeatureSchema,
    pub trees: Vec<DecisionTree>,
}

impl TreeEnsembleModel {
    /// Fits schema and trees on training admissions only.
    pub fn fit(config: &TabularConfig, codes: &[String], train: &[&AdmissionRecord]) -> Result<Self> {
        if config.blocks.is_empty() {
            return Err(Error::InvalidArgument("tabular blocks must name at least one table".into()));
        }
        let schema = fit_schema(train, &config.chart_ranges, config.med_min_frequency, Some(&config.blocks))?;
        let rows: Vec<Vec<bool>> = train.iter().map(|r| vectorize(r, &schema).bits).collect();
        let labels: Vec<Vec<bool>> = train.iter().map(|r| r.labels.clone()).collect();
        Self::fit_vectors(schema, codes, &rows, &labels, &config.tree)
    }

    /// Fits trees on already vectorized rows.
    pub fn fit_vectors(
        schema: FeatureSchema,
        codes: &[String],
        rows: &[Vec<bool>],
        labels: &[Vec<bool>],
        params: &TreeParams,
    ) -> Result<Self> {
        let names: Vec<String> = schema.features.iter().map(|f| f.to_string()).collect();
        let trees = fit_trees(rows, labels, &names, codes, params)?;
        info!(
            "tabular model: {} features, {} trees, max depth {}",
            schema.width(),
            trees.len(),
            trees.iter().map(|t| t.depth()).max().unwrap_or(0)
        );
        Ok(TreeEnsembleModel {
            schema_version: crate::SCHEMA_VERSION,
            codes: codes.to_vec(),
            schema,
            trees,
        })
    }

    pub fn num_codes(&self) -> usize {
        self.trees.len()
    }

    pub fn vectorize(&self, record: &AdmissionRecord) -> BinaryFeatureVector {
        vectorize(record, &self.schema)
    }

    /// Per-code probabilities for a feature vector of the schema's width.
    pub fn predict_bits(&self, bits: &[bool]) -> Result<Vec<f64>> {
        if bits.len() != self.schema.width() {
            return Err(Error::Shape(format!(
                "feature vector has {} bits, schema has {}",
                bits.len(),
                self.schema.width()
            )));
        }
        Ok(self.trees.iter().map(|t| t.predict(bits)).collect())
    }

    pub fn predict(&self, record: &AdmissionRecord) -> Vec<f64> {
        let bits = self.vectorize(record).bits;
        self.trees.iter().map(|t| t.predict(&bits)).collect()
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let path = dir.as_ref().join(TABULAR_MODEL_FILE);
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let path = dir.as_ref().join(TABULAR_MODEL_FILE);
        let text = std::fs::read_to_string(&path).map_err(|_| Error::MissingFile(path.clone()))?;
        let mut model: TreeEnsembleModel = serde_json::from_str(&text)?;
        if model.schema_version != crate::SCHEMA_VERSION {
            return Err(Error::Data(format!(
                "tabular model schema version {} is not {}",
                model.schema_version,
                crate::SCHEMA_VERSION
            )));
        }
        if model.codes.len() != model.trees.len() {
            return Err(Error::Data("tabular model has one tree per code".into()));
        }
        model.schema.reindex()?;
        for t in &model.trees {
            t.check(model.schema.width())?;
        }
        Ok(model)
    }
}
