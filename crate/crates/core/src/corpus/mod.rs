//! Data model, ingestion, patient-grouped splitting, and synthetic corpora.

mod catalog;
mod ingest;
mod record;
mod split;
mod synthetic;

pub use catalog::{CodeCatalog, CodeEntry, FIXTURE_CODES};
pub use ingest::{load_tables, write_tables, IngestSummary, IngestedCorpus, SchemaConfig, TableSummary};
pub use record::{AdmissionRecord, ChartEvent, LabEvent, LabFlag, MicroEvent, MicroResult, Note};
pub use split::{split_by_patient, DatasetSplit, SplitPart};
pub use synthetic::{generate_synthetic, GeneratorConfig, PlantedCode, PlantedMapping, SyntheticCorpus};
