//! Evidence for predicted codes: path-influence phrases from the text
//! network, local-surrogate weights for tabular features, and Jaccard
//! agreement with annotated evidence.

mod influence;
mod jaccard;
mod report;
mod surrogate;

pub use influence::{assemble_phrases, word_influence, PhraseEvidence};
pub use jaccard::{jaccard_ids, jaccard_text, token_overlap};
pub use report::{agreement, read_annotations, AgreementSummary, Annotation, EvidenceReport};
pub use surrogate::{explain_tabular, proximity_kernel, FeatureEvidence, SurrogateConfig};
