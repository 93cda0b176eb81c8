//! Diagnosis-phrase ranking: a char-CNN + word embedding + BiLSTM encoder
//! trained with a triplet loss, scoring codes by distance to their
//! descriptions.

mod config;
mod encoder;
mod mining;
mod rank;
mod synonyms;
mod train;
mod triplet;

pub use config::RankerConfig;
pub use encoder::{char_id, EncodedPhrase, EncoderTrace, PhraseEncoder, WordVocab, CHAR_VOCAB, WORD_UNK};
pub use mining::{candidate_ngrams, levenshtein, mine_corpus_negatives, mine_negatives};
pub use rank::{min_max_scores, scores_from_embeddings, DiagnosisRanker, RANKER_CHECKPOINT};
pub use synonyms::{LabeledPhrase, SynonymCorpus, SynonymEntry};
pub use train::{train_ranker, RankerEpoch, RankerLog};
pub use triplet::{euclidean, triplet_gradient, triplet_hinge, triplet_loss};
