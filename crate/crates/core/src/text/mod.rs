//! Tokenization, vocabulary construction and TF-IDF features.

mod keywords;
mod tfidf;
mod tokenize;
mod vocab;

pub use keywords::{
    bundled_guidelines, extract_guideline_keywords, load_guidelines, read_term_list, write_term_list, Guideline,
};
pub use tfidf::{compute_tfidf, TfidfModel, TfidfVector};
pub use tokenize::{normalize, phrase_tokens, token_strings, tokenize_words, Token, TokenizedDocument, NUM_TOKEN};
pub use vocab::{Vocabulary, NUM_ID, PAD_ID, PAD_TOKEN, UNK_ID, UNK_TOKEN};
