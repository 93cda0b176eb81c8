//! Tokenization, vocabulary building and guideline-keyword TF-IDF features.
//!
//! ```bash
//! cargo run -p medcoder --example text_preprocessing
//! ```

use medcoder::corpus::CodeCatalog;
use medcoder::text::{bundled_guidelines, extract_guideline_keywords, token_strings, TfidfModel, Vocabulary};

fn main() -> medcoder::Result<()> {
    let notes = [
        "Pt admitted with CHF exacerbation; BNP 1450, started on IV furosemide 40mg.",
        "Acute kidney injury, creatinine 2.3 up from 1.1. Holding lisinopril.",
        "Type 2 diabetes on metformin, glucose 250 on admission.",
    ];
    let docs: Vec<Vec<String>> = notes.iter().map(|n| token_strings(n)).collect();
    for (n, d) in notes.iter().zip(&docs) {
        println!("{n}\n  -> {d:?}");
    }

    let vocab = Vocabulary::from_tokens(&docs, 1)?;
    let encoded = vocab.tokenize(notes[1]);
    println!("\nvocabulary of {} tokens; note 2 ids {:?}", vocab.len(), encoded.ids);

    let catalog = CodeCatalog::fixture_5();
    let terms = extract_guideline_keywords(&bundled_guidelines(&catalog), 5)?;
    println!("\nguideline terms: {terms:?}");
    let tfidf = TfidfModel::fit(&terms, &docs)?;
    for (i, d) in docs.iter().enumerate() {
        let v = tfidf.transform(d);
        let active: Vec<String> = terms
            .iter()
            .zip(&v.weights)
            .filter(|(_, w)| **w > 0.0)
            .map(|(t, w)| format!("{t}={w:.3}"))
            .collect();
        println!("note {}: {}", i + 1, active.join(", "));
    }
    Ok(())
}
