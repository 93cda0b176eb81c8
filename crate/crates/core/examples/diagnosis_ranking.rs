//! Trains the phrase encoder with a triplet loss on the bundled synonym
//! fixture and ranks free-text diagnosis phrases against code descriptions.
//!
//! ```bash
//! cargo run -p medcoder --example diagnosis_ranking
//! ```

use medcoder::corpus::CodeCatalog;
use medcoder::ranker::{mine_corpus_negatives, train_ranker, RankerConfig, SynonymCorpus};

fn main() -> medcoder::Result<()> {
    let catalog = CodeCatalog::fixture_5();
    let full = SynonymCorpus::for_catalog(&catalog, Some(&SynonymCorpus::bundled()))?;
    let (train, held_out) = full.split_held_out();
    let config = RankerConfig {
        char_embedding_dim: 16,
        char_filters: 8,
        word_embedding_dim: 32,
        hidden_units: 32,
        learning_rate: 0.003,
        epochs: 80,
        ..RankerConfig::default()
    };
    let mined = mine_corpus_negatives(&train, &[] as &[&str], config.ngram_range, config.negatives_per_anchor)?;
    for (code, entry) in mined.entries() {
        println!("{code:<6} mined negatives {:?}", entry.negatives.iter().take(3).collect::<Vec<_>>());
    }
    let (ranker, log) = train_ranker(&config, &mined, &catalog, &held_out)?;
    println!(
        "\nbest epoch {} of {}; held-out top-1 accuracy {:.2}",
        log.best_epoch,
        log.epochs.len(),
        ranker.top1_accuracy(&held_out)?
    );

    for phrases in [vec!["kidney failure acute"], vec!["low blood count", "anaemia"], vec!["high blood pressure"]] {
        let scores = ranker.rank_codes(&phrases)?;
        let shown: Vec<String> = ranker.codes.iter().zip(&scores).map(|(c, s)| format!("{c} {s:.2}")).collect();
        println!("{phrases:?}\n  {}", shown.join("  "));
    }
    Ok(())
}
