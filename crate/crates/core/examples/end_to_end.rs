//! Every pipeline stage on a small planted corpus, as the CLI runs them.
//!
//! ```bash
//! cargo run -p medcoder --example end_to_end
//! ```

use medcoder::classifier::TextModelConfig;
use medcoder::pipeline::{full_run, run_command, CorpusConfig, RunConfig};
use medcoder::ranker::RankerConfig;

fn main() -> medcoder::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let mut config = RunConfig {
        seed: 7,
        out_dir: dir.path().to_path_buf(),
        corpus: CorpusConfig::Synthetic {
            admissions: Some(300),
            generator: None,
        },
        ..RunConfig::default()
    };
    config.text.min_frequency = 3;
    config.text.model = TextModelConfig {
        embedding_dim: 32,
        feature_maps: 16,
        learning_rate: 0.003,
        batch_size: 16,
        tfidf_side_channel: true,
        epochs: 12,
        ..TextModelConfig::default()
    };
    config.ranker = RankerConfig {
        char_embedding_dim: 8,
        char_filters: 8,
        word_embedding_dim: 16,
        hidden_units: 16,
        learning_rate: 0.003,
        epochs: 30,
        ..RankerConfig::default()
    };
    for command in full_run(&config) {
        let out = run_command(&config, command)?;
        eprintln!("{command:<14} -> {}", out.display());
    }
    Ok(())
}
