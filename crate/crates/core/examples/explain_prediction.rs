//! Evidence for predicted codes: path-influence phrases from the text
//! network and local-surrogate feature weights from the tabular trees.
//!
//! ```bash
//! cargo run -p medcoder --example explain_prediction
//! ```

use medcoder::classifier::{TextClassifier, TextClassifierConfig, TextModelConfig};
use medcoder::corpus::{generate_synthetic, split_by_patient, GeneratorConfig, SplitPart};
use medcoder::explain::{assemble_phrases, explain_tabular, word_influence, SurrogateConfig};
use medcoder::tabular::{TabularConfig, TreeEnsembleModel};
use medcoder::text::bundled_guidelines;

fn main() -> medcoder::Result<()> {
    let corpus = generate_synthetic(&GeneratorConfig::planted_fixture(300), 9)?;
    let split = split_by_patient(&corpus.records, [0.7, 0.15, 0.15], 9)?;
    let train = split.select(&corpus.records, SplitPart::Train);
    let config = TextClassifierConfig {
        model: TextModelConfig {
            embedding_dim: 32,
            feature_maps: 16,
            learning_rate: 0.003,
            batch_size: 16,
            epochs: 12,
            ..TextModelConfig::default()
        },
        min_frequency: 3,
        ..TextClassifierConfig::default()
    };
    let (text, _) = TextClassifier::fit(
        &config,
        &corpus.catalog,
        &train,
        &split.select(&corpus.records, SplitPart::Validation),
        &bundled_guidelines(&corpus.catalog),
    )?;
    let tabular = TreeEnsembleModel::fit(&TabularConfig::default(), &corpus.catalog.code_ids(), &train)?;

    for record in split.select(&corpus.records, SplitPart::Test).into_iter().take(3) {
        let probs = text.predict(record)?;
        let Some(j) = record.positive_codes().max_by(|&a, &b| probs[a].total_cmp(&probs[b])) else {
            continue;
        };
        let code = &corpus.catalog.entry(j).code;
        println!("admission {} code {code} (text p={:.3})", record.admission_id, probs[j]);

        let enc = text.encode(record);
        let scores = word_influence(&text.model, &enc.ids, j)?;
        for p in assemble_phrases(&scores, &enc.document.spans, &enc.text, 3)? {
            println!("  phrase #{} score {:.3}: {}", p.rank, p.score, p.phrase);
        }
        let bits = tabular.vectorize(record).bits;
        let evidence = explain_tabular(
            |x: &[bool]| Ok(tabular.predict_bits(x)?[j]),
            &bits,
            &tabular.schema.features,
            &SurrogateConfig::default(),
        )?;
        for f in evidence {
            println!("  feature #{} weight {:+.3}: {}", f.rank, f.weight, f.feature);
        }
        let planted = corpus.planted.get(code).expect("planted code");
        println!("  planted keywords {:?}\n", planted.keywords);
    }
    Ok(())
}
