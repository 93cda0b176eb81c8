use log::{debug, info};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::RankerConfig;
use super::encoder::{EncodedPhrase, PhraseEncoder, WordVocab};
use super::rank::DiagnosisRanker;
use super::synonyms::{LabeledPhrase, SynonymCorpus};
use super::triplet::triplet_gradient;
use crate::corpus::CodeCatalog;
use crate::error::{Error, Result};
use crate::nn::{Adam, AdamConfig, ParamSet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankerEpoch {
    pub epoch: usize,
    pub loss: f64,
    pub val_accuracy: f64,
    pub best: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RankerLog {
    pub epochs: Vec<RankerEpoch>,
    pub best_epoch: usize,
}

impl RankerLog {
    pub fn losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.loss).collect()
    }
}

struct CodeStrings {
    positives: Vec<EncodedPhrase>,
    negatives: Vec<EncodedPhrase>,
}

/// Trains the phrase encoder on (anchor, positive, negative) triplets.
///
/// Every positive of every code is an anchor once per epoch. Its positive
/// is the code description, or another synonym when the anchor is the
/// description. Its negative is, with probability
/// `description_negative_rate`, another code's description, otherwise one
/// of the code's mined negatives. The returned encoder is the one with the
/// best top-1 accuracy on `validation` (training anchors if empty), ties
/// going to the lower training loss.
pub fn train_ranker(
    config: &RankerConfig,
    corpus: &SynonymCorpus,
    catalog: &CodeCatalog,
    validation: &[LabeledPhrase],
) -> Result<(DiagnosisRanker, RankerLog)> {
    config.validate()?;
    if catalog.len() < 2 {
        return Err(Error::Data("ranking needs at least two codes".into()));
    }
    let mut texts = Vec::new();
    for e in catalog.entries() {
        let entry = corpus
            .get(&e.code)
            .ok_or_else(|| Error::Data(format!("synonym corpus lacks code {}", e.code)))?;
        if entry.negatives.is_empty() && config.description_negative_rate < 1.0 {
            return Err(Error::Data(format!("code {} has no negative strings", e.code)));
        }
        texts.push(e.description.clone());
        texts.extend(entry.positives.iter().cloned());
        texts.extend(entry.negatives.iter().cloned());
    }
    let vocab = WordVocab::build(&texts);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut encoder = PhraseEncoder::new(config.clone(), vocab, &mut rng)?;
    if let Some(path) = &config.pretrained_embeddings {
        encoder.load_pretrained(path)?;
    }

    let descriptions: Vec<String> = catalog.entries().iter().map(|e| e.description.clone()).collect();
    let mut strings = Vec::new();
    for e in catalog.entries() {
        let entry = corpus.get(&e.code).expect("checked above");
        let mut positives = vec![encoder.prepare(&e.description)?];
        for p in &entry.positives {
            if super::synonyms::normalized(p) != super::synonyms::normalized(&e.description) {
                positives.push(encoder.prepare(p)?);
            }
        }
        let negatives = entry.negatives.iter().map(|n| encoder.prepare(n)).collect::<Result<_>>()?;
        strings.push(CodeStrings { positives, negatives });
    }
    let selection: Vec<LabeledPhrase> = if validation.is_empty() {
        catalog
            .entries()
            .iter()
            .flat_map(|e| {
                corpus.get(&e.code).into_iter().flat_map(move |s| {
                    s.positives.iter().map(move |p| LabeledPhrase {
                        code: e.code.clone(),
                        phrase: p.clone(),
                    })
                })
            })
            .collect()
    } else {
        validation.to_vec()
    };
    let codes = catalog.code_ids();

    let anchors: Vec<(usize, usize)> = strings
        .iter()
        .enumerate()
        .flat_map(|(j, s)| (0..s.positives.len()).map(move |i| (j, i)))
        .collect();
    let mut adam = Adam::new(
        AdamConfig {
            learning_rate: config.learning_rate,
            ..AdamConfig::default()
        },
        encoder.params(),
    );
    let mut order: Vec<usize> = (0..anchors.len()).collect();
    let mut log = RankerLog::default();
    let mut best: Option<(f64, f64, ParamSet)> = None;

    for epoch in 1..=config.epochs.max(1) {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let mut grads = encoder.params().zeros_like();
            for &ai in chunk {
                let (j, i) = anchors[ai];
                let anchor = &strings[j].positives[i];
                let positive = if i == 0 {
                    if strings[j].positives.len() > 1 {
                        &strings[j].positives[rng.random_range(1..strings[j].positives.len())]
                    } else {
                        &strings[j].positives[0]
                    }
                } else {
                    &strings[j].positives[0]
                };
                let use_description = strings[j].negatives.is_empty() || rng.random_bool(config.description_negative_rate);
                let negative = if use_description {
                    let others: Vec<usize> = (0..strings.len()).filter(|&k| k != j).collect();
                    let k = *others.choose(&mut rng).expect("at least two codes");
                    &strings[k].positives[0]
                } else {
                    strings[j].negatives.choose(&mut rng).expect("non-empty")
                };
                let ta = encoder.forward(anchor, Some(&mut rng));
                let tp = encoder.forward(positive, Some(&mut rng));
                let tn = encoder.forward(negative, Some(&mut rng));
                let (loss, da, dp, dn) =
                    triplet_gradient(&ta.embedding, &tp.embedding, &tn.embedding, config.margin)?;
                loss_sum += loss;
                if loss > 0.0 {
                    let scale = 1.0 / chunk.len() as f64;
                    let s = |v: Vec<f64>| v.into_iter().map(|x| x * scale).collect::<Vec<_>>();
                    encoder.backward(&ta, &s(da), &mut grads);
                    encoder.backward(&tp, &s(dp), &mut grads);
                    encoder.backward(&tn, &s(dn), &mut grads);
                }
            }
            adam.step(encoder.params_mut(), &grads);
            encoder.reset_pad();
        }
        let loss = loss_sum / anchors.len() as f64;
        if !loss.is_finite() || !encoder.params().all_finite() {
            return Err(Error::Diverged(format!("ranker loss {loss} at epoch {epoch}")));
        }
        let snapshot = DiagnosisRanker::new(encoder.clone(), codes.clone(), descriptions.clone())?;
        let accuracy = snapshot.top1_accuracy(&selection)?;
        // Accuracy on a few held-out phrases saturates early; ties go to
        // the lower training loss.
        let improved = best
            .as_ref()
            .is_none_or(|(b, bl, _)| accuracy > *b || (accuracy == *b && loss < *bl));
        if improved {
            best = Some((accuracy, loss, encoder.params().clone()));
            log.best_epoch = epoch;
        }
        debug!("ranker epoch {epoch}: loss {loss:.4}, top-1 {accuracy:.3}");
        log.epochs.push(RankerEpoch {
            epoch,
            loss,
            val_accuracy: accuracy,
            best: improved,
        });
    }
    if let Some((accuracy, _, params)) = best {
        info!("ranker: best epoch {} (top-1 accuracy {accuracy:.3})", log.best_epoch);
        *encoder.params_mut() = params;
    }
    let ranker = DiagnosisRanker::new(encoder, codes, descriptions)?;
    Ok((ranker, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranker::mine_corpus_negatives;

    fn tiny() -> RankerConfig {
        RankerConfig {
            char_embedding_dim: 6,
            char_filters: 4,
            word_embedding_dim: 6,
            hidden_units: 6,
            epochs: 3,
            learning_rate: 0.01,
            ..RankerConfig::default()
        }
    }

    #[test]
    fn fixed_seed_gives_identical_loss_curves() {
        let catalog = CodeCatalog::fixture_5();
        let corpus = mine_corpus_negatives(&SynonymCorpus::bundled(), &[] as &[&str], [2, 5], 5).unwrap();
        let (_, a) = train_ranker(&tiny(), &corpus, &catalog, &[]).unwrap();
        let (_, b) = train_ranker(&tiny(), &corpus, &catalog, &[]).unwrap();
        assert_eq!(a.losses(), b.losses());
        assert_eq!(a.epochs.len(), 3);
    }

    #[test]
    fn rank_outputs_lie_in_unit_interval() {
        let catalog = CodeCatalog::fixture_5();
        let corpus = mine_corpus_negatives(&SynonymCorpus::bundled(), &[] as &[&str], [2, 5], 5).unwrap();
        let (ranker, _) = train_ranker(&tiny(), &corpus, &catalog, &[]).unwrap();
        let s = ranker.rank_codes(&["renal failure", "low hemoglobin"]).unwrap();
        assert_eq!(s.len(), 5);
        assert!(s.iter().all(|x| (0.0..=1.0).contains(x)));
        assert!(ranker.rank_codes(&[] as &[&str]).is_err());
    }
}
