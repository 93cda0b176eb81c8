use serde::{Deserialize, Serialize};

use crate::classifier::TextModel;
use crate::error::{Error, Result};

/// Path-influence score of every input position toward one code's logit.
///
/// A path runs from one embedding entry of a word through a convolution
/// weight, the filter's max-pool (only the selected window of a filter with
/// positive activation passes), and the output weight of that filter. Its
/// score is the product of the input value and the edge weights; a word's
/// score sums its paths. Biases and the TF-IDF block are not attributable to
/// words. Trailing positions past the last real token score 0.
pub fn word_influence(model: &TextModel, ids: &[u32], code: usize) -> Result<Vec<f64>> {
    if !model.is_trained() {
        return Err(Error::InvalidArgument("word influence needs a trained text model".into()));
    }
    if code >= model.num_codes() {
        return Err(Error::InvalidArgument(format!("code index {code} out of range")));
    }
    // Pooling ignores the TF-IDF block, so any vector of the right width will do.
    let zeros = vec![0.0; model.shape().tfidf_dim];
    let tfidf = (!zeros.is_empty()).then_some(zeros.as_slice());
    let trace = model.forward_trace::<rand_chacha::ChaCha8Rng>(ids, tfidf, None)?;
    let config = model.config();
    let d = config.embedding_dim;
    let f = config.feature_maps;
    let params = model.params();
    let emb = params.get("embedding");
    let fc = params.get("fc.weight");
    let fc_row = fc.row(code);
    let mut scores = vec![0.0; ids.len()];
    for (wi, pool) in trace.pools.iter().enumerate() {
        let weight = params.get(&crate::classifier::conv_weight_name(pool.width));
        for k in 0..f {
            if pool.pre_max[k] <= 0.0 {
                continue;
            }
            let out = fc_row[wi * f + k];
            let s = pool.argmax[k];
            let wk = weight.row(k);
            for o in 0..pool.width {
                let t = s + o;
                if t >= trace.len {
                    continue;
                }
                let x = emb.row(ids[t] as usize);
                let contrib: f64 = x.iter().zip(&wk[o * d..(o + 1) * d]).map(|(a, b)| a * b).sum();
                scores[t] += out * contrib;
            }
        }
    }
    Ok(scores)
}

/// A run of consecutive words with non-zero influence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhraseEvidence {
    pub phrase: String,
    /// Byte offsets into the source text.
    pub span: (usize, usize),
    /// Maximum word score in the run.
    pub score: f64,
    /// 1-based.
    pub rank: usize,
}

/// Maximal non-zero runs become phrases scored by their largest word score;
/// the top `top_k` are returned, earlier phrases first on ties.
pub fn assemble_phrases(scores: &[f64], spans: &[(usize, usize)], text: &str, top_k: usize) -> Result<Vec<PhraseEvidence>> {
    if scores.len() != spans.len() {
        return Err(Error::Shape(format!("{} scores for {} spans", scores.len(), spans.len())));
    }
    let mut runs: Vec<(usize, usize, f64)> = Vec::new();
    let mut t = 0;
    while t < scores.len() {
        if scores[t] == 0.0 {
            t += 1;
            continue;
        }
        let start = t;
        let mut best = f64::NEG_INFINITY;
        while t < scores.len() && scores[t] != 0.0 {
            best = best.max(scores[t]);
            t += 1;
        }
        runs.push((start, t, best));
    }
    runs.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
    runs.truncate(top_k);
    runs.into_iter()
        .enumerate()
        .map(|(i, (a, b, score))| {
            let span = (spans[a].0, spans[b - 1].1);
            let phrase = text
                .get(span.0..span.1)
                .ok_or_else(|| Error::InvalidArgument(format!("span {span:?} outside the text")))?
                .to_string();
            Ok(PhraseEvidence {
                phrase,
                span,
                score,
                rank: i + 1,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::classifier::{TextModelConfig, TextModelShape};
    use crate::nn::ParamSet;

    fn toy(seed: u64, zero_bias: bool) -> TextModel {
        let config = TextModelConfig {
            embedding_dim: 3,
            kernel_widths: vec![2],
            feature_maps: 2,
            dropout: 0.0,
            ..TextModelConfig::default()
        };
        let shape = TextModelShape {
            vocab_size: 8,
            num_codes: 2,
            tfidf_dim: 0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = TextModel::new(config, shape, &mut rng).unwrap();
        if !zero_bias {
            for name in ["conv2.bias", "fc.bias"] {
                m.params_mut().get_mut(name).data.iter_mut().for_each(|b| *b = rng.random_range(-0.5..0.5));
            }
        }
        m.mark_trained();
        m
    }

    /// Enumerates (position, dim, filter, window) paths without using the
    /// window bookkeeping of the fast implementation.
    fn oracle(m: &TextModel, ids: &[u32], code: usize) -> Vec<f64> {
        let p: &ParamSet = m.params();
        let (d, f, w) = (3, 2, 2);
        let emb = p.get("embedding");
        let conv = p.get("conv2.weight");
        let bias = &p.get("conv2.bias").data;
        let fc = p.get("fc.weight");
        let n = ids.len();
        let windows = n.max(w) - w + 1;
        let x = |t: usize, e: usize| if t < n { emb.row(ids[t] as usize)[e] } else { 0.0 };
        let pre = |k: usize, s: usize| -> f64 {
            bias[k] + (0..w).flat_map(|o| (0..d).map(move |e| (o, e))).map(|(o, e)| x(s + o, e) * conv.row(k)[o * d + e]).sum::<f64>()
        };
        let mut scores = vec![0.0; n];
        for k in 0..f {
            let mut arg = 0;
            for s in 1..windows {
                if pre(k, s) > pre(k, arg) {
                    arg = s;
                }
            }
            if pre(k, arg) <= 0.0 {
                continue;
            }
            for (t, score) in scores.iter_mut().enumerate() {
                for s in 0..windows {
                    if s != arg || t < s || t >= s + w {
                        continue;
                    }
                    for e in 0..d {
                        *score += x(t, e) * conv.row(k)[(t - s) * d + e] * fc.row(code)[k];
                    }
                }
            }
        }
        scores
    }

    #[test]
    fn matches_path_enumeration() {
        for seed in 0..30 {
            let m = toy(seed, false);
            let ids = [1, 3, 5, 7];
            for code in 0..2 {
                let fast = word_influence(&m, &ids, code).unwrap();
                let slow = oracle(&m, &ids, code);
                for (a, b) in fast.iter().zip(&slow) {
                    assert!((a - b).abs() < 1e-6, "seed {seed}: {fast:?} vs {slow:?}");
                }
            }
        }
    }

    #[test]
    fn zero_bias_scores_sum_to_the_logit() {
        for seed in 0..30 {
            let m = toy(seed, true);
            let ids = [2, 4, 6, 1, 3];
            let trace = m.forward_trace::<ChaCha8Rng>(&ids, None, None).unwrap();
            for code in 0..2 {
                let total: f64 = word_influence(&m, &ids, code).unwrap().iter().sum();
                assert!((total - trace.logits[code]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn words_outside_every_selected_window_score_zero() {
        let mut m = toy(0, true);
        // One positive filter whose window is pinned to the first two words.
        let emb = m.params_mut().get_mut("embedding");
        emb.data.iter_mut().for_each(|v| *v = 0.0);
        emb.row_mut(1).copy_from_slice(&[1.0, 0.0, 0.0]);
        let conv = m.params_mut().get_mut("conv2.weight");
        conv.data = vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0, -1.0, 0.0, 0.0, -1.0, 0.0, 0.0];
        let s = word_influence(&m, &[1, 1, 2, 3], 0).unwrap();
        assert_eq!(&s[2..], &[0.0, 0.0]);
        assert!(s[0] != 0.0);
    }

    #[test]
    fn untrained_models_are_rejected() {
        let config = TextModelConfig {
            embedding_dim: 2,
            kernel_widths: vec![1],
            feature_maps: 1,
            ..TextModelConfig::default()
        };
        let shape = TextModelShape {
            vocab_size: 4,
            num_codes: 1,
            tfidf_dim: 0,
        };
        let m = TextModel::new(config, shape, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(word_influence(&m, &[1, 2], 0).is_err());
    }

    #[test]
    fn phrases_are_maximal_runs() {
        let text = "a bb c dd e";
        let spans = [(0, 1), (2, 4), (5, 6), (7, 9), (10, 11)];
        let p = assemble_phrases(&[0.0, 3.0, 2.0, 0.0, 5.0], &spans, text, 10).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!((p[0].phrase.as_str(), p[0].score, p[0].rank), ("e", 5.0, 1));
        assert_eq!((p[1].phrase.as_str(), p[1].score), ("bb c", 3.0));
        assert_eq!(assemble_phrases(&[0.0, 3.0, 2.0, 0.0, 5.0], &spans, text, 1).unwrap().len(), 1);
        assert!(assemble_phrases(&[0.0; 5], &spans, text, 3).unwrap().is_empty());
        let tie = assemble_phrases(&[1.0, 0.0, 1.0, 0.0, 0.0], &spans, text, 1).unwrap();
        assert_eq!(tie[0].phrase, "a");
    }
}
