use std::collections::HashMap;
use std::path::Path;

use log::{info, warn};
use rand::Rng;

use super::config::RankerConfig;
use crate::error::{Error, Result};
use crate::nn::{sigmoid, xavier_uniform, ParamSet, Tensor};
use crate::text::phrase_tokens;

pub const CHAR_PAD: usize = 0;
pub const CHAR_UNK: usize = 1;
pub const CHAR_VOCAB: usize = 2 + 26 + 10;
pub const WORD_UNK: u32 = 0;

pub fn char_id(c: char) -> usize {
    match c {
        'a'..='z' => 2 + (c as usize - 'a' as usize),
        '0'..='9' => 28 + (c as usize - '0' as usize),
        _ => CHAR_UNK,
    }
}

/// Word ids for the ranker; id 0 is UNK.
#[derive(Clone, Debug, PartialEq)]
pub struct WordVocab {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl WordVocab {
    /// Every distinct normalized token of `texts`, sorted.
    pub fn build<S: AsRef<str>>(texts: &[S]) -> Self {
        let mut words: Vec<String> = texts.iter().flat_map(|t| phrase_tokens(t.as_ref())).collect();
        words.sort();
        words.dedup();
        let mut tokens = vec!["<unk>".to_string()];
        tokens.extend(words);
        WordVocab::from_tokens(tokens)
    }

    pub fn from_tokens(tokens: Vec<String>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        WordVocab { tokens, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(WORD_UNK)
    }
}

/// A phrase ready for the encoder.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedPhrase {
    pub words: Vec<u32>,
    pub chars: Vec<Vec<usize>>,
}

/// One direction of an LSTM unrolled over a sequence.
#[derive(Clone, Debug, Default)]
struct LstmTrace {
    /// Gate activations per step, `[i | f | g | o]`, each of width H.
    gates: Vec<Vec<f64>>,
    cells: Vec<Vec<f64>>,
    hidden: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
struct CharTrace {
    /// Char embeddings, padded to the widest kernel, flattened.
    x: Vec<f64>,
    argmax: Vec<Vec<usize>>,
    pre_max: Vec<Vec<f64>>,
}

/// Forward-pass cache for one phrase.
#[derive(Clone, Debug)]
pub struct EncoderTrace {
    words: Vec<u32>,
    chars: Vec<Vec<usize>>,
    char_traces: Vec<CharTrace>,
    inputs: Vec<Vec<f64>>,
    fwd: LstmTrace,
    bwd: LstmTrace,
    /// Time step selected by the max-pool per output dimension.
    pool_argmax: Vec<usize>,
    pub embedding: Vec<f64>,
}

/// Char-CNN + word embedding per token, one BiLSTM layer, max-pool over time.
#[derive(Clone, Debug, PartialEq)]
pub struct PhraseEncoder {
    pub(crate) config: RankerConfig,
    pub(crate) vocab: WordVocab,
    pub(crate) params: ParamSet,
}

fn matvec_acc(out: &mut [f64], w: &Tensor, x: &[f64]) {
    let cols = w.shape[1];
    for (r, o) in out.iter_mut().enumerate() {
        let row = &w.data[r * cols..(r + 1) * cols];
        *o += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// `out += Wᵀ·g`
fn matvec_t_acc(out: &mut [f64], w: &Tensor, g: &[f64]) {
    let cols = w.shape[1];
    for (r, gr) in g.iter().enumerate() {
        if *gr == 0.0 {
            continue;
        }
        let row = &w.data[r * cols..(r + 1) * cols];
        out.iter_mut().zip(row).for_each(|(o, a)| *o += gr * a);
    }
}

/// `G += g ⊗ x`
fn outer_acc(grad: &mut Tensor, g: &[f64], x: &[f64]) {
    let cols = grad.shape[1];
    for (r, gr) in g.iter().enumerate() {
        if *gr == 0.0 {
            continue;
        }
        let row = &mut grad.data[r * cols..(r + 1) * cols];
        row.iter_mut().zip(x).for_each(|(o, b)| *o += gr * b);
    }
}

impl PhraseEncoder {
    pub fn new<R: Rng>(config: RankerConfig, vocab: WordVocab, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let dc = config.char_embedding_dim;
        let fc = config.char_filters;
        let dw = config.word_embedding_dim;
        let h = config.hidden_units;
        let input = dw + fc * config.char_kernel_widths.len();

        let mut params = ParamSet::new();
        let mut chars = xavier_uniform(rng, &[CHAR_VOCAB, dc], CHAR_VOCAB, dc);
        chars.row_mut(CHAR_PAD).fill(0.0);
        params.insert("char_embedding", chars);
        for &w in &config.char_kernel_widths {
            params.insert(format!("char_conv{w}.weight"), xavier_uniform(rng, &[fc, w * dc], w * dc, fc));
            params.insert(format!("char_conv{w}.bias"), Tensor::zeros(&[fc]));
        }
        params.insert("word_embedding", xavier_uniform(rng, &[vocab.len(), dw], vocab.len(), dw));
        for dir in ["lstm_fwd", "lstm_bwd"] {
            params.insert(format!("{dir}.w_ih"), xavier_uniform(rng, &[4 * h, input], input, 4 * h));
            params.insert(format!("{dir}.w_hh"), xavier_uniform(rng, &[4 * h, h], h, 4 * h));
            let mut b = Tensor::zeros(&[4 * h]);
            // Forget-gate bias starts at 1.
            b.data[h..2 * h].fill(1.0);
            params.insert(format!("{dir}.bias"), b);
        }
        Ok(PhraseEncoder { config, vocab, params })
    }

    pub fn from_parts(config: RankerConfig, vocab: WordVocab, params: ParamSet) -> Result<Self> {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
        let template = PhraseEncoder::new(config, vocab, &mut rng)?;
        template.params.ensure_compatible(&params)?;
        Ok(PhraseEncoder { params, ..template })
    }

    /// Overwrites word embedding rows from a word2vec text file. Returns
    /// the number of vocabulary words found.
    pub fn load_pretrained(&mut self, path: impl AsRef<Path>) -> Result<usize> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let dw = self.config.word_embedding_dim;
        let mut found = 0;
        for (lineno, line) in body.lines().enumerate() {
            let mut parts = line.split_whitespace();
            let Some(word) = parts.next() else { continue };
            let values: Vec<f64> = parts.map(|v| v.parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(
                |_| Error::Data(format!("{}:{}: non-numeric embedding value", path.display(), lineno + 1)),
            )?;
            if lineno == 0 && values.len() == 1 {
                continue;
            }
            if values.len() != dw {
                return Err(Error::Data(format!(
                    "{}:{}: expected {dw} values, got {}",
                    path.display(),
                    lineno + 1,
                    values.len()
                )));
            }
            let id = self.vocab.id(&word.to_lowercase());
            if id != WORD_UNK {
                self.params.get_mut("word_embedding").row_mut(id as usize).copy_from_slice(&values);
                found += 1;
            }
        }
        if found == 0 {
            warn!("no ranker vocabulary word found in {}", path.display());
        } else {
            info!("loaded {found} pretrained word vectors");
        }
        Ok(found)
    }

    pub fn config(&self) -> &RankerConfig {
        &self.config
    }

    pub fn vocab(&self) -> &WordVocab {
        &self.vocab
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn output_dim(&self) -> usize {
        self.config.output_dim()
    }

    fn char_feature_dim(&self) -> usize {
        self.config.char_filters * self.config.char_kernel_widths.len()
    }

    pub fn prepare(&self, phrase: &str) -> Result<EncodedPhrase> {
        let tokens = phrase_tokens(phrase);
        if tokens.is_empty() {
            return Err(Error::InvalidArgument(format!("phrase {phrase:?} has no tokens")));
        }
        Ok(EncodedPhrase {
            words: tokens.iter().map(|t| self.vocab.id(t)).collect(),
            chars: tokens
                .iter()
                .map(|t| t.to_lowercase().chars().map(char_id).collect())
                .collect(),
        })
    }

    fn char_forward(&self, chars: &[usize]) -> (CharTrace, Vec<f64>) {
        let dc = self.config.char_embedding_dim;
        let fc = self.config.char_filters;
        let max_w = self.config.char_kernel_widths.iter().copied().max().unwrap_or(1);
        let rows = chars.len().max(max_w);
        let emb = self.params.get("char_embedding");
        let mut x = vec![0.0; rows * dc];
        for (t, &c) in chars.iter().enumerate() {
            if c != CHAR_PAD {
                x[t * dc..(t + 1) * dc].copy_from_slice(emb.row(c));
            }
        }
        let mut features = Vec::with_capacity(self.char_feature_dim());
        let mut argmaxes = Vec::new();
        let mut pre_maxes = Vec::new();
        for &w in &self.config.char_kernel_widths {
            let weight = self.params.get(&format!("char_conv{w}.weight"));
            let bias = &self.params.get(&format!("char_conv{w}.bias")).data;
            let windows = chars.len().max(w) - w + 1;
            let mut argmax = vec![0; fc];
            let mut pre_max = vec![f64::NEG_INFINITY; fc];
            for s in 0..windows {
                let win = &x[s * dc..(s + w) * dc];
                for k in 0..fc {
                    let v = bias[k] + weight.row(k).iter().zip(win).map(|(a, b)| a * b).sum::<f64>();
                    if v > pre_max[k] {
                        pre_max[k] = v;
                        argmax[k] = s;
                    }
                }
            }
            features.extend(pre_max.iter().map(|v| v.max(0.0)));
            argmaxes.push(argmax);
            pre_maxes.push(pre_max);
        }
        (
            CharTrace {
                x,
                argmax: argmaxes,
                pre_max: pre_maxes,
            },
            features,
        )
    }

    /// Char-CNN features of a single token.
    pub fn char_features(&self, token: &str) -> Vec<f64> {
        let chars: Vec<usize> = token.to_lowercase().chars().map(char_id).collect();
        if chars.is_empty() {
            return vec![0.0; self.char_feature_dim()];
        }
        self.char_forward(&chars).1
    }

    fn lstm_forward(&self, dir: &str, inputs: &[Vec<f64>], order: &[usize]) -> LstmTrace {
        let h = self.config.hidden_units;
        let w_ih = self.params.get(&format!("{dir}.w_ih"));
        let w_hh = self.params.get(&format!("{dir}.w_hh"));
        let bias = &self.params.get(&format!("{dir}.bias")).data;
        let n = inputs.len();
        let mut trace = LstmTrace {
            gates: vec![Vec::new(); n],
            cells: vec![Vec::new(); n],
            hidden: vec![Vec::new(); n],
        };
        let mut h_prev = vec![0.0; h];
        let mut c_prev = vec![0.0; h];
        for &t in order {
            let mut a = bias.clone();
            matvec_acc(&mut a, w_ih, &inputs[t]);
            matvec_acc(&mut a, w_hh, &h_prev);
            for k in 0..h {
                a[k] = sigmoid(a[k]);
                a[h + k] = sigmoid(a[h + k]);
                a[2 * h + k] = a[2 * h + k].tanh();
                a[3 * h + k] = sigmoid(a[3 * h + k]);
            }
            let c: Vec<f64> = (0..h).map(|k| a[h + k] * c_prev[k] + a[k] * a[2 * h + k]).collect();
            let hid: Vec<f64> = (0..h).map(|k| a[3 * h + k] * c[k].tanh()).collect();
            trace.gates[t] = a;
            trace.cells[t] = c.clone();
            trace.hidden[t] = hid.clone();
            h_prev = hid;
            c_prev = c;
        }
        trace
    }

    /// Encodes a prepared phrase. `word_dropout` replaces word ids by UNK
    /// at the configured rate.
    pub fn forward<R: Rng>(&self, phrase: &EncodedPhrase, word_dropout: Option<&mut R>) -> EncoderTrace {
        let mut words = phrase.words.clone();
        if let Some(rng) = word_dropout {
            for w in words.iter_mut() {
                if rng.random::<f64>() < self.config.word_dropout {
                    *w = WORD_UNK;
                }
            }
        }
        let wemb = self.params.get("word_embedding");
        let mut char_traces = Vec::with_capacity(words.len());
        let mut inputs = Vec::with_capacity(words.len());
        for (t, &w) in words.iter().enumerate() {
            let (ct, feats) = self.char_forward(&phrase.chars[t]);
            let mut x = wemb.row(w as usize).to_vec();
            x.extend(feats);
            inputs.push(x);
            char_traces.push(ct);
        }
        let n = inputs.len();
        let forward_order: Vec<usize> = (0..n).collect();
        let backward_order: Vec<usize> = (0..n).rev().collect();
        let fwd = self.lstm_forward("lstm_fwd", &inputs, &forward_order);
        let bwd = self.lstm_forward("lstm_bwd", &inputs, &backward_order);

        let h = self.config.hidden_units;
        let mut embedding = vec![f64::NEG_INFINITY; 2 * h];
        let mut pool_argmax = vec![0; 2 * h];
        for t in 0..n {
            for k in 0..h {
                if fwd.hidden[t][k] > embedding[k] {
                    embedding[k] = fwd.hidden[t][k];
                    pool_argmax[k] = t;
                }
                if bwd.hidden[t][k] > embedding[h + k] {
                    embedding[h + k] = bwd.hidden[t][k];
                    pool_argmax[h + k] = t;
                }
            }
        }
        EncoderTrace {
            words,
            chars: phrase.chars.clone(),
            char_traces,
            inputs,
            fwd,
            bwd,
            pool_argmax,
            embedding,
        }
    }

    pub fn encode(&self, phrase: &str) -> Result<Vec<f64>> {
        let p = self.prepare(phrase)?;
        Ok(self.forward::<rand_chacha::ChaCha8Rng>(&p, None).embedding)
    }

    fn lstm_backward(
        &self,
        dir: &str,
        trace: &LstmTrace,
        inputs: &[Vec<f64>],
        order: &[usize],
        dh_ext: &[Vec<f64>],
        dinputs: &mut [Vec<f64>],
        grads: &mut ParamSet,
    ) {
        let h = self.config.hidden_units;
        let w_ih = self.params.get(&format!("{dir}.w_ih"));
        let w_hh = self.params.get(&format!("{dir}.w_hh"));
        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        let zeros = vec![0.0; h];
        for (step, &t) in order.iter().enumerate().rev() {
            let (h_prev, c_prev) = if step == 0 {
                (&zeros, &zeros)
            } else {
                let p = order[step - 1];
                (&trace.hidden[p], &trace.cells[p])
            };
            let a = &trace.gates[t];
            let c = &trace.cells[t];
            let mut da = vec![0.0; 4 * h];
            for k in 0..h {
                let (i, f, g, o) = (a[k], a[h + k], a[2 * h + k], a[3 * h + k]);
                let tc = c[k].tanh();
                let dh = dh_ext[t][k] + dh_next[k];
                let dc = dh * o * (1.0 - tc * tc) + dc_next[k];
                da[k] = dc * g * i * (1.0 - i);
                da[h + k] = dc * c_prev[k] * f * (1.0 - f);
                da[2 * h + k] = dc * i * (1.0 - g * g);
                da[3 * h + k] = dh * tc * o * (1.0 - o);
                dc_next[k] = dc * f;
            }
            outer_acc(grads.get_mut(&format!("{dir}.w_ih")), &da, &inputs[t]);
            outer_acc(grads.get_mut(&format!("{dir}.w_hh")), &da, h_prev);
            grads
                .get_mut(&format!("{dir}.bias"))
                .data
                .iter_mut()
                .zip(&da)
                .for_each(|(b, d)| *b += d);
            matvec_t_acc(&mut dinputs[t], w_ih, &da);
            dh_next.fill(0.0);
            matvec_t_acc(&mut dh_next, w_hh, &da);
        }
    }

    /// Accumulates parameter gradients given `d loss / d embedding`.
    pub fn backward(&self, trace: &EncoderTrace, d_embedding: &[f64], grads: &mut ParamSet) {
        let h = self.config.hidden_units;
        let n = trace.inputs.len();
        let mut dh_fwd = vec![vec![0.0; h]; n];
        let mut dh_bwd = vec![vec![0.0; h]; n];
        for k in 0..h {
            dh_fwd[trace.pool_argmax[k]][k] += d_embedding[k];
            dh_bwd[trace.pool_argmax[h + k]][k] += d_embedding[h + k];
        }
        let in_dim = trace.inputs[0].len();
        let mut dinputs = vec![vec![0.0; in_dim]; n];
        let forward_order: Vec<usize> = (0..n).collect();
        let backward_order: Vec<usize> = (0..n).rev().collect();
        self.lstm_backward("lstm_fwd", &trace.fwd, &trace.inputs, &forward_order, &dh_fwd, &mut dinputs, grads);
        self.lstm_backward("lstm_bwd", &trace.bwd, &trace.inputs, &backward_order, &dh_bwd, &mut dinputs, grads);

        let dw = self.config.word_embedding_dim;
        let dc = self.config.char_embedding_dim;
        let fc = self.config.char_filters;
        for t in 0..n {
            let dx = &dinputs[t];
            grads
                .get_mut("word_embedding")
                .row_mut(trace.words[t] as usize)
                .iter_mut()
                .zip(&dx[..dw])
                .for_each(|(g, d)| *g += d);
            let ct = &trace.char_traces[t];
            let mut dchar_x = vec![0.0; ct.x.len()];
            for (wi, &w) in self.config.char_kernel_widths.iter().enumerate() {
                let wname = format!("char_conv{w}.weight");
                let bname = format!("char_conv{w}.bias");
                let weight = self.params.get(&wname);
                for k in 0..fc {
                    let g = dx[dw + wi * fc + k];
                    if g == 0.0 || ct.pre_max[wi][k] <= 0.0 {
                        continue;
                    }
                    let s = ct.argmax[wi][k];
                    let win = &ct.x[s * dc..(s + w) * dc];
                    grads
                        .get_mut(&wname)
                        .row_mut(k)
                        .iter_mut()
                        .zip(win)
                        .for_each(|(a, b)| *a += g * b);
                    grads.get_mut(&bname).data[k] += g;
                    dchar_x[s * dc..(s + w) * dc]
                        .iter_mut()
                        .zip(weight.row(k))
                        .for_each(|(a, b)| *a += g * b);
                }
            }
            let gce = grads.get_mut("char_embedding");
            for (p, &c) in trace.chars[t].iter().enumerate() {
                if c == CHAR_PAD {
                    continue;
                }
                gce.row_mut(c)
                    .iter_mut()
                    .zip(&dchar_x[p * dc..(p + 1) * dc])
                    .for_each(|(a, b)| *a += b);
            }
        }
    }

    pub(crate) fn reset_pad(&mut self) {
        self.params.get_mut("char_embedding").row_mut(CHAR_PAD).fill(0.0);
    }
}
