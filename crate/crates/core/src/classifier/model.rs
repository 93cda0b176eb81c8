use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use super::config::TextModelConfig;
use super::smoothing::PROB_CLAMP;
use crate::error::{Error, Result};
use crate::nn::{sigmoid, xavier_uniform, ParamSet, Tensor};
use crate::text::PAD_ID;

/// Shape metadata persisted next to the weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TextModelShape {
    pub vocab_size: usize,
    pub num_codes: usize,
    /// Width of the TF-IDF block; 0 when the side channel is off.
    pub tfidf_dim: usize,
}

/// Text-CNN: embeddings, per-width convolutions with ReLU and max-pool over
/// time, optional TF-IDF block, one sigmoid output per code.
#[derive(Clone, Debug, PartialEq)]
pub struct TextModel {
    pub(crate) config: TextModelConfig,
    pub(crate) shape: TextModelShape,
    pub(crate) params: ParamSet,
    pub(crate) trained: bool,
}

/// Max-pool outcome for one kernel width.
#[derive(Clone, Debug, PartialEq)]
pub struct PoolTrace {
    pub width: usize,
    /// Selected window start per filter.
    pub argmax: Vec<usize>,
    /// Pre-activation at the selected window per filter.
    pub pre_max: Vec<f64>,
}

/// Everything the backward pass and the explainer need from a forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardTrace {
    /// Real (non-trailing-PAD) token count.
    pub len: usize,
    pub pools: Vec<PoolTrace>,
    /// Input to the output layer after dropout.
    pub features: Vec<f64>,
    /// Dropout multipliers; empty at inference.
    pub mask: Vec<f64>,
    pub logits: Vec<f64>,
}

impl ForwardTrace {
    pub fn probabilities(&self) -> Vec<f64> {
        self.logits.iter().map(|&z| sigmoid(z)).collect()
    }
}

pub(crate) fn conv_weight(w: usize) -> String {
    format!("conv{w}.weight")
}

pub(crate) fn conv_bias(w: usize) -> String {
    format!("conv{w}.bias")
}

fn is_bias(name: &str) -> bool {
    name.ends_with(".bias")
}

impl TextModel {
    /// Xavier-initialized weights with zero biases and a zero PAD row.
    pub fn new<R: Rng>(config: TextModelConfig, shape: TextModelShape, rng: &mut R) -> Result<Self> {
        config.validate()?;
        if shape.vocab_size < 2 || shape.num_codes == 0 {
            return Err(Error::InvalidArgument(format!("degenerate model shape {shape:?}")));
        }
        if config.tfidf_side_channel != (shape.tfidf_dim > 0) {
            return Err(Error::InvalidArgument(
                "tfidf_dim must be positive exactly when the side channel is enabled".into(),
            ));
        }
        let d = config.embedding_dim;
        let f = config.feature_maps;
        let mut params = ParamSet::new();
        let mut emb = xavier_uniform(rng, &[shape.vocab_size, d], shape.vocab_size, d);
        emb.row_mut(PAD_ID as usize).fill(0.0);
        params.insert("embedding", emb);
        for &w in &config.kernel_widths {
            params.insert(conv_weight(w), xavier_uniform(rng, &[f, w * d], w * d, f));
            params.insert(conv_bias(w), Tensor::zeros(&[f]));
        }
        let in_dim = f * config.kernel_widths.len() + shape.tfidf_dim;
        params.insert("fc.weight", xavier_uniform(rng, &[shape.num_codes, in_dim], in_dim, shape.num_codes));
        params.insert("fc.bias", Tensor::zeros(&[shape.num_codes]));
        Ok(TextModel {
            config,
            shape,
            params,
            trained: false,
        })
    }

    /// Rebuilds a model from persisted parts; shapes are checked.
    pub fn from_parts(config: TextModelConfig, shape: TextModelShape, params: ParamSet) -> Result<Self> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let template = TextModel::new(config, shape, &mut rng)?;
        template.params.ensure_compatible(&params)?;
        Ok(TextModel {
            params,
            trained: true,
            ..template
        })
    }

    pub fn config(&self) -> &TextModelConfig {
        &self.config
    }

    pub fn shape(&self) -> &TextModelShape {
        &self.shape
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn num_codes(&self) -> usize {
        self.shape.num_codes
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    pub fn mark_trained(&mut self) {
        self.trained = true;
    }

    /// Width of the pooled block (all filters of all kernel widths).
    pub fn pooled_dim(&self) -> usize {
        self.config.feature_maps * self.config.kernel_widths.len()
    }

    fn real_len(ids: &[u32]) -> usize {
        ids.iter().rposition(|&t| t != PAD_ID).map_or(0, |p| p + 1)
    }

    /// Embedded tokens, zero rows for PAD, extended to the widest kernel.
    fn embed(&self, ids: &[u32], len: usize) -> Result<Vec<f64>> {
        let d = self.config.embedding_dim;
        let rows = len.max(self.config.max_kernel_width());
        let emb = self.params.get("embedding");
        let mut x = vec![0.0; rows * d];
        for (t, &id) in ids[..len].iter().enumerate() {
            if id as usize >= self.shape.vocab_size {
                return Err(Error::InvalidArgument(format!("token id {id} outside vocabulary")));
            }
            if id != PAD_ID {
                x[t * d..(t + 1) * d].copy_from_slice(emb.row(id as usize));
            }
        }
        Ok(x)
    }

    fn check_side_channel(&self, tfidf: Option<&[f64]>) -> Result<()> {
        match (self.config.tfidf_side_channel, tfidf) {
            (true, Some(v)) if v.len() == self.shape.tfidf_dim => Ok(()),
            (true, Some(v)) => Err(Error::Shape(format!(
                "TF-IDF vector has {} entries, model expects {}",
                v.len(),
                self.shape.tfidf_dim
            ))),
            (true, None) => Err(Error::InvalidArgument("model needs a TF-IDF vector".into())),
            (false, Some(_)) => Err(Error::InvalidArgument("model has no TF-IDF side channel".into())),
            (false, None) => Ok(()),
        }
    }

    /// Forward pass. `dropout_rng` enables training-mode dropout.
    pub fn forward_trace<R: Rng>(
        &self,
        ids: &[u32],
        tfidf: Option<&[f64]>,
        dropout_rng: Option<&mut R>,
    ) -> Result<ForwardTrace> {
        self.check_side_channel(tfidf)?;
        let len = Self::real_len(ids);
        if len == 0 {
            return Err(Error::InvalidArgument("document has no tokens".into()));
        }
        let d = self.config.embedding_dim;
        let f = self.config.feature_maps;
        let x = self.embed(ids, len)?;

        let mut pools = Vec::with_capacity(self.config.kernel_widths.len());
        let mut features = Vec::with_capacity(self.pooled_dim() + self.shape.tfidf_dim);
        for &w in &self.config.kernel_widths {
            let weight = self.params.get(&conv_weight(w));
            let bias = &self.params.get(&conv_bias(w)).data;
            let windows = len.max(w) - w + 1;
            let mut argmax = vec![0; f];
            let mut pre_max = vec![f64::NEG_INFINITY; f];
            for s in 0..windows {
                let window = &x[s * d..(s + w) * d];
                for k in 0..f {
                    let pre = bias[k] + dot(weight.row(k), window);
                    if pre > pre_max[k] {
                        pre_max[k] = pre;
                        argmax[k] = s;
                    }
                }
            }
            features.extend(pre_max.iter().map(|&p| p.max(0.0)));
            pools.push(PoolTrace { width: w, argmax, pre_max });
        }
        if let Some(v) = tfidf {
            features.extend_from_slice(v);
        }

        let mut mask = Vec::new();
        if let Some(rng) = dropout_rng {
            let p = self.config.dropout;
            if p > 0.0 {
                let keep = 1.0 / (1.0 - p);
                mask = (0..features.len())
                    .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
                    .collect();
                features.iter_mut().zip(&mask).for_each(|(z, m)| *z *= m);
            }
        }

        let fc = self.params.get("fc.weight");
        let fc_bias = &self.params.get("fc.bias").data;
        let logits = (0..self.shape.num_codes)
            .map(|c| fc_bias[c] + dot(fc.row(c), &features))
            .collect();
        Ok(ForwardTrace {
            len,
            pools,
            features,
            mask,
            logits,
        })
    }

    /// Inference-mode probabilities, one per code.
    pub fn forward(&self, ids: &[u32], tfidf: Option<&[f64]>) -> Result<Vec<f64>> {
        Ok(self
            .forward_trace::<rand_chacha::ChaCha8Rng>(ids, tfidf, None)?
            .probabilities())
    }

    /// Accumulates `d loss / d params` into `grads` given `d loss / d logits`.
    pub fn backward(&self, ids: &[u32], trace: &ForwardTrace, dlogits: &[f64], grads: &mut ParamSet) {
        let d = self.config.embedding_dim;
        let f = self.config.feature_maps;
        let c_count = self.shape.num_codes;
        let fc = self.params.get("fc.weight");
        let in_dim = trace.features.len();

        {
            let gfc = grads.get_mut("fc.weight");
            for c in 0..c_count {
                let g = dlogits[c];
                if g == 0.0 {
                    continue;
                }
                let row = &mut gfc.data[c * in_dim..(c + 1) * in_dim];
                row.iter_mut().zip(&trace.features).for_each(|(r, z)| *r += g * z);
            }
        }
        {
            let gb = &mut grads.get_mut("fc.bias").data;
            gb.iter_mut().zip(dlogits).for_each(|(b, g)| *b += g);
        }

        let mut dfeat = vec![0.0; self.pooled_dim()];
        for (i, df) in dfeat.iter_mut().enumerate() {
            let mut s = 0.0;
            for c in 0..c_count {
                s += dlogits[c] * fc.data[c * in_dim + i];
            }
            if !trace.mask.is_empty() {
                s *= trace.mask[i];
            }
            *df = s;
        }

        let x = self.embed(ids, trace.len).expect("ids validated by forward");
        let mut dx = vec![0.0; x.len()];
        for (wi, pool) in trace.pools.iter().enumerate() {
            let w = pool.width;
            let weight = self.params.get(&conv_weight(w));
            let wname = conv_weight(w);
            let bname = conv_bias(w);
            for k in 0..f {
                let g = dfeat[wi * f + k];
                if g == 0.0 || pool.pre_max[k] <= 0.0 {
                    continue;
                }
                let s = pool.argmax[k];
                let window = &x[s * d..(s + w) * d];
                let gw = grads.get_mut(&wname);
                gw.row_mut(k).iter_mut().zip(window).for_each(|(a, b)| *a += g * b);
                grads.get_mut(&bname).data[k] += g;
                dx[s * d..(s + w) * d]
                    .iter_mut()
                    .zip(weight.row(k))
                    .for_each(|(a, b)| *a += g * b);
            }
        }

        let gemb = grads.get_mut("embedding");
        for (t, &id) in ids[..trace.len].iter().enumerate() {
            if id == PAD_ID {
                continue;
            }
            let row = gemb.row_mut(id as usize);
            row.iter_mut().zip(&dx[t * d..(t + 1) * d]).for_each(|(a, b)| *a += b);
        }
    }

    /// Adds `λ·w` to the gradient of every non-bias parameter.
    pub fn add_l2_gradient(&self, grads: &mut ParamSet, lambda: f64) {
        if lambda == 0.0 {
            return;
        }
        for i in 0..self.params.len() {
            let name = &self.params.names()[i];
            if is_bias(name) {
                continue;
            }
            let p = &self.params.tensor(i).data;
            grads.tensor_mut(i).data.iter_mut().zip(p).for_each(|(g, w)| *g += lambda * w);
        }
    }

    /// `(λ/2)·Σw²` over non-bias parameters; the objective whose gradient
    /// [`TextModel::add_l2_gradient`] adds.
    pub fn l2_penalty(&self, lambda: f64) -> f64 {
        self.params
            .iter()
            .filter(|(n, _)| !is_bias(n))
            .map(|(_, t)| t.data.iter().map(|w| w * w).sum::<f64>())
            .sum::<f64>()
            * lambda
            / 2.0
    }

    /// Keeps the PAD embedding at zero after an optimizer step.
    pub(crate) fn reset_pad(&mut self) {
        self.params.get_mut("embedding").row_mut(PAD_ID as usize).fill(0.0);
    }
}

/// `d loss / d logit` for mean BCE over `scale` entries; zero where the
/// probability was clamped.
pub(crate) fn bce_logit_grad(logit: f64, target: f64, scale: f64) -> f64 {
    let p = sigmoid(logit);
    if !(PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&p) {
        return 0.0;
    }
    (p - target) / scale
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
