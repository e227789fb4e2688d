use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::ModelConfig;
use super::params::{init_params, AttentionParams, BlockParams, ModelParams};
use crate::autodiff::{Graph, Tensor, Var};
use crate::error::{Error, Result};
use crate::synthdata::FeatureSequence;

/// Per-stage logits, each `T × C`. Stage 0 is the encoder.
#[derive(Clone, Debug, PartialEq)]
pub struct StageLogits {
    stages: Vec<Tensor>,
}

impl StageLogits {
    pub fn new(stages: Vec<Tensor>) -> Result<Self> {
        let first = stages
            .first()
            .ok_or_else(|| Error::EmptyInput("no stages".into()))?
            .shape()
            .to_vec();
        if stages.iter().any(|s| s.shape() != first.as_slice()) {
            return Err(Error::Dimension("stages disagree on T × C".into()));
        }
        Ok(Self { stages })
    }

    pub fn num_stages(&self) -> usize {
        self.stages.len()
    }

    pub fn stage(&self, i: usize) -> &Tensor {
        &self.stages[i]
    }

    pub fn stages(&self) -> &[Tensor] {
        &self.stages
    }

    pub fn final_stage(&self) -> &Tensor {
        self.stages.last().expect("at least one stage")
    }

    /// Argmax labels of stage `i`.
    pub fn labels(&self, i: usize) -> Vec<usize> {
        self.stages[i].argmax_rows()
    }
}

/// The causal encoder/decoder temporal model.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    config: ModelConfig,
    params: ModelParams<Tensor>,
}

fn linear(g: &mut Graph, x: Var, w: Var, b: Var) -> Result<Var> {
    let y = g.matmul(x, w)?;
    g.add_bias(y, b)
}

fn attention(
    g: &mut Graph,
    query_src: Var,
    kv_src: Var,
    p: &AttentionParams<Var>,
    window: usize,
) -> Result<Var> {
    let q = linear(g, query_src, p.q_w, p.q_b)?;
    let k = linear(g, kv_src, p.k_w, p.k_b)?;
    let v = linear(g, kv_src, p.v_w, p.v_b)?;
    let att = g.window_attention(q, k, v, window)?;
    linear(g, att, p.out_w, p.out_b)
}

fn block(
    g: &mut Graph,
    cfg: &ModelConfig,
    x: Var,
    enc: Option<Var>,
    p: &BlockParams<Var>,
    layer: usize,
) -> Result<Var> {
    cfg.check_layer(layer)?;
    let window = cfg.window(layer);
    let c = g.causal_conv1d(x, p.conv_w, cfg.dilation(layer))?;
    let c = g.add_bias(c, p.conv_b)?;
    let h = g.relu(c)?;
    let sa = attention(g, h, h, &p.self_attn, window)?;
    let mut a = g.add(h, sa)?;
    if let (Some(enc), Some(cross)) = (enc, &p.cross_attn) {
        let ca = attention(g, a, enc, cross, window)?;
        a = g.add(a, ca)?;
    }
    let f = linear(g, a, p.ff_w, p.ff_b)?;
    let f = g.scale(f, cfg.residual_scale)?;
    g.add(x, f)
}

/// One encoder block: causal dilated conv with ReLU, windowed causal
/// self-attention, pointwise projection, residual.
pub fn encoder_block(
    g: &mut Graph,
    cfg: &ModelConfig,
    x: Var,
    p: &BlockParams<Var>,
    layer: usize,
) -> Result<Var> {
    block(g, cfg, x, None, p, layer)
}

/// One decoder block: the encoder block plus cross-attention whose queries
/// come from the decoder state and keys/values from the encoder embedding.
pub fn decoder_block(
    g: &mut Graph,
    cfg: &ModelConfig,
    x: Var,
    enc: Var,
    p: &BlockParams<Var>,
    layer: usize,
) -> Result<Var> {
    let tx = g.value(x).dims2()?.0;
    let te = g.value(enc).dims2()?.0;
    if tx != te {
        return Err(Error::Dimension(format!(
            "decoder input has {tx} frames, encoder embedding {te}"
        )));
    }
    if p.cross_attn.is_none() {
        return Err(Error::Parameter("decoder block without cross-attention weights".into()));
    }
    block(g, cfg, x, Some(enc), p, layer)
}

impl Model {
    /// Freshly initialised model; parameters are a pure function of `seed`.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = init_params(&config, &mut rng);
        Ok(Self { config, params })
    }

    /// Rebuilds a model from a flat parameter vector in checkpoint order.
    pub fn from_flat(config: ModelConfig, flat: &[f64]) -> Result<Self> {
        let mut model = Self::new(config, 0)?;
        let expected = model.num_parameters();
        if flat.len() != expected {
            return Err(Error::Config(format!(
                "model needs {expected} parameters, got {}",
                flat.len()
            )));
        }
        let mut offset = 0;
        for t in model.params.iter_mut() {
            let n = t.numel();
            t.data_mut().copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(model)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ModelParams<Tensor> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ModelParams<Tensor> {
        &mut self.params
    }

    pub fn num_parameters(&self) -> usize {
        self.params.iter().iter().map(|t| t.numel()).sum()
    }

    pub fn flat_params(&self) -> Vec<f64> {
        self.params
            .iter()
            .into_iter()
            .flat_map(|t| t.data().iter().copied())
            .collect()
    }

    /// Copy with every parameter rounded to the nearest `f32`, i.e. exactly
    /// what a checkpoint stores.
    pub fn rounded_to_f32(&self) -> Model {
        let mut m = self.clone();
        for t in m.params.iter_mut() {
            t.data_mut().iter_mut().for_each(|v| *v = *v as f32 as f64);
        }
        m
    }

    /// Records every parameter as a trainable leaf on `g`.
    pub fn bind(&self, g: &mut Graph) -> Result<ModelParams<Var>> {
        self.params.try_map(|t| g.param(t.clone()))
    }

    /// Records every parameter as a constant on `g`.
    pub fn bind_frozen(&self, g: &mut Graph) -> Result<ModelParams<Var>> {
        self.params.try_map(|t| g.constant(t.clone()))
    }

    /// Builds the full forward pass on `g` and returns one logits node per
    /// stage.
    pub fn forward_graph(
        &self,
        g: &mut Graph,
        p: &ModelParams<Var>,
        features: Var,
    ) -> Result<Vec<Var>> {
        let cfg = &self.config;
        let (t, d) = g.value(features).dims2()?;
        if t == 0 {
            return Err(Error::EmptyInput("feature sequence has no frames".into()));
        }
        if d != cfg.input_dim {
            return Err(Error::Dimension(format!(
                "features have dimension {d}, model expects {}",
                cfg.input_dim
            )));
        }
        let enc_p = &p.stages[0];
        let mut x = linear(g, features, enc_p.in_w, enc_p.in_b)?;
        for (l, bp) in enc_p.blocks.iter().enumerate() {
            x = encoder_block(g, cfg, x, bp, l + 1)?;
        }
        let emb = x;
        let mut logits = vec![linear(g, emb, enc_p.cls_w, enc_p.cls_b)?];
        for sp in &p.stages[1..] {
            let prev = *logits.last().expect("encoder logits");
            let probs = g.softmax(prev, 1)?;
            let mut x = linear(g, probs, sp.in_w, sp.in_b)?;
            for (l, bp) in sp.blocks.iter().enumerate() {
                x = decoder_block(g, cfg, x, emb, bp, l + 1)?;
            }
            logits.push(linear(g, x, sp.cls_w, sp.cls_b)?);
        }
        Ok(logits)
    }

    pub fn forward_tensor(&self, features: &Tensor) -> Result<StageLogits> {
        let mut g = Graph::new();
        let p = self.bind_frozen(&mut g)?;
        let x = g.constant(features.clone())?;
        let stages = self.forward_graph(&mut g, &p, x)?;
        StageLogits::new(stages.into_iter().map(|v| g.value(v).clone()).collect())
    }

    pub fn forward(&self, features: &FeatureSequence) -> Result<StageLogits> {
        if features.num_frames() == 0 {
            return Err(Error::EmptyInput("feature sequence has no frames".into()));
        }
        if features.dim() != self.config.input_dim {
            return Err(Error::Dimension(format!(
                "features have dimension {}, model expects {}",
                features.dim(),
                self.config.input_dim
            )));
        }
        self.forward_tensor(&features.to_tensor()?)
    }

    /// Final-stage argmax per frame.
    pub fn predict(&self, features: &FeatureSequence) -> Result<Vec<usize>> {
        let logits = self.forward(features)?;
        Ok(logits.labels(logits.num_stages() - 1))
    }
}
