use rand::Rng;

use super::config::ModelConfig;
use crate::autodiff::Tensor;
use crate::error::Result;

/// Projections of one attention sub-layer.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionParams<T> {
    pub q_w: T,
    pub q_b: T,
    pub k_w: T,
    pub k_b: T,
    pub v_w: T,
    pub v_b: T,
    pub out_w: T,
    pub out_b: T,
}

/// Weights of one encoder or decoder block. Decoder blocks carry a
/// cross-attention sub-layer, encoder blocks do not.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockParams<T> {
    pub conv_w: T,
    pub conv_b: T,
    pub self_attn: AttentionParams<T>,
    pub cross_attn: Option<AttentionParams<T>>,
    pub ff_w: T,
    pub ff_b: T,
}

/// Input projection, blocks and classifier head of one stage.
#[derive(Clone, Debug, PartialEq)]
pub struct StageParams<T> {
    pub in_w: T,
    pub in_b: T,
    pub blocks: Vec<BlockParams<T>>,
    pub cls_w: T,
    pub cls_b: T,
}

/// All stages: index 0 is the encoder, the rest are decoders.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<T> {
    pub stages: Vec<StageParams<T>>,
}

impl<T> AttentionParams<T> {
    fn collect<'a>(&'a self, out: &mut Vec<&'a T>) {
        out.extend([
            &self.q_w,
            &self.q_b,
            &self.k_w,
            &self.k_b,
            &self.v_w,
            &self.v_b,
            &self.out_w,
            &self.out_b,
        ]);
    }

    fn collect_mut<'a>(&'a mut self, out: &mut Vec<&'a mut T>) {
        out.extend([
            &mut self.q_w,
            &mut self.q_b,
            &mut self.k_w,
            &mut self.k_b,
            &mut self.v_w,
            &mut self.v_b,
            &mut self.out_w,
            &mut self.out_b,
        ]);
    }

    fn try_map<U>(&self, f: &mut impl FnMut(&T) -> Result<U>) -> Result<AttentionParams<U>> {
        Ok(AttentionParams {
            q_w: f(&self.q_w)?,
            q_b: f(&self.q_b)?,
            k_w: f(&self.k_w)?,
            k_b: f(&self.k_b)?,
            v_w: f(&self.v_w)?,
            v_b: f(&self.v_b)?,
            out_w: f(&self.out_w)?,
            out_b: f(&self.out_b)?,
        })
    }
}

impl<T> BlockParams<T> {
    fn collect<'a>(&'a self, out: &mut Vec<&'a T>) {
        out.push(&self.conv_w);
        out.push(&self.conv_b);
        self.self_attn.collect(out);
        if let Some(c) = &self.cross_attn {
            c.collect(out);
        }
        out.push(&self.ff_w);
        out.push(&self.ff_b);
    }

    fn collect_mut<'a>(&'a mut self, out: &mut Vec<&'a mut T>) {
        out.push(&mut self.conv_w);
        out.push(&mut self.conv_b);
        self.self_attn.collect_mut(out);
        if let Some(c) = &mut self.cross_attn {
            c.collect_mut(out);
        }
        out.push(&mut self.ff_w);
        out.push(&mut self.ff_b);
    }

    fn try_map<U>(&self, f: &mut impl FnMut(&T) -> Result<U>) -> Result<BlockParams<U>> {
        Ok(BlockParams {
            conv_w: f(&self.conv_w)?,
            conv_b: f(&self.conv_b)?,
            self_attn: self.self_attn.try_map(f)?,
            cross_attn: match &self.cross_attn {
                Some(c) => Some(c.try_map(f)?),
                None => None,
            },
            ff_w: f(&self.ff_w)?,
            ff_b: f(&self.ff_b)?,
        })
    }
}

impl<T> ModelParams<T> {
    /// Every parameter in checkpoint order: stage by stage, input
    /// projection, blocks in layer order, then the classifier head.
    pub fn iter(&self) -> Vec<&T> {
        let mut out = Vec::new();
        for s in &self.stages {
            out.push(&s.in_w);
            out.push(&s.in_b);
            for b in &s.blocks {
                b.collect(&mut out);
            }
            out.push(&s.cls_w);
            out.push(&s.cls_b);
        }
        out
    }

    pub fn iter_mut(&mut self) -> Vec<&mut T> {
        let mut out = Vec::new();
        for s in &mut self.stages {
            out.push(&mut s.in_w);
            out.push(&mut s.in_b);
            for b in &mut s.blocks {
                b.collect_mut(&mut out);
            }
            out.push(&mut s.cls_w);
            out.push(&mut s.cls_b);
        }
        out
    }

    pub fn try_map<U>(&self, mut f: impl FnMut(&T) -> Result<U>) -> Result<ModelParams<U>> {
        let stages = self
            .stages
            .iter()
            .map(|s| {
                Ok(StageParams {
                    in_w: f(&s.in_w)?,
                    in_b: f(&s.in_b)?,
                    blocks: s
                        .blocks
                        .iter()
                        .map(|b| b.try_map(&mut f))
                        .collect::<Result<_>>()?,
                    cls_w: f(&s.cls_w)?,
                    cls_b: f(&s.cls_b)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(ModelParams { stages })
    }
}

/// Draws weights uniformly in `±1/sqrt(fan_in)`; biases share the bound of
/// the weight they accompany.
struct Init<'a, R: Rng> {
    rng: &'a mut R,
}

impl<R: Rng> Init<'_, R> {
    fn uniform(&mut self, shape: Vec<usize>, fan_in: usize) -> Tensor {
        let bound = 1.0 / (fan_in as f64).sqrt();
        let n: usize = shape.iter().product();
        let data = (0..n).map(|_| self.rng.random_range(-bound..bound)).collect();
        Tensor::new(shape, data).expect("shape matches data")
    }

    fn linear(&mut self, d_in: usize, d_out: usize) -> (Tensor, Tensor) {
        (
            self.uniform(vec![d_in, d_out], d_in),
            self.uniform(vec![d_out], d_in),
        )
    }

    fn attention(&mut self, d: usize) -> AttentionParams<Tensor> {
        let (q_w, q_b) = self.linear(d, d);
        let (k_w, k_b) = self.linear(d, d);
        let (v_w, v_b) = self.linear(d, d);
        let (out_w, out_b) = self.linear(d, d);
        AttentionParams {
            q_w,
            q_b,
            k_w,
            k_b,
            v_w,
            v_b,
            out_w,
            out_b,
        }
    }

    fn block(&mut self, cfg: &ModelConfig, cross: bool) -> BlockParams<Tensor> {
        let d = cfg.internal_dim;
        let k = cfg.kernel_size;
        let conv_w = self.uniform(vec![k, d, d], k * d);
        let conv_b = self.uniform(vec![d], k * d);
        let self_attn = self.attention(d);
        let cross_attn = cross.then(|| self.attention(d));
        let (ff_w, ff_b) = self.linear(d, d);
        BlockParams {
            conv_w,
            conv_b,
            self_attn,
            cross_attn,
            ff_w,
            ff_b,
        }
    }
}

pub(crate) fn init_params<R: Rng>(cfg: &ModelConfig, rng: &mut R) -> ModelParams<Tensor> {
    let mut init = Init { rng };
    let d = cfg.internal_dim;
    let stages = (0..cfg.num_stages())
        .map(|s| {
            let is_decoder = s > 0;
            let in_dim = if is_decoder { cfg.num_classes } else { cfg.input_dim };
            let (in_w, in_b) = init.linear(in_dim, d);
            let blocks = (0..cfg.num_layers)
                .map(|_| init.block(cfg, is_decoder))
                .collect();
            let (cls_w, cls_b) = init.linear(d, cfg.num_classes);
            StageParams {
                in_w,
                in_b,
                blocks,
                cls_w,
                cls_b,
            }
        })
        .collect();
    ModelParams { stages }
}
