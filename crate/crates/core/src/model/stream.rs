use super::network::Model;
use super::params::{AttentionParams, BlockParams};
use crate::autodiff::{argmax, kernels, Tensor};
use crate::error::{Error, Result};

/// Rows of width `d` for frames `first..first + len`, with older rows
/// dropped once no future frame can reach them.
#[derive(Debug)]
struct RowBuffer {
    d: usize,
    first: usize,
    data: Vec<f64>,
}

impl RowBuffer {
    fn new(d: usize) -> Self {
        Self {
            d,
            first: 0,
            data: Vec::new(),
        }
    }

    fn push(&mut self, row: &[f64]) {
        self.data.extend_from_slice(row);
    }

    fn row(&self, t: usize) -> &[f64] {
        let i = t - self.first;
        &self.data[i * self.d..(i + 1) * self.d]
    }

    /// Forget rows before frame `t`; amortised by only compacting once the
    /// dead prefix is at least as long as the live part.
    fn retain_from(&mut self, t: usize) {
        if t <= self.first {
            return;
        }
        let rows = self.data.len() / self.d;
        let dead = (t - self.first).min(rows);
        if dead >= (rows - dead).max(64) {
            self.data.drain(..dead * self.d);
            self.first += dead;
        }
    }
}

#[derive(Debug)]
struct LayerCache {
    inputs: RowBuffer,
    keys: RowBuffer,
    values: RowBuffer,
    cross_keys: RowBuffer,
    cross_values: RowBuffer,
}

impl LayerCache {
    fn new(d: usize) -> Self {
        Self {
            inputs: RowBuffer::new(d),
            keys: RowBuffer::new(d),
            values: RowBuffer::new(d),
            cross_keys: RowBuffer::new(d),
            cross_values: RowBuffer::new(d),
        }
    }
}

fn lin_row(x: &[f64], w: &Tensor, b: &Tensor) -> Vec<f64> {
    let n = b.numel();
    let mut out = vec![0.0; n];
    kernels::matmul_row(x, w.data(), n, &mut out);
    kernels::add_in_place(&mut out, b.data());
    out
}

/// Single-owner incremental inference over a frame stream.
///
/// Each pushed frame is run through every stage once, reusing cached
/// per-layer inputs and keys/values. The kernels and accumulation order are
/// those of the batch graph, so the label emitted for frame `t` equals the
/// final-stage argmax of a batch forward over frames `0..=t`, bit for bit.
/// Emitted labels are never revised.
#[derive(Debug)]
pub struct StreamingSession<'m> {
    model: &'m Model,
    caches: Vec<Vec<LayerCache>>,
    t: usize,
    labels: Vec<usize>,
    last_logits: Vec<Vec<f64>>,
    probs: Vec<f64>,
}

impl<'m> StreamingSession<'m> {
    pub fn new(model: &'m Model) -> Self {
        let cfg = model.config();
        let caches = (0..cfg.num_stages())
            .map(|_| {
                (0..cfg.num_layers)
                    .map(|_| LayerCache::new(cfg.internal_dim))
                    .collect()
            })
            .collect();
        Self {
            model,
            caches,
            t: 0,
            labels: Vec::new(),
            last_logits: Vec::new(),
            probs: Vec::new(),
        }
    }

    pub fn frames_seen(&self) -> usize {
        self.t
    }

    /// Labels emitted so far, one per pushed frame.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Logits of every stage for the most recent frame.
    pub fn last_logits(&self) -> &[Vec<f64>] {
        &self.last_logits
    }

    pub fn push_f32(&mut self, frame: &[f32]) -> Result<usize> {
        let row: Vec<f64> = frame.iter().map(|&v| v as f64).collect();
        self.push(&row)
    }

    /// Consumes the next frame and returns its label.
    pub fn push(&mut self, frame: &[f64]) -> Result<usize> {
        let model = self.model;
        let cfg = model.config();
        if frame.len() != cfg.input_dim {
            return Err(Error::Dimension(format!(
                "frame {} has dimension {}, model expects {}",
                self.t,
                frame.len(),
                cfg.input_dim
            )));
        }
        if let Some(i) = frame.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "frame {} has a non-finite value at index {i}",
                self.t
            )));
        }
        let t = self.t;
        let params = model.params();
        let mut stage_logits = Vec::with_capacity(cfg.num_stages());

        let enc = &params.stages[0];
        let mut x = lin_row(frame, &enc.in_w, &enc.in_b);
        for (l, bp) in enc.blocks.iter().enumerate() {
            x = self.layer_step(0, l, bp, &x, None);
        }
        let emb = x;
        stage_logits.push(lin_row(&emb, &enc.cls_w, &enc.cls_b));

        for (s, sp) in params.stages.iter().enumerate().skip(1) {
            let prev = stage_logits.last().expect("encoder logits");
            let mut probs = vec![0.0; prev.len()];
            kernels::softmax_row(prev, &mut probs);
            let mut x = lin_row(&probs, &sp.in_w, &sp.in_b);
            for (l, bp) in sp.blocks.iter().enumerate() {
                x = self.layer_step(s, l, bp, &x, Some(&emb));
            }
            stage_logits.push(lin_row(&x, &sp.cls_w, &sp.cls_b));
        }

        if let Some(i) = stage_logits.iter().flatten().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "frame {t} produced a non-finite logit (entry {i})"
            )));
        }
        let label = argmax(stage_logits.last().expect("final stage"));
        self.labels.push(label);
        self.last_logits = stage_logits;
        self.t += 1;
        self.trim();
        Ok(label)
    }

    fn attend(
        &mut self,
        stage: usize,
        layer: usize,
        cross: bool,
        q: &[f64],
        window: usize,
    ) -> Vec<f64> {
        let cache = &self.caches[stage][layer];
        let (keys, values) = if cross {
            (&cache.cross_keys, &cache.cross_values)
        } else {
            (&cache.keys, &cache.values)
        };
        let mut out = vec![0.0; values.d];
        kernels::attend_row(
            q,
            kernels::key_range(self.t, window),
            1.0 / (q.len() as f64).sqrt(),
            |j| keys.row(j),
            |j| values.row(j),
            &mut self.probs,
            &mut out,
        );
        out
    }

    fn attention_step(
        &mut self,
        stage: usize,
        layer: usize,
        p: &AttentionParams<Tensor>,
        query_src: &[f64],
        kv_src: &[f64],
        cross: bool,
        window: usize,
    ) -> Vec<f64> {
        let q = lin_row(query_src, &p.q_w, &p.q_b);
        let k = lin_row(kv_src, &p.k_w, &p.k_b);
        let v = lin_row(kv_src, &p.v_w, &p.v_b);
        let cache = &mut self.caches[stage][layer];
        if cross {
            cache.cross_keys.push(&k);
            cache.cross_values.push(&v);
        } else {
            cache.keys.push(&k);
            cache.values.push(&v);
        }
        let att = self.attend(stage, layer, cross, &q, window);
        lin_row(&att, &p.out_w, &p.out_b)
    }

    fn layer_step(
        &mut self,
        stage: usize,
        layer_idx: usize,
        p: &BlockParams<Tensor>,
        x: &[f64],
        enc: Option<&[f64]>,
    ) -> Vec<f64> {
        let model = self.model;
        let cfg = model.config();
        let layer = layer_idx + 1;
        let d = cfg.internal_dim;
        let (k, dilation, window, scale) = (
            cfg.kernel_size,
            cfg.dilation(layer),
            cfg.window(layer),
            cfg.residual_scale,
        );
        let t = self.t;

        self.caches[stage][layer_idx].inputs.push(x);
        let mut h = vec![0.0; d];
        {
            let inputs = &self.caches[stage][layer_idx].inputs;
            kernels::conv_frame(t, k, dilation, d, d, p.conv_w.data(), |s| inputs.row(s), &mut h);
        }
        kernels::add_in_place(&mut h, p.conv_b.data());
        kernels::relu_in_place(&mut h);

        let sa = self.attention_step(stage, layer_idx, &p.self_attn, &h, &h, false, window);
        let mut a = h;
        kernels::add_in_place(&mut a, &sa);
        if let (Some(enc), Some(cross)) = (enc, &p.cross_attn) {
            let ca = self.attention_step(stage, layer_idx, cross, &a, enc, true, window);
            kernels::add_in_place(&mut a, &ca);
        }
        let mut f = lin_row(&a, &p.ff_w, &p.ff_b);
        f.iter_mut().for_each(|v| *v *= scale);
        let mut out = x.to_vec();
        kernels::add_in_place(&mut out, &f);
        out
    }

    fn trim(&mut self) {
        let model = self.model;
        let cfg = model.config();
        let next = self.t;
        for stage in &mut self.caches {
            for (l, cache) in stage.iter_mut().enumerate() {
                let layer = l + 1;
                let conv_reach = (cfg.kernel_size - 1) * cfg.dilation(layer);
                cache.inputs.retain_from(next.saturating_sub(conv_reach));
                let key_start = kernels::key_range(next, cfg.window(layer)).start;
                cache.keys.retain_from(key_start);
                cache.values.retain_from(key_start);
                cache.cross_keys.retain_from(key_start);
                cache.cross_values.retain_from(key_start);
            }
        }
    }
}
