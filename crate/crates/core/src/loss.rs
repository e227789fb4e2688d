//! Training objective: frame-wise cross-entropy plus a clamped temporal
//! smoothing penalty on log-probabilities, summed over stages.

use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, Tensor, Var};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    /// Weight of the smoothing term.
    pub lambda: f64,
    pub clamp_lo: f64,
    pub clamp_hi: f64,
    /// Treat the previous frame's log-probabilities as constants.
    pub detach_previous: bool,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            lambda: 0.15,
            clamp_lo: 0.0,
            clamp_hi: 16.0,
            detach_previous: true,
        }
    }
}

impl LossConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::Config(format!("lambda must be ≥ 0, got {}", self.lambda)));
        }
        if self.clamp_lo != 0.0 || !(self.clamp_hi >= 0.0) {
            return Err(Error::Config(format!(
                "clamp bounds must be 0 ≤ hi, got [{}, {}]",
                self.clamp_lo, self.clamp_hi
            )));
        }
        Ok(())
    }
}

/// Mean over frames of `-log softmax(logits)[t, y_t]`.
pub fn cross_entropy(g: &mut Graph, logits: Var, labels: &[usize]) -> Result<Var> {
    let lp = g.log_softmax(logits, 1)?;
    g.nll_mean(lp, labels)
}

/// `1/(T·C) · Σ_{t≥1} Σ_c clamp(Δ², lo, hi)` with
/// `Δ = log_softmax[t] - log_softmax[t-1]`. Zero for `T < 2`.
pub fn smoothing_loss(g: &mut Graph, logits: Var, cfg: &LossConfig) -> Result<Var> {
    let (t, c) = g.value(logits).dims2()?;
    if t < 2 {
        return g.constant(Tensor::scalar(0.0));
    }
    let lp = g.log_softmax(logits, 1)?;
    let cur = g.slice_rows(lp, 1, t)?;
    let mut prev = g.slice_rows(lp, 0, t - 1)?;
    if cfg.detach_previous {
        prev = g.detach(prev)?;
    }
    let delta = g.sub(cur, prev)?;
    let sq = g.square(delta)?;
    let clamped = g.clamp(sq, cfg.clamp_lo, cfg.clamp_hi)?;
    let total = g.sum(clamped)?;
    g.scale(total, 1.0 / (t * c) as f64)
}

/// `Σ_stages [cross_entropy + λ · smoothing_loss]`.
pub fn total_loss(g: &mut Graph, stages: &[Var], labels: &[usize], cfg: &LossConfig) -> Result<Var> {
    cfg.validate()?;
    if stages.is_empty() {
        return Err(Error::EmptyInput("no stage logits".into()));
    }
    let mut total: Option<Var> = None;
    for &s in stages {
        let ce = cross_entropy(g, s, labels)?;
        let sm = smoothing_loss(g, s, cfg)?;
        let sm = g.scale(sm, cfg.lambda)?;
        let stage = g.add(ce, sm)?;
        total = Some(match total {
            Some(acc) => g.add(acc, stage)?,
            None => stage,
        });
    }
    Ok(total.expect("at least one stage"))
}

/// Value-only helpers for callers that hold plain tensors.
pub mod eval {
    use super::*;

    fn on_graph(f: impl FnOnce(&mut Graph) -> Result<Var>) -> Result<f64> {
        let mut g = Graph::new();
        let out = f(&mut g)?;
        Ok(g.value(out).data()[0])
    }

    pub fn cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<f64> {
        on_graph(|g| {
            let x = g.constant(logits.clone())?;
            super::cross_entropy(g, x, labels)
        })
    }

    pub fn smoothing_loss(logits: &Tensor, cfg: &LossConfig) -> Result<f64> {
        on_graph(|g| {
            let x = g.constant(logits.clone())?;
            super::smoothing_loss(g, x, cfg)
        })
    }

    pub fn total_loss(stages: &[Tensor], labels: &[usize], cfg: &LossConfig) -> Result<f64> {
        on_graph(|g| {
            let vars = stages
                .iter()
                .map(|s| g.constant(s.clone()))
                .collect::<Result<Vec<_>>>()?;
            super::total_loss(g, &vars, labels, cfg)
        })
    }
}
