use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::metrics::{PhaseSequence, SegmentList};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Synthetic,
    External,
}

/// A `T × D` row-major matrix of finite per-frame features.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSequence {
    frames: usize,
    dim: usize,
    data: Vec<f32>,
    source: Source,
}

impl FeatureSequence {
    pub fn new(frames: usize, dim: usize, data: Vec<f32>, source: Source) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Dimension("feature dimension must be at least 1".into()));
        }
        if data.len() != frames * dim {
            return Err(Error::Dimension(format!(
                "{frames} × {dim} features need {} values, got {}",
                frames * dim,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "feature value at frame {}, column {} is not finite",
                i / dim,
                i % dim
            )));
        }
        Ok(Self {
            frames,
            dim,
            data,
            source,
        })
    }

    pub fn num_frames(&self) -> usize {
        self.frames
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn source(&self) -> Source {
        self.source
    }

    pub fn row(&self, t: usize) -> &[f32] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    /// First `t` frames.
    pub fn prefix(&self, t: usize) -> Result<Self> {
        let t = t.min(self.frames);
        Self::new(t, self.dim, self.data[..t * self.dim].to_vec(), self.source)
    }

    pub fn to_tensor(&self) -> Result<Tensor> {
        if self.frames == 0 {
            return Err(Error::EmptyInput("feature sequence has no frames".into()));
        }
        Tensor::new(
            vec![self.frames, self.dim],
            self.data.iter().map(|&v| v as f64).collect(),
        )
    }
}

/// One fixed vector per class, shared by every video of a dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct AnchorSet {
    dim: usize,
    anchors: Vec<Vec<f64>>,
}

impl AnchorSet {
    /// Standard normal anchors drawn from `seed`.
    pub fn new(num_classes: usize, dim: usize, seed: u64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Parameter(format!("feature dimension {dim} is below 2")));
        }
        if num_classes == 0 {
            return Err(Error::Parameter("anchor set needs at least one class".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let anchors = (0..num_classes)
            .map(|_| (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        Ok(Self { dim, anchors })
    }

    pub fn from_vectors(anchors: Vec<Vec<f64>>) -> Result<Self> {
        let dim = anchors.first().map_or(0, Vec::len);
        if dim < 2 || anchors.iter().any(|a| a.len() != dim) {
            return Err(Error::Parameter("anchors must share a dimension of at least 2".into()));
        }
        Ok(Self { dim, anchors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.anchors.len()
    }

    pub fn anchor(&self, class: usize) -> &[f64] {
        &self.anchors[class]
    }

    /// Index of the closest anchor in Euclidean distance.
    pub fn nearest(&self, x: &[f32]) -> usize {
        let dist = |a: &[f64]| -> f64 {
            a.iter().zip(x).map(|(a, &x)| (a - x as f64).powi(2)).sum()
        };
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (c, a) in self.anchors.iter().enumerate() {
            let d = dist(a);
            if d < best_d {
                best = c;
                best_d = d;
            }
        }
        best
    }
}

/// Noise and blending applied on top of the class anchors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureNoise {
    /// Standard deviation of the per-frame Gaussian noise.
    pub scale: f64,
    /// AR(1) coefficient of the noise across frames, in `[0, 1)`.
    pub correlation: f64,
    /// Half-width in frames of the blend band around each transition.
    pub ambiguity_width: usize,
}

impl Default for FeatureNoise {
    fn default() -> Self {
        Self {
            scale: 1.0,
            correlation: 0.0,
            ambiguity_width: 4,
        }
    }
}

/// Blend weight of the incoming class at every frame: 0 inside a run, rising
/// linearly across `[b - w, b + w]` for each boundary `b`. Bands are clipped
/// at the midpoints of the neighbouring runs so they never overlap.
pub fn blend_weights(labels: &[usize], width: usize) -> Vec<(usize, usize, f64)> {
    let mut out: Vec<(usize, usize, f64)> = labels.iter().map(|&y| (y, y, 0.0)).collect();
    if width == 0 || labels.is_empty() {
        return out;
    }
    let segs = SegmentList::from_labels(labels).expect("non-empty");
    let segs = segs.segments();
    for i in 1..segs.len() {
        let (prev, next) = (segs[i - 1], segs[i]);
        let b = next.start as f64;
        let w = width as f64;
        let lo = next.start.saturating_sub(width).max(prev.start + prev.len() / 2);
        let hi = (next.start + width).min(next.start + next.len().div_ceil(2));
        for (t, slot) in out.iter_mut().enumerate().take(hi).skip(lo) {
            let alpha = (t as f64 - (b - w)) / (2.0 * w);
            *slot = (prev.label, next.label, alpha.clamp(0.0, 1.0));
        }
    }
    out
}

/// Features for a labelled video: anchors, blended near transitions, plus
/// (optionally correlated) Gaussian noise drawn from `seed`.
pub fn synthesize_features(
    labels: &PhaseSequence,
    anchors: &AnchorSet,
    noise: &FeatureNoise,
    seed: u64,
) -> Result<FeatureSequence> {
    if labels.num_classes() > anchors.num_classes() {
        return Err(Error::Parameter(format!(
            "{} classes but only {} anchors",
            labels.num_classes(),
            anchors.num_classes()
        )));
    }
    if !(noise.scale >= 0.0) || !(0.0..1.0).contains(&noise.correlation) {
        return Err(Error::Parameter("noise scale must be ≥ 0 and correlation in [0, 1)".into()));
    }
    let d = anchors.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rho = noise.correlation;
    let innovation = noise.scale * (1.0 - rho * rho).sqrt();
    let mut state: Vec<f64> = (0..d)
        .map(|_| noise.scale * Distribution::<f64>::sample(&StandardNormal, &mut rng))
        .collect();
    let mut data = Vec::with_capacity(labels.len() * d);
    for (t, (from, to, alpha)) in blend_weights(labels.labels(), noise.ambiguity_width).into_iter().enumerate() {
        if t > 0 {
            for s in state.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *s = rho * *s + innovation * z;
            }
        }
        let (a, b) = (anchors.anchor(from), anchors.anchor(to));
        for k in 0..d {
            let base = (1.0 - alpha) * a[k] + alpha * b[k];
            data.push((base + state[k]) as f32);
        }
    }
    FeatureSequence::new(labels.len(), d, data, Source::Synthetic)
}
