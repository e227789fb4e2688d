use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Architecture of the encoder/decoder stack.
///
/// Layer `l` (1-based) uses dilation `2^(l-1)` in its convolution and
/// attention windows of the same length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub num_layers: usize,
    pub num_decoders: usize,
    pub internal_dim: usize,
    pub num_classes: usize,
    pub input_dim: usize,
    pub kernel_size: usize,
    /// Multiplier on the feed-forward branch before the residual add.
    pub residual_scale: f64,
    /// Recorded for provenance; only `"relu"` is implemented.
    pub activation: String,
    /// Recorded for provenance; only `"uniform_fan_in"` is implemented.
    pub init: String,
}

impl ModelConfig {
    pub fn new(num_classes: usize, input_dim: usize) -> Self {
        Self {
            num_layers: 10,
            num_decoders: 3,
            internal_dim: 64,
            num_classes,
            input_dim,
            kernel_size: 3,
            residual_scale: 1.0,
            activation: "relu".into(),
            init: "uniform_fan_in".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.num_layers < 1 {
            return bad("num_layers must be at least 1".into());
        }
        if self.num_layers > 30 {
            return bad(format!("num_layers {} exceeds 30", self.num_layers));
        }
        if self.num_classes < 2 {
            return bad(format!("num_classes must be at least 2, got {}", self.num_classes));
        }
        if self.internal_dim < 1 || self.input_dim < 1 || self.kernel_size < 1 {
            return bad("internal_dim, input_dim and kernel_size must be positive".into());
        }
        if !self.residual_scale.is_finite() {
            return bad("residual_scale must be finite".into());
        }
        if self.activation != "relu" {
            return bad(format!("unsupported activation {:?}", self.activation));
        }
        if self.init != "uniform_fan_in" {
            return bad(format!("unsupported init {:?}", self.init));
        }
        Ok(())
    }

    pub fn num_stages(&self) -> usize {
        1 + self.num_decoders
    }

    /// Dilation of layer `l`, 1-based.
    pub fn dilation(&self, layer: usize) -> usize {
        1 << (layer - 1)
    }

    /// Attention window length of layer `l`, 1-based.
    pub fn window(&self, layer: usize) -> usize {
        1 << (layer - 1)
    }

    pub(crate) fn check_layer(&self, layer: usize) -> Result<()> {
        if layer < 1 || layer > self.num_layers {
            return Err(Error::Parameter(format!(
                "layer {layer} outside 1..={}",
                self.num_layers
            )));
        }
        Ok(())
    }

    /// How far back a layer-`l` block can look: conv reach plus the widest
    /// attention span (previous window plus current window, minus one).
    pub fn block_horizon(&self, layer: usize) -> usize {
        (self.kernel_size - 1) * self.dilation(layer) + 2 * self.window(layer) - 1
    }
}
