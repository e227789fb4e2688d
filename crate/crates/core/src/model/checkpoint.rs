//! Checkpoint file.
//!
//! Layout, all integers little-endian:
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 4    | magic `PSEG`                            |
//! | 4      | 4    | format version (`u32`, currently 1)     |
//! | 8      | 4    | metadata length `n` in bytes (`u32`)    |
//! | 12     | n    | metadata, UTF-8 JSON                    |
//! | 12+n   | 8    | parameter count `p` (`u64`)             |
//! | 20+n   | 4·p  | parameters, `f32`, checkpoint order     |

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::network::Model;
use crate::autodiff::AdamConfig;
use crate::error::{Error, Result};
use crate::loss::LossConfig;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"PSEG";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerMeta {
    pub name: String,
    #[serde(flatten)]
    pub adam: AdamConfig,
}

impl Default for OptimizerMeta {
    fn default() -> Self {
        Self {
            name: "adam".into(),
            adam: AdamConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub model: ModelConfig,
    pub optimizer: OptimizerMeta,
    pub loss: LossConfig,
    /// Epoch the parameters were taken after (0 = untrained).
    pub epoch: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub meta: CheckpointMeta,
    pub params: Vec<f32>,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::format(
                self.pos as u64,
                format!(
                    "truncated {what}: need {n} bytes, {} left",
                    self.bytes.len() - self.pos
                ),
            ));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

impl Checkpoint {
    pub fn from_model(model: &Model, optimizer: OptimizerMeta, loss: LossConfig, epoch: usize, seed: u64) -> Self {
        Self {
            meta: CheckpointMeta {
                model: model.config().clone(),
                optimizer,
                loss,
                epoch,
                seed,
            },
            params: model.flat_params().into_iter().map(|v| v as f32).collect(),
        }
    }

    pub fn model(&self) -> Result<Model> {
        let flat: Vec<f64> = self.params.iter().map(|&v| v as f64).collect();
        Model::from_flat(self.meta.model.clone(), &flat)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let meta = serde_json::to_vec(&self.meta).expect("metadata serialises");
        let mut out = Vec::with_capacity(20 + meta.len() + 4 * self.params.len());
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        out.extend_from_slice(&meta);
        out.extend_from_slice(&(self.params.len() as u64).to_le_bytes());
        for v in &self.params {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4, "magic")? != CHECKPOINT_MAGIC {
            return Err(Error::format(0, "bad magic, expected PSEG"));
        }
        let version = r.u32("version")?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::format(4, format!("unsupported checkpoint version {version}")));
        }
        let meta_len = r.u32("metadata length")? as usize;
        let meta_at = r.pos as u64;
        let meta: CheckpointMeta = serde_json::from_slice(r.take(meta_len, "metadata")?)
            .map_err(|e| Error::format(meta_at, format!("invalid metadata: {e}")))?;
        let count_at = r.pos as u64;
        let count = r.u64("parameter count")?;
        let count = usize::try_from(count)
            .ok()
            .filter(|c| c.checked_mul(4).is_some())
            .ok_or_else(|| Error::format(count_at, "parameter count overflows"))?;
        let body = r.take(count * 4, "parameters")?;
        if r.pos != bytes.len() {
            return Err(Error::format(
                r.pos as u64,
                format!("{} trailing bytes", bytes.len() - r.pos),
            ));
        }
        let params = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self { meta, params })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
