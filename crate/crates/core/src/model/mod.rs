//! The causal encoder/decoder temporal model.

mod checkpoint;
mod config;
mod network;
mod params;
mod stream;

pub use checkpoint::{Checkpoint, CheckpointMeta, OptimizerMeta, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::ModelConfig;
pub use network::{decoder_block, encoder_block, Model, StageLogits};
pub use params::{AttentionParams, BlockParams, ModelParams, StageParams};
pub use stream::StreamingSession;
