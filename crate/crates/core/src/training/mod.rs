//! Full-video training with Adam, validation-based model selection and
//! evaluation.

mod config;
mod evaluate;
mod history;
mod trainer;

pub use config::TrainConfig;
pub use evaluate::{evaluate, evaluate_model, evaluate_stages};
pub use history::{EpochRecord, TrainHistory};
pub use trainer::{train, train_step, train_videos, Control, TrainOutcome};
