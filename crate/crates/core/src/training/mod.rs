//! The training loop: experience collection, replay, critic and actor
//! updates, target tracking, periodic evaluation and run logs.

mod config;
mod logs;
mod replay;
mod trainer;

pub use config::{TrainConfig, DEFAULT_SEEDS};
pub use logs::{EpisodeRow, EvalLogRow, EvalRow, MetricSummary, Stat, CSV_SCHEMA, METRICS};
pub use replay::{Batch, ReplayBuffer, Transition};
pub use trainer::{evaluate, write_eval_rows, EpisodeOutcome, TrainOutcome, Trainer, UpdateReport};
