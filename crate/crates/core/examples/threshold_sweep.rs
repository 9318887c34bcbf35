//! Threshold study: trains the same configuration once per δ and prints the
//! pooled comparison table.
//!
//! `cargo run --release --example threshold_sweep -- /tmp/sweep 100`

use std::path::PathBuf;

use cdc::baselines::Algorithm;
use cdc::envs::Task;
use cdc::harness::{aggregate, threshold_sweep, RunManifest, SWEEP_DELTAS};
use cdc::training::TrainConfig;

fn main() -> cdc::Result<()> {
    let mut args = std::env::args().skip(1);
    let root = args.next().map_or_else(|| std::env::temp_dir().join("cdc_sweep"), PathBuf::from);
    let episodes = args.next().and_then(|s| s.parse().ok()).unwrap_or(20);
    let cfg = TrainConfig {
        episodes,
        batch_size: 128,
        eval_every: episodes,
        eval_episodes: 5,
        final_eval_episodes: 20,
        ..TrainConfig::default()
    };
    let base = RunManifest::new(Task::Formation, 4, Algorithm::Cdc, cfg, vec![1, 2001], root);
    let rows = threshold_sweep(&base, &SWEEP_DELTAS, 2)?;
    print!("{}", aggregate::to_table(&rows));
    Ok(())
}
