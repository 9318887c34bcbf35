//! Two seeds trained in parallel and their closing evaluations pooled into one table row.

use cdc::baselines::Algorithm;
use cdc::envs::Task;
use cdc::harness::{aggregate, aggregate_dirs, train_manifest, RunManifest};
use cdc::training::TrainConfig;

fn main() -> cdc::Result<()> {
    let root = std::env::temp_dir().join("cdc_aggregate_example");
    let cfg = TrainConfig {
        episodes: 20,
        batch_size: 128,
        eval_every: 10,
        eval_episodes: 5,
        final_eval_episodes: 50,
        ..TrainConfig::default()
    };
    let manifest = RunManifest::new(Task::Line, 3, Algorithm::Cdc, cfg, vec![1, 2001], root.clone());
    for run in train_manifest(&manifest, 2)? {
        println!("seed {} -> {}", run.seed, run.dir.display());
    }
    let rows = aggregate_dirs(&[root])?;
    print!("{}", aggregate::to_csv(&rows));
    Ok(())
}
