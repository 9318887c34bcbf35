//! Every algorithm trained briefly on the same task and seed through the
//! shared loop, then compared on greedy evaluation.

use cdc::baselines::Algorithm;
use cdc::envs::Task;
use cdc::harness::train_seed;
use cdc::training::{MetricSummary, TrainConfig};

fn main() -> cdc::Result<()> {
    let cfg = TrainConfig {
        episodes: 60,
        batch_size: 128,
        eval_every: 30,
        eval_episodes: 5,
        final_eval_episodes: 20,
        ..TrainConfig::default()
    };
    println!("{:<22} {:>10} {:>10} {:>9}", "algorithm", "reward", "distance", "updates");
    for algo in Algorithm::all() {
        let out = train_seed(algo, Task::Line, 4, &cfg, None)?;
        let s = MetricSummary::of(&out.final_eval);
        println!("{:<22} {:>10.3} {:>10.3} {:>9}", algo, s.reward.mean, s.distance.mean, out.updates);
    }
    Ok(())
}
