//! Short CDC training run on Formation with four agents, printing the
//! learning curve in blocks of episodes.
//!
//! `cargo run --release --example train_formation -- 400`

use cdc::baselines::Algorithm;
use cdc::envs::Task;
use cdc::harness::train_seed;
use cdc::training::TrainConfig;

fn main() -> cdc::Result<()> {
    let episodes = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let cfg = TrainConfig {
        episodes,
        batch_size: 256,
        eval_every: 50,
        eval_episodes: 10,
        final_eval_episodes: 20,
        ..TrainConfig::default()
    };
    let out = train_seed(Algorithm::Cdc, Task::Formation, 4, &cfg, None)?;
    for (i, block) in out.episodes.chunks(50).enumerate() {
        let mean = block.iter().map(|m| m.reward).sum::<f64>() / block.len() as f64;
        println!("episodes {:>4}-{:<4} mean reward {mean:>9.3}", i * 50 + 1, i * 50 + block.len());
    }
    for (ep, r) in &out.evaluations {
        println!("eval at {ep:>4}: {r:.3}");
    }
    println!("{} updates; best eval {:?}", out.updates, out.best_eval_reward);
    Ok(())
}
