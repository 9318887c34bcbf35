//! Trains a CDC actor on Dynamic Pack with four agents, then executes it with
//! three to eight agents and reports the farthest-agent distance.

use cdc::baselines::Algorithm;
use cdc::envs::{EnvConfig, Task};
use cdc::harness::train_seed;
use cdc::policy::CdcActor;
use cdc::training::{evaluate, MetricSummary, TrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cdc::Result<()> {
    let cfg = TrainConfig {
        episodes: 40,
        batch_size: 128,
        eval_every: 20,
        eval_episodes: 5,
        final_eval_episodes: 0,
        ..TrainConfig::default()
    };
    let out = train_seed(Algorithm::Cdc, Task::DynamicPack, 4, &cfg, None)?;
    let width = EnvConfig::new(Task::DynamicPack, 4).observation_width();
    let mut actor = CdcActor::new(width, cfg.heat()?, &mut ChaCha8Rng::seed_from_u64(0));
    actor.params.load_from(&out.best_actor)?;
    println!("agents  farthest  caught  reward");
    for n in 3..=8 {
        let s = MetricSummary::of(&evaluate(&actor, &EnvConfig::new(Task::DynamicPack, n), 20, 9)?);
        println!("{n:>6}  {:>8.3}  {:>6.2}  {:>7.2}", s.farthest.mean, s.caught.mean, s.reward.mean);
    }
    Ok(())
}
