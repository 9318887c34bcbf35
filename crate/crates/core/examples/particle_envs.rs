//! Uniform-random play on all four tasks, with the episode metrics.

use cdc::envs::{episode_metrics, Env, EnvConfig, EpisodeTrace, Task, ACTIONS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> cdc::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for task in Task::ALL {
        for n in [3, 6] {
            let cfg = EnvConfig::new(task, n).with_seed(7);
            let mut env = Env::new(cfg.clone())?;
            let obs = env.reset()?;
            let mut trace = EpisodeTrace::new(cfg.episode_length);
            loop {
                let actions: Vec<usize> = (0..n).map(|_| rng.gen_range(0..ACTIONS)).collect();
                let r = env.step(&actions)?;
                trace.push(r.reward, r.info);
                if r.done {
                    break;
                }
            }
            trace.finish(&env.state);
            let m = episode_metrics(&trace);
            println!(
                "{task:<13} n={n} obs width {:>2}: reward {:>8.2}  distance {:.3}  collisions {:>3}  success {}",
                obs[0].len(),
                m.reward,
                m.distance,
                m.collisions,
                m.success
            );
        }
    }
    Ok(())
}
