//! One decision of an untrained CDC actor: pairwise messages, learned
//! connectivity, stable heat and the resulting actions.

use cdc::envs::{Env, EnvConfig, Task};
use cdc::policy::{CdcActor, Mode};
use cdc::spectral::HeatConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cdc::Result<()> {
    let cfg = EnvConfig::new(Task::Formation, 4).with_seed(3);
    let mut env = Env::new(cfg.clone())?;
    let obs = env.reset()?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let actor = CdcActor::new(cfg.observation_width(), HeatConfig::default(), &mut rng);
    println!("{} parameters", actor.params.scalar_count());

    let step = actor.step(&obs, Mode::Eval, 1.0, &mut rng)?;
    println!("connectivity S:\n{:.3}", step.strengths.strengths());
    println!("stable times p̂:\n{:.1}", step.stable.p_hat);
    println!("stable heat H:\n{:.3}", step.stable.heat);
    println!("logits:\n{:.3}", step.logits);
    println!("greedy actions {:?}", step.actions);

    let explore = actor.step(&obs, Mode::Train, 1.0, &mut rng)?;
    println!("sampled actions {:?}", explore.actions);
    Ok(())
}
