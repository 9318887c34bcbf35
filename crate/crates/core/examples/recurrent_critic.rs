//! The recurrent centralised critic on a joint observation, the TD target it
//! feeds, and how its value depends on the agent order it reads.

use cdc::critic::{td_target, RecurrentCritic, GAMMA};
use cdc::envs::{one_hot, Env, EnvConfig, Task};
use cdc::policy::stack_rows;
use ndarray::{array, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cdc::Result<()> {
    let cfg = EnvConfig::new(Task::Line, 3).with_seed(2);
    let mut env = Env::new(cfg.clone())?;
    let obs = stack_rows(&env.reset()?)?;
    let critic = RecurrentCritic::new(cfg.observation_width(), &mut ChaCha8Rng::seed_from_u64(2));

    let actions = [1usize, 4, 0];
    let rows: Vec<Vec<f64>> = actions.iter().map(|&a| one_hot(a)).collect();
    let a = stack_rows(&rows)?;
    let q = critic.q_value(&obs, &a)?;
    println!("Q(o, a) = {q:.5}");

    let reversed = |m: &Array2<f64>| ndarray::concatenate![ndarray::Axis(0), m.slice(ndarray::s![2..3, ..]), m.slice(ndarray::s![1..2, ..]), m.slice(ndarray::s![0..1, ..])];
    println!("Q with agents read in reverse order = {:.5}", critic.q_value(&reversed(&obs), &reversed(&a))?);

    let y = td_target(&array![[-1.5]], GAMMA, &array![[q]])?;
    println!("TD target for r = -1.5: {:.5}", y[[0, 0]]);
    Ok(())
}
