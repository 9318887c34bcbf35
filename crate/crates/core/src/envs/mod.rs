//! Two-dimensional particle worlds for the four cooperative tasks.

mod config;
mod metrics;
mod world;

pub use config::*;
pub use metrics::{episode_metrics, EpisodeMetrics, EpisodeTrace, TraceRecord, TraceWriter};
pub use world::{
    action_direction, count_collisions, decode_one_hot, network_observation, observations, observe, one_hot, reset,
    reward, step, step_indices, target_points, RewardInfo, StepInfo, StepResult, Vec2, WorldState,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

/// A world bundled with its configuration and random stream.
#[derive(Clone, Debug)]
pub struct Env {
    pub cfg: EnvConfig,
    pub state: WorldState,
    rng: ChaCha8Rng,
}

impl Env {
    /// Builds and resets an environment seeded from `cfg.seed`.
    pub fn new(cfg: EnvConfig) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let (state, _) = reset(&cfg, &mut rng)?;
        Ok(Self { cfg, state, rng })
    }

    pub fn reset(&mut self) -> Result<Vec<Vec<f64>>> {
        let (state, obs) = reset(&self.cfg, &mut self.rng)?;
        self.state = state;
        Ok(obs)
    }

    pub fn observations(&self) -> Vec<Vec<f64>> {
        observations(&self.cfg, &self.state)
    }

    pub fn step(&mut self, actions: &[usize]) -> Result<StepResult> {
        step_indices(&self.cfg, &mut self.state, actions, &mut self.rng)
    }

    pub fn step_one_hot(&mut self, actions: &[Vec<f64>]) -> Result<StepResult> {
        step(&self.cfg, &mut self.state, actions, &mut self.rng)
    }
}
