use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{HeatConfig, TimeGrid};

/// Seeds of the five independent runs per configuration.
pub const DEFAULT_SEEDS: [u64; 5] = [1, 2001, 4001, 6001, 8001];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub gamma: f64,
    pub batch_size: usize,
    pub lr_critic: f64,
    pub lr_actor: f64,
    pub tau: f64,
    /// One update per this many newly stored transitions.
    pub update_every: usize,
    pub buffer_capacity: usize,
    pub grid_points: usize,
    pub grid_spacing: f64,
    pub delta: f64,
    pub temperature: f64,
    /// Global gradient-norm cap applied to both networks.
    pub grad_clip: f64,
    pub episodes: usize,
    pub seed: u64,
    pub eval_every: usize,
    pub eval_episodes: usize,
    /// Episodes of the closing evaluation of the best checkpoint; 0 skips it.
    pub final_eval_episodes: usize,
    /// Overrides the task's episode length when set.
    pub episode_length: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.95,
            batch_size: 1024,
            lr_critic: 1e-3,
            lr_actor: 1e-4,
            tau: 0.01,
            update_every: 100,
            buffer_capacity: 1_000_000,
            grid_points: 300,
            grid_spacing: 0.1,
            delta: 0.05,
            temperature: 1.0,
            grad_clip: 0.5,
            episodes: 1000,
            seed: 1,
            eval_every: 500,
            eval_episodes: 20,
            final_eval_episodes: 100,
            episode_length: None,
        }
    }
}

impl TrainConfig {
    pub fn heat(&self) -> Result<HeatConfig> {
        Ok(HeatConfig {
            grid: TimeGrid::new(self.grid_spacing, self.grid_points)?,
            delta: self.delta,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lr_critic", self.lr_critic),
            ("lr_actor", self.lr_actor),
            ("grid_spacing", self.grid_spacing),
            ("temperature", self.temperature),
            ("grad_clip", self.grad_clip),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        let counts = [
            ("batch_size", self.batch_size),
            ("update_every", self.update_every),
            ("buffer_capacity", self.buffer_capacity),
            ("grid_points", self.grid_points),
            ("eval_every", self.eval_every),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Parameter(format!("{name} must be positive")));
            }
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Parameter(format!("gamma {} outside [0, 1]", self.gamma)));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::Parameter(format!("tau {} outside (0, 1]", self.tau)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Parameter(format!("delta {} outside (0, 1)", self.delta)));
        }
        if self.episode_length == Some(0) {
            return Err(Error::Parameter("episode_length must be positive".into()));
        }
        Ok(())
    }

    /// Flat `key=value` view, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("gamma", self.gamma.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("lr_critic", self.lr_critic.to_string()),
            ("lr_actor", self.lr_actor.to_string()),
            ("tau", self.tau.to_string()),
            ("update_every", self.update_every.to_string()),
            ("buffer_capacity", self.buffer_capacity.to_string()),
            ("grid_points", self.grid_points.to_string()),
            ("grid_spacing", self.grid_spacing.to_string()),
            ("delta", self.delta.to_string()),
            ("temperature", self.temperature.to_string()),
            ("grad_clip", self.grad_clip.to_string()),
            ("episodes", self.episodes.to_string()),
            ("seed", self.seed.to_string()),
            ("eval_every", self.eval_every.to_string()),
            ("eval_episodes", self.eval_episodes.to_string()),
            ("final_eval_episodes", self.final_eval_episodes.to_string()),
            (
                "episode_length",
                self.episode_length.map_or_else(|| "task".to_string(), |t| t.to_string()),
            ),
        ]
    }

    /// Applies one `key=value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.trim()
                .parse()
                .map_err(|_| Error::Usage(format!("cannot parse `{v}` for `{key}`")))
        }
        match key.trim() {
            "gamma" => self.gamma = num(key, value)?,
            "batch_size" | "batch" => self.batch_size = num(key, value)?,
            "lr_critic" => self.lr_critic = num(key, value)?,
            "lr_actor" => self.lr_actor = num(key, value)?,
            "tau" => self.tau = num(key, value)?,
            "update_every" => self.update_every = num(key, value)?,
            "buffer_capacity" => self.buffer_capacity = num(key, value)?,
            "grid_points" => self.grid_points = num(key, value)?,
            "grid_spacing" => self.grid_spacing = num(key, value)?,
            "delta" => self.delta = num(key, value)?,
            "temperature" => self.temperature = num(key, value)?,
            "grad_clip" => self.grad_clip = num(key, value)?,
            "episodes" => self.episodes = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "eval_every" => self.eval_every = num(key, value)?,
            "eval_episodes" => self.eval_episodes = num(key, value)?,
            "final_eval_episodes" => self.final_eval_episodes = num(key, value)?,
            "episode_length" => {
                self.episode_length = match value.trim() {
                    "task" | "" => None,
                    v => Some(num(key, v)?),
                }
            }
            other => {
                let known: Vec<&str> = self.entries().iter().map(|(k, _)| *k).collect();
                return Err(Error::Usage(format!(
                    "unknown setting `{other}` (known: {})",
                    known.join(", ")
                )));
            }
        }
        Ok(())
    }
}
