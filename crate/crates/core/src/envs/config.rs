use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of discrete actions: no-op, +x, −x, +y, −y.
pub const ACTIONS: usize = 5;

pub const DT: f64 = 0.1;
pub const DAMPING: f64 = 0.25;
pub const ACCEL: f64 = 5.0;
pub const MAX_SPEED: f64 = 1.0;
/// Positions are clamped to `[−BOUND, BOUND]²`.
pub const BOUND: f64 = 1.5;
/// Agents and landmarks spawn uniformly in `[−SPAWN, SPAWN]²`.
pub const SPAWN: f64 = 1.0;
/// Radius of the regular polygon agents must form around the landmark.
pub const FORMATION_RADIUS: f64 = 0.5;
/// Leaders in Dynamic Pack; the remaining agents are blind members.
pub const PACK_LEADERS: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Navigation,
    Formation,
    Line,
    DynamicPack,
}

impl Task {
    pub const ALL: [Task; 4] = [Task::Navigation, Task::Formation, Task::Line, Task::DynamicPack];

    pub fn name(self) -> &'static str {
        match self {
            Task::Navigation => "navigation",
            Task::Formation => "formation",
            Task::Line => "line",
            Task::DynamicPack => "dynamic-pack",
        }
    }

    pub fn landmark_count(self, n_agents: usize) -> usize {
        match self {
            Task::Navigation => n_agents,
            Task::Formation | Task::DynamicPack => 1,
            Task::Line => 2,
        }
    }

    /// Steps per episode.
    pub fn episode_length(self) -> usize {
        match self {
            Task::Navigation => 25,
            _ => 50,
        }
    }

    /// Full training budget in episodes for the basic (≤ 5 agents) and
    /// scalable (more agents) versions of each task.
    pub fn full_episodes(self, n_agents: usize) -> usize {
        let scalable = n_agents > 5;
        match (self, scalable) {
            (_, true) => 30_000,
            (Task::Navigation, false) => 100_000,
            (_, false) => 50_000,
        }
    }

    /// Width of the fixed-size observation fed to the networks.
    pub fn observation_width(self, n_agents: usize) -> usize {
        match self {
            Task::Navigation => 4 + 2 * n_agents + 2 * n_agents.saturating_sub(1),
            Task::Formation => 6,
            Task::Line => 8,
            // own state, landmark block (zeros for members), leader flag
            Task::DynamicPack => 7,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        match norm.as_str() {
            "navigation" | "nav" => Ok(Task::Navigation),
            "formation" => Ok(Task::Formation),
            "line" => Ok(Task::Line),
            "dynamic-pack" | "dynamicpack" | "pack" => Ok(Task::DynamicPack),
            _ => Err(Error::Usage(format!(
                "unknown task `{s}` (expected one of: navigation, formation, line, dynamic-pack)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub task: Task,
    pub n_agents: usize,
    pub episode_length: usize,
    pub seed: u64,
    pub success_epsilon: f64,
    pub agent_radius: f64,
    pub catch_bonus: f64,
}

impl EnvConfig {
    pub fn new(task: Task, n_agents: usize) -> Self {
        Self {
            task,
            n_agents,
            episode_length: task.episode_length(),
            seed: 1,
            success_epsilon: 0.1,
            agent_radius: 0.05,
            catch_bonus: 100.0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn landmark_count(&self) -> usize {
        self.task.landmark_count(self.n_agents)
    }

    pub fn observation_width(&self) -> usize {
        self.task.observation_width(self.n_agents)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_agents == 0 {
            return Err(Error::Parameter("at least one agent is required".into()));
        }
        if self.episode_length == 0 {
            return Err(Error::Parameter("episode length must be positive".into()));
        }
        if !(self.success_epsilon > 0.0) || !(self.agent_radius >= 0.0) || !self.catch_bonus.is_finite() {
            return Err(Error::Parameter("invalid environment constants".into()));
        }
        Ok(())
    }
}
