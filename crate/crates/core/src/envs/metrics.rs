use std::io::Write;

use serde::{Deserialize, Serialize};

use super::world::{StepInfo, Vec2, WorldState};
use crate::error::Result;

/// Per-step record of one episode.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub episode_length: usize,
    pub rewards: Vec<f64>,
    pub steps: Vec<StepInfo>,
    pub caught_count: usize,
}

impl EpisodeTrace {
    pub fn new(episode_length: usize) -> Self {
        Self {
            episode_length,
            ..Self::default()
        }
    }

    pub fn push(&mut self, reward: f64, info: StepInfo) {
        self.rewards.push(reward);
        self.steps.push(info);
    }

    pub fn finish(&mut self, state: &WorldState) {
        self.caught_count = state.caught_count;
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub reward: f64,
    pub distance: f64,
    pub collisions: usize,
    /// First successful step (1-based), or the episode length.
    pub time: usize,
    pub success: bool,
    pub caught: usize,
    /// Mean over steps of the largest agent-to-target distance.
    pub farthest: f64,
}

pub fn episode_metrics(trace: &EpisodeTrace) -> EpisodeMetrics {
    let first = trace.steps.iter().position(|s| s.success);
    let farthest = if trace.steps.is_empty() {
        0.0
    } else {
        trace.steps.iter().map(|s| s.farthest).sum::<f64>() / trace.steps.len() as f64
    };
    EpisodeMetrics {
        reward: trace.rewards.iter().sum(),
        distance: trace.steps.iter().map(|s| s.displacement).sum(),
        collisions: trace.steps.iter().map(|s| s.collisions).sum(),
        time: first.map_or(trace.episode_length, |t| t + 1),
        success: first.is_some(),
        caught: trace.caught_count,
        farthest,
    }
}

/// One line of an NDJSON episode trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub episode: usize,
    pub step: usize,
    pub positions: Vec<Vec2>,
    pub landmarks: Vec<Vec2>,
    pub actions: Vec<usize>,
    pub reward: f64,
    pub collisions: usize,
    pub success: bool,
    pub caught: bool,
}

pub struct TraceWriter<W: Write> {
    out: W,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn write(&mut self, record: &TraceRecord) -> Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}
