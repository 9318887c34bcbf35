use serde::{Deserialize, Serialize};

use crate::envs::EpisodeMetrics;

/// Version of the CSV layouts below; bumped on any column change.
pub const CSV_SCHEMA: u32 = 1;

/// One training episode in `metrics.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub episode: usize,
    pub reward: f64,
    pub distance: f64,
    pub collisions: usize,
    pub time: usize,
    pub success: u8,
    pub caught: usize,
    pub wall_seconds: f64,
}

impl EpisodeRow {
    pub fn new(episode: usize, m: &EpisodeMetrics, wall_seconds: f64) -> Self {
        Self {
            episode,
            reward: m.reward,
            distance: m.distance,
            collisions: m.collisions,
            time: m.time,
            success: m.success as u8,
            caught: m.caught,
            wall_seconds,
        }
    }
}

/// One evaluation episode in `eval_episodes.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub episode: usize,
    pub agents: usize,
    pub reward: f64,
    pub distance: f64,
    pub collisions: usize,
    pub time: usize,
    pub success: u8,
    pub caught: usize,
    pub farthest: f64,
}

impl EvalRow {
    pub fn new(episode: usize, agents: usize, m: &EpisodeMetrics) -> Self {
        Self {
            episode,
            agents,
            reward: m.reward,
            distance: m.distance,
            collisions: m.collisions,
            time: m.time,
            success: m.success as u8,
            caught: m.caught,
            farthest: m.farthest,
        }
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        Some(match name {
            "reward" => self.reward,
            "distance" => self.distance,
            "collisions" => self.collisions as f64,
            "time" => self.time as f64,
            "success" => self.success as f64,
            "caught" => self.caught as f64,
            "farthest" => self.farthest,
            _ => return None,
        })
    }
}

/// Periodic evaluation in `eval_log.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalLogRow {
    pub episode: usize,
    pub mean_reward: f64,
    pub success_rate: f64,
    pub best: u8,
}

/// Mean and population standard deviation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        let count = values.len();
        if count == 0 {
            return Self::default();
        }
        let mean = values.iter().sum::<f64>() / count as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / count as f64;
        Self {
            mean,
            std: var.sqrt(),
            count,
        }
    }
}

/// Metric names in reporting order.
pub const METRICS: [&str; 7] = ["reward", "distance", "collisions", "time", "success", "caught", "farthest"];

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub episodes: usize,
    pub reward: Stat,
    pub distance: Stat,
    pub collisions: Stat,
    pub time: Stat,
    pub success: Stat,
    pub caught: Stat,
    pub farthest: Stat,
}

impl MetricSummary {
    pub fn of(runs: &[EpisodeMetrics]) -> Self {
        let col = |f: &dyn Fn(&EpisodeMetrics) -> f64| Stat::of(&runs.iter().map(f).collect::<Vec<_>>());
        Self {
            episodes: runs.len(),
            reward: col(&|m| m.reward),
            distance: col(&|m| m.distance),
            collisions: col(&|m| m.collisions as f64),
            time: col(&|m| m.time as f64),
            success: col(&|m| m.success as u8 as f64),
            caught: col(&|m| m.caught as f64),
            farthest: col(&|m| m.farthest),
        }
    }

    pub fn get(&self, name: &str) -> Option<Stat> {
        Some(match name {
            "reward" => self.reward,
            "distance" => self.distance,
            "collisions" => self.collisions,
            "time" => self.time,
            "success" => self.success,
            "caught" => self.caught,
            "farthest" => self.farthest,
            _ => return None,
        })
    }

    /// `metric,mean,std,count` lines with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,mean,std,count\n");
        for m in METRICS {
            let s = self.get(m).expect("known metric");
            out.push_str(&format!("{m},{},{},{}\n", s.mean, s.std, s.count));
        }
        out
    }
}
