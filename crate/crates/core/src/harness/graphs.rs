use std::path::Path;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::envs::{Env, EnvConfig, Task};
use crate::error::{Error, Result};
use crate::policy::{CdcActor, Mode};
use crate::spectral::{average_heat_over_episode, eigenvector_centrality};

/// One unordered agent pair `u ≤ v` at one step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub heat: f64,
    pub p_hat: f64,
    pub found: bool,
    /// Learned connectivity strength; 0 on self-pairs.
    pub strength: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepGraph {
    pub step: usize,
    pub actions: Vec<usize>,
    pub edges: Vec<Edge>,
}

/// Plot-ready communication graphs of one evaluation episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommGraphExport {
    pub task: Task,
    pub n_agents: usize,
    pub seed: u64,
    pub reward: f64,
    pub steps: Vec<StepGraph>,
    /// Stable heat averaged over the episode, row-major.
    pub averaged: Vec<Vec<f64>>,
    pub centrality: Vec<f64>,
}

fn rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.outer_iter().map(|r| r.to_vec()).collect()
}

impl CommGraphExport {
    /// Checks pair coverage, symmetry of the average and normalisation of the centralities.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_agents;
        let pairs = n * (n + 1) / 2;
        for s in &self.steps {
            if s.edges.len() != pairs || s.edges.iter().any(|e| e.u > e.v || e.v >= n) {
                return Err(Error::Numeric(format!("step {} does not list the {pairs} unordered pairs", s.step)));
            }
        }
        if self.averaged.len() != n || self.averaged.iter().any(|r| r.len() != n) {
            return Err(Error::Numeric("averaged matrix has the wrong size".into()));
        }
        for u in 0..n {
            for v in 0..u {
                if (self.averaged[u][v] - self.averaged[v][u]).abs() > 1e-12 {
                    return Err(Error::Numeric(format!("averaged heat asymmetric at ({u}, {v})")));
                }
            }
        }
        let total: f64 = self.centrality.iter().sum();
        if self.centrality.len() != n || (total - 1.0).abs() > 1e-9 {
            return Err(Error::Numeric(format!("centralities sum to {total}")));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.validate()?;
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Rolls one greedy episode and records the stable heat graph at every step.
pub fn export_graphs(actor: &CdcActor, env_cfg: &EnvConfig, seed: u64) -> Result<CommGraphExport> {
    let mut env = Env::new(EnvConfig { seed, ..env_cfg.clone() })?;
    let mut unused = ChaCha8Rng::seed_from_u64(seed);
    let n = env_cfg.n_agents;
    let mut obs = env.reset()?;
    let mut steps = Vec::with_capacity(env_cfg.episode_length);
    let mut stable = Vec::with_capacity(env_cfg.episode_length);
    let mut reward = 0.0;
    loop {
        let step = actor.step(&obs, Mode::Eval, 1.0, &mut unused)?;
        let mut edges = Vec::with_capacity(n * (n + 1) / 2);
        for u in 0..n {
            for v in u..n {
                edges.push(Edge {
                    u,
                    v,
                    heat: step.stable.heat[[u, v]],
                    p_hat: step.stable.p_hat[[u, v]],
                    found: step.stable.found[[u, v]],
                    strength: if u == v { 0.0 } else { step.strengths.strengths()[[u, v]] },
                });
            }
        }
        let res = env.step(&step.actions)?;
        reward += res.reward;
        steps.push(StepGraph {
            step: steps.len(),
            actions: step.actions,
            edges,
        });
        stable.push(step.stable);
        obs = res.observations;
        if res.done {
            break;
        }
    }
    let averaged = average_heat_over_episode(&stable)?;
    let centrality = eigenvector_centrality(&averaged)?;
    Ok(CommGraphExport {
        task: env_cfg.task,
        n_agents: n,
        seed,
        reward,
        steps,
        averaged: rows(&averaged),
        centrality: centrality.scores,
    })
}
