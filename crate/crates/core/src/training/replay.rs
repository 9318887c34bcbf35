use ndarray::Array2;
use rand::Rng;

use crate::envs::ACTIONS;
use crate::error::{Error, Result};

/// One joint step: observations and next observations are stored row-major
/// (`n × width` flattened), actions as indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub actions: Vec<usize>,
    pub reward: f64,
    pub next_obs: Vec<f64>,
}

/// Stacked minibatch, rows `b·n + agent`.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub obs: Array2<f64>,
    pub actions: Array2<f64>,
    pub rewards: Array2<f64>,
    pub next_obs: Array2<f64>,
    pub n: usize,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.rewards.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// FIFO ring buffer with uniform sampling.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    n: usize,
    width: usize,
    data: Vec<Transition>,
    cursor: usize,
    inserted: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, n: usize, width: usize) -> Result<Self> {
        if capacity == 0 || n == 0 || width == 0 {
            return Err(Error::Parameter("replay buffer dimensions must be positive".into()));
        }
        Ok(Self {
            capacity,
            n,
            width,
            data: Vec::new(),
            cursor: 0,
            inserted: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Total transitions ever pushed.
    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    pub fn push(&mut self, t: Transition) -> Result<()> {
        let flat = self.n * self.width;
        if t.obs.len() != flat || t.next_obs.len() != flat || t.actions.len() != self.n {
            return Err(Error::Shape {
                op: "replay push",
                left: vec![flat, self.n],
                right: vec![t.obs.len(), t.actions.len()],
            });
        }
        if let Some(agent) = t.actions.iter().position(|&a| a >= ACTIONS) {
            return Err(Error::Action {
                agent,
                reason: format!("stored action {} out of range", t.actions[agent]),
            });
        }
        if self.data.len() < self.capacity {
            self.data.push(t);
        } else {
            self.data[self.cursor] = t;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
        self.inserted += 1;
        Ok(())
    }

    /// Oldest stored transition first.
    pub fn iter_fifo(&self) -> impl Iterator<Item = &Transition> {
        let split = if self.data.len() < self.capacity { 0 } else { self.cursor };
        self.data[split..].iter().chain(&self.data[..split])
    }

    /// `count` indices drawn uniformly with replacement.
    pub fn sample_indices<R: Rng>(&self, count: usize, rng: &mut R) -> Result<Vec<usize>> {
        if self.data.is_empty() {
            return Err(Error::Parameter("sampling from an empty replay buffer".into()));
        }
        Ok((0..count).map(|_| rng.gen_range(0..self.data.len())).collect())
    }

    pub fn gather(&self, indices: &[usize]) -> Batch {
        let (n, w, b) = (self.n, self.width, indices.len());
        let mut obs = Array2::zeros((b * n, w));
        let mut next_obs = Array2::zeros((b * n, w));
        let mut actions = Array2::zeros((b * n, ACTIONS));
        let mut rewards = Array2::zeros((b, 1));
        for (k, &i) in indices.iter().enumerate() {
            let t = &self.data[i];
            for a in 0..n {
                for c in 0..w {
                    obs[[k * n + a, c]] = t.obs[a * w + c];
                    next_obs[[k * n + a, c]] = t.next_obs[a * w + c];
                }
                actions[[k * n + a, t.actions[a]]] = 1.0;
            }
            rewards[[k, 0]] = t.reward;
        }
        Batch {
            obs,
            actions,
            rewards,
            next_obs,
            n,
        }
    }

    pub fn sample<R: Rng>(&self, count: usize, rng: &mut R) -> Result<Batch> {
        let idx = self.sample_indices(count, rng)?;
        Ok(self.gather(&idx))
    }
}
