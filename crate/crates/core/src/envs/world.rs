use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::*;
use crate::error::{Error, Result};

pub type Vec2 = [f64; 2];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub positions: Vec<Vec2>,
    pub velocities: Vec<Vec2>,
    pub landmarks: Vec<Vec2>,
    pub step_index: usize,
    pub leader_mask: Vec<bool>,
    pub caught_count: usize,
    pub collisions: usize,
    pub path_length: Vec<f64>,
}

impl WorldState {
    /// A state with the given layout and all counters at zero.
    pub fn from_layout(cfg: &EnvConfig, positions: Vec<Vec2>, landmarks: Vec<Vec2>) -> Result<Self> {
        cfg.validate()?;
        if positions.len() != cfg.n_agents || landmarks.len() != cfg.landmark_count() {
            return Err(Error::Parameter(format!(
                "{} expects {} agents and {} landmarks, got {} and {}",
                cfg.task,
                cfg.n_agents,
                cfg.landmark_count(),
                positions.len(),
                landmarks.len()
            )));
        }
        let n = cfg.n_agents;
        Ok(Self {
            positions,
            velocities: vec![[0.0; 2]; n],
            landmarks,
            step_index: 0,
            leader_mask: leader_mask(cfg),
            caught_count: 0,
            collisions: 0,
            path_length: vec![0.0; n],
        })
    }

    pub fn n_agents(&self) -> usize {
        self.positions.len()
    }
}

fn leader_mask(cfg: &EnvConfig) -> Vec<bool> {
    (0..cfg.n_agents)
        .map(|i| cfg.task == Task::DynamicPack && i < PACK_LEADERS)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    /// Colliding agent pairs after this step.
    pub collisions: usize,
    pub success: bool,
    /// Per target point, distance to the nearest agent.
    pub min_distances: Vec<f64>,
    pub caught: bool,
    /// Summed agent displacement during this step.
    pub displacement: f64,
    /// Largest agent-to-nearest-target distance.
    pub farthest: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub observations: Vec<Vec<f64>>,
    pub reward: f64,
    pub rewards: Vec<f64>,
    pub done: bool,
    pub info: StepInfo,
}

/// Reward and metric snapshot of a state, without side effects.
#[derive(Clone, Debug, PartialEq)]
pub struct RewardInfo {
    pub reward: f64,
    pub collisions: usize,
    pub success: bool,
    pub min_distances: Vec<f64>,
    pub farthest: f64,
    /// Dynamic Pack: every agent is within ε of the landmark.
    pub catch: bool,
}

fn dist(a: Vec2, b: Vec2) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn uniform_point<R: Rng + ?Sized>(rng: &mut R) -> Vec2 {
    [rng.gen_range(-SPAWN..SPAWN), rng.gen_range(-SPAWN..SPAWN)]
}

pub fn reset<R: Rng + ?Sized>(cfg: &EnvConfig, rng: &mut R) -> Result<(WorldState, Vec<Vec<f64>>)> {
    cfg.validate()?;
    let positions = (0..cfg.n_agents).map(|_| uniform_point(rng)).collect();
    let landmarks = (0..cfg.landmark_count()).map(|_| uniform_point(rng)).collect();
    let state = WorldState::from_layout(cfg, positions, landmarks)?;
    let obs = observations(cfg, &state);
    Ok((state, obs))
}

/// Unit direction of each discrete action.
pub fn action_direction(action: usize) -> Vec2 {
    match action {
        1 => [1.0, 0.0],
        2 => [-1.0, 0.0],
        3 => [0.0, 1.0],
        4 => [0.0, -1.0],
        _ => [0.0, 0.0],
    }
}

/// Index of a strict one-hot vector over the five actions.
pub fn decode_one_hot(agent: usize, action: &[f64]) -> Result<usize> {
    if action.len() != ACTIONS {
        return Err(Error::Action {
            agent,
            reason: format!("expected {ACTIONS} entries, got {}", action.len()),
        });
    }
    let mut hot = None;
    for (k, &a) in action.iter().enumerate() {
        if a == 1.0 {
            if hot.is_some() {
                return Err(Error::Action { agent, reason: "more than one active entry".into() });
            }
            hot = Some(k);
        } else if a != 0.0 {
            return Err(Error::Action { agent, reason: format!("entry {k} is {a}, not 0 or 1") });
        }
    }
    hot.ok_or_else(|| Error::Action { agent, reason: "no active entry".into() })
}

pub fn one_hot(action: usize) -> Vec<f64> {
    let mut v = vec![0.0; ACTIONS];
    v[action] = 1.0;
    v
}

/// Advances the world by one step given one-hot actions.
pub fn step<R: Rng + ?Sized>(
    cfg: &EnvConfig,
    state: &mut WorldState,
    actions: &[Vec<f64>],
    rng: &mut R,
) -> Result<StepResult> {
    let idx = actions
        .iter()
        .enumerate()
        .map(|(i, a)| decode_one_hot(i, a))
        .collect::<Result<Vec<_>>>()?;
    step_indices(cfg, state, &idx, rng)
}

/// Advances the world by one step given action indices.
pub fn step_indices<R: Rng + ?Sized>(
    cfg: &EnvConfig,
    state: &mut WorldState,
    actions: &[usize],
    rng: &mut R,
) -> Result<StepResult> {
    let n = cfg.n_agents;
    if actions.len() != n || state.n_agents() != n {
        return Err(Error::Parameter(format!(
            "step with {} actions for {} agents",
            actions.len(),
            state.n_agents()
        )));
    }
    if let Some(agent) = actions.iter().position(|&a| a >= ACTIONS) {
        return Err(Error::Action { agent, reason: format!("action index {} out of range", actions[agent]) });
    }
    if state.step_index >= cfg.episode_length {
        return Err(Error::Parameter("episode already finished".into()));
    }

    let mut displacement = 0.0;
    for i in 0..n {
        let dir = action_direction(actions[i]);
        let v = &mut state.velocities[i];
        for k in 0..2 {
            v[k] = v[k] * (1.0 - DAMPING) + dir[k] * ACCEL * DT;
        }
        let speed = v[0].hypot(v[1]);
        if speed > MAX_SPEED {
            v[0] *= MAX_SPEED / speed;
            v[1] *= MAX_SPEED / speed;
        }
        let old = state.positions[i];
        let x = &mut state.positions[i];
        for k in 0..2 {
            x[k] = (x[k] + v[k] * DT).clamp(-BOUND, BOUND);
        }
        let moved = dist(old, *x);
        state.path_length[i] += moved;
        displacement += moved;
    }
    state.step_index += 1;

    let mut ri = reward(cfg, state);
    state.collisions += ri.collisions;
    let mut caught = false;
    if cfg.task == Task::DynamicPack && ri.catch {
        ri.reward += cfg.catch_bonus;
        state.landmarks[0] = uniform_point(rng);
        state.caught_count += 1;
        caught = true;
    }

    Ok(StepResult {
        observations: observations(cfg, state),
        reward: ri.reward,
        rewards: vec![ri.reward; n],
        done: state.step_index >= cfg.episode_length,
        info: StepInfo {
            collisions: ri.collisions,
            success: ri.success,
            min_distances: ri.min_distances,
            caught,
            displacement,
            farthest: ri.farthest,
        },
    })
}

/// Points the agents are asked to cover.
pub fn target_points(cfg: &EnvConfig, state: &WorldState) -> Vec<Vec2> {
    let n = cfg.n_agents;
    match cfg.task {
        Task::Navigation | Task::DynamicPack => state.landmarks.clone(),
        Task::Formation => {
            let c = state.landmarks[0];
            (0..n)
                .map(|k| {
                    let a = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                    [c[0] + FORMATION_RADIUS * a.cos(), c[1] + FORMATION_RADIUS * a.sin()]
                })
                .collect()
        }
        Task::Line => {
            let (a, b) = (state.landmarks[0], state.landmarks[1]);
            (0..n)
                .map(|k| {
                    let t = if n == 1 { 0.5 } else { k as f64 / (n - 1) as f64 };
                    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
                })
                .collect()
        }
    }
}

pub fn count_collisions(cfg: &EnvConfig, positions: &[Vec2]) -> usize {
    let limit = 2.0 * cfg.agent_radius;
    let mut count = 0;
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            if dist(positions[i], positions[j]) < limit {
                count += 1;
            }
        }
    }
    count
}

pub fn reward(cfg: &EnvConfig, state: &WorldState) -> RewardInfo {
    let eps = cfg.success_epsilon;
    let targets = target_points(cfg, state);
    let nearest = |t: Vec2| state.positions.iter().map(|&x| dist(x, t)).fold(f64::INFINITY, f64::min);
    let min_distances: Vec<f64> = targets.iter().map(|&t| nearest(t)).collect();
    let collisions = count_collisions(cfg, &state.positions);
    let farthest = state
        .positions
        .iter()
        .map(|&x| targets.iter().map(|&t| dist(x, t)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    let covered = min_distances.iter().all(|&d| d < eps);

    let (reward, success, catch) = match cfg.task {
        Task::Navigation => (
            -min_distances.iter().sum::<f64>() - collisions as f64,
            covered && collisions == 0,
            false,
        ),
        Task::Formation | Task::Line => (-min_distances.iter().sum::<f64>(), covered, false),
        Task::DynamicPack => {
            let l = state.landmarks[0];
            let d: Vec<f64> = state.positions.iter().map(|&x| dist(x, l)).collect();
            let catch = d.iter().all(|&v| v < eps);
            (-d.iter().sum::<f64>(), catch, catch)
        }
    };
    RewardInfo {
        reward,
        collisions,
        success,
        min_distances,
        farthest,
        catch,
    }
}

/// Raw per-task observation; Dynamic Pack members see only themselves.
pub fn observe(cfg: &EnvConfig, state: &WorldState, agent: usize) -> Vec<f64> {
    let x = state.positions[agent];
    let v = state.velocities[agent];
    let mut o = vec![x[0], x[1], v[0], v[1]];
    let rel = |o: &mut Vec<f64>, p: Vec2| {
        o.push(p[0] - x[0]);
        o.push(p[1] - x[1]);
    };
    match cfg.task {
        Task::Navigation => {
            for &l in &state.landmarks {
                rel(&mut o, l);
            }
            for (j, &p) in state.positions.iter().enumerate() {
                if j != agent {
                    rel(&mut o, p);
                }
            }
        }
        Task::Formation | Task::Line => {
            for &l in &state.landmarks {
                rel(&mut o, l);
            }
        }
        Task::DynamicPack => {
            if state.leader_mask[agent] {
                rel(&mut o, state.landmarks[0]);
            }
        }
    }
    o
}

/// Fixed-width observation used by the networks. Identical to [`observe`]
/// except in Dynamic Pack, where it is padded to six values and a role flag is appended.
pub fn network_observation(cfg: &EnvConfig, state: &WorldState, agent: usize) -> Vec<f64> {
    let mut o = observe(cfg, state, agent);
    if cfg.task == Task::DynamicPack {
        o.resize(6, 0.0);
        o.push(if state.leader_mask[agent] { 1.0 } else { 0.0 });
    }
    o
}

pub fn observations(cfg: &EnvConfig, state: &WorldState) -> Vec<Vec<f64>> {
    (0..cfg.n_agents).map(|i| network_observation(cfg, state, i)).collect()
}
