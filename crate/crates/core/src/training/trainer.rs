use std::fs::File;
use std::path::Path;
use std::time::Instant;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::TrainConfig;
use super::logs::{EpisodeRow, EvalLogRow, EvalRow, MetricSummary};
use super::replay::{ReplayBuffer, Transition};
use crate::critic::{td_target, Critic, TargetPair};
use crate::diffcore::{clip_global_norm, gumbel_softmax, AdamState, ParamStore, Tape};
use crate::envs::{episode_metrics, Env, EnvConfig, EpisodeMetrics, EpisodeTrace};
use crate::error::{Error, Result};
use crate::policy::{act, Actor, Checkpoint, Mode};

const POLICY_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;
const EVAL_STREAM: u64 = 0x5851_f42d_4c95_7f2d;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct UpdateReport {
    /// Set when the buffer held fewer transitions than one minibatch.
    pub skipped: bool,
    pub critic_loss: f64,
    pub actor_loss: f64,
    /// Pre-clipping global gradient norms.
    pub critic_grad_norm: f64,
    pub actor_grad_norm: f64,
}

#[derive(Clone, Debug)]
pub struct EpisodeOutcome {
    pub trace: EpisodeTrace,
    pub metrics: EpisodeMetrics,
    pub transitions: usize,
    pub updates: Vec<UpdateReport>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub episodes: Vec<EpisodeMetrics>,
    /// `(episode, mean evaluation reward)` for every periodic evaluation.
    pub evaluations: Vec<(usize, f64)>,
    pub best_eval_reward: Option<f64>,
    pub updates: u64,
    pub best_actor: ParamStore,
    pub final_eval: Vec<EpisodeMetrics>,
}

fn flatten(rows: &[Vec<f64>]) -> Vec<f64> {
    rows.iter().flatten().copied().collect()
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    Ok(csv::Writer::from_path(path)?)
}

/// Eval-mode rollouts of `actor` on fresh episodes seeded from `seed`.
pub fn evaluate<A: Actor>(actor: &A, env_cfg: &EnvConfig, episodes: usize, seed: u64) -> Result<Vec<EpisodeMetrics>> {
    let width = env_cfg.observation_width();
    if width != actor.obs_width() {
        return Err(Error::Parameter(format!(
            "{} with {} agents has observation width {width}, actor expects {}",
            env_cfg.task,
            env_cfg.n_agents,
            actor.obs_width()
        )));
    }
    actor.check_agents(env_cfg.n_agents)?;
    let mut env = Env::new(EnvConfig { seed, ..env_cfg.clone() })?;
    let mut unused = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut obs = env.reset()?;
        let mut trace = EpisodeTrace::new(env.cfg.episode_length);
        loop {
            let (actions, _) = act(actor, &obs, Mode::Eval, 1.0, &mut unused)?;
            let res = env.step(&actions)?;
            trace.push(res.reward, res.info);
            obs = res.observations;
            if res.done {
                break;
            }
        }
        trace.finish(&env.state);
        out.push(episode_metrics(&trace));
    }
    Ok(out)
}

/// Centralised training with decentralised execution for one seed.
pub struct Trainer<A: Actor, C: Critic> {
    pub env_cfg: EnvConfig,
    pub cfg: TrainConfig,
    pub nets: TargetPair<A, C>,
    pub buffer: ReplayBuffer,
    actor_opt: AdamState,
    critic_opt: AdamState,
    env: Env,
    rng: ChaCha8Rng,
    since_update: usize,
    updates: u64,
}

impl<A: Actor, C: Critic> Trainer<A, C> {
    pub fn new(env_cfg: EnvConfig, cfg: TrainConfig, actor: A, critic: C) -> Result<Self> {
        cfg.validate()?;
        let mut env_cfg = env_cfg;
        env_cfg.seed = cfg.seed;
        if let Some(t) = cfg.episode_length {
            env_cfg.episode_length = t;
        }
        env_cfg.validate()?;
        let width = env_cfg.observation_width();
        if actor.obs_width() != width {
            return Err(Error::Parameter(format!(
                "actor expects observation width {}, {} gives {width}",
                actor.obs_width(),
                env_cfg.task
            )));
        }
        actor.check_agents(env_cfg.n_agents)?;
        let buffer = ReplayBuffer::new(cfg.buffer_capacity, env_cfg.n_agents, width)?;
        let actor_opt = AdamState::new(actor.params(), cfg.lr_actor);
        let critic_opt = AdamState::new(critic.params(), cfg.lr_critic);
        let env = Env::new(env_cfg.clone())?;
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ POLICY_STREAM);
        let nets = TargetPair::new(actor, critic, cfg.tau);
        Ok(Self {
            env_cfg,
            cfg,
            nets,
            buffer,
            actor_opt,
            critic_opt,
            env,
            rng,
            since_update: 0,
            updates: 0,
        })
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// One training episode with exploration; stores every transition and
    /// runs an update after each `update_every` new samples.
    pub fn collect_episode(&mut self) -> Result<EpisodeOutcome> {
        let mut obs = self.env.reset()?;
        let mut trace = EpisodeTrace::new(self.env_cfg.episode_length);
        let mut updates = Vec::new();
        let mut transitions = 0;
        loop {
            let (actions, _) = act(&self.nets.actor, &obs, Mode::Train, self.cfg.temperature, &mut self.rng)?;
            let res = self.env.step(&actions)?;
            self.buffer.push(Transition {
                obs: flatten(&obs),
                actions,
                reward: res.reward,
                next_obs: flatten(&res.observations),
            })?;
            transitions += 1;
            trace.push(res.reward, res.info);
            obs = res.observations;
            self.since_update += 1;
            if self.since_update >= self.cfg.update_every {
                self.since_update = 0;
                updates.push(self.update_step()?);
            }
            if res.done {
                break;
            }
        }
        trace.finish(&self.env.state);
        let metrics = episode_metrics(&trace);
        Ok(EpisodeOutcome {
            trace,
            metrics,
            transitions,
            updates,
        })
    }

    /// One critic step, one actor step, one soft update of both targets.
    pub fn update_step(&mut self) -> Result<UpdateReport> {
        if self.buffer.len() < self.cfg.batch_size {
            return Ok(UpdateReport {
                skipped: true,
                ..UpdateReport::default()
            });
        }
        let n = self.env_cfg.n_agents;
        let batch = self.buffer.sample(self.cfg.batch_size, &mut self.rng)?;
        let temp = self.cfg.temperature;

        let y = {
            let mut tape = Tape::new();
            let ab = tape.bind(self.nets.target_actor.params(), false);
            let logits = self.nets.target_actor.logits(&mut tape, &ab, &batch.next_obs, n)?;
            let next = gumbel_softmax(&mut tape, logits, temp, false, &mut self.rng)?;
            let cb = tape.bind(self.nets.target_critic.params(), false);
            let q = self.nets.target_critic.q(&mut tape, &cb, &batch.next_obs, next, n)?;
            td_target(&batch.rewards, self.cfg.gamma, tape.value(q))?
        };

        let (critic_loss, critic_grad_norm) = {
            let mut tape = Tape::new();
            let cb = tape.bind(self.nets.critic.params(), true);
            let a = tape.constant(batch.actions.clone());
            let q = self.nets.critic.q(&mut tape, &cb, &batch.obs, a, n)?;
            let target = tape.constant(broadcast_cols(&y, tape.shape(q)[1]));
            let d = tape.sub(q, target)?;
            let sq = tape.mul(d, d)?;
            let loss = tape.mean(sq);
            tape.backward(loss)?;
            let mut g = tape.grads(&cb);
            let norm = clip_global_norm(&mut g, self.cfg.grad_clip);
            self.critic_opt.step(self.nets.critic.params_mut(), &g)?;
            (tape.value(loss)[[0, 0]], norm)
        };

        let (actor_loss, actor_grad_norm) = {
            let mut tape = Tape::new();
            let ab = tape.bind(self.nets.actor.params(), true);
            let logits = self.nets.actor.logits(&mut tape, &ab, &batch.obs, n)?;
            let soft = gumbel_softmax(&mut tape, logits, temp, false, &mut self.rng)?;
            let cb = tape.bind(self.nets.critic.params(), false);
            let q = self.nets.critic.q(&mut tape, &cb, &batch.obs, soft, n)?;
            let mean_q = tape.mean(q);
            let loss = tape.neg(mean_q)?;
            tape.backward(loss)?;
            let mut g = tape.grads(&ab);
            let norm = clip_global_norm(&mut g, self.cfg.grad_clip);
            self.actor_opt.step(self.nets.actor.params_mut(), &g)?;
            (tape.value(loss)[[0, 0]], norm)
        };

        self.nets.soft_update()?;
        self.updates += 1;
        if !critic_grad_norm.is_finite() || !actor_grad_norm.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite gradient norm at update {} (critic {critic_grad_norm}, actor {actor_grad_norm})",
                self.updates
            )));
        }
        Ok(UpdateReport {
            skipped: false,
            critic_loss,
            actor_loss,
            critic_grad_norm,
            actor_grad_norm,
        })
    }

    /// Live actor and critic with run metadata.
    pub fn checkpoint(&self, algorithm: &str, actor: &ParamStore) -> Checkpoint {
        Checkpoint::new()
            .with_meta("algorithm", algorithm)
            .with_meta("task", self.env_cfg.task)
            .with_meta("agents", self.env_cfg.n_agents)
            .with_meta("episode_length", self.env_cfg.episode_length)
            .with_meta("obs_width", self.env_cfg.observation_width())
            .with_meta("seed", self.cfg.seed)
            .with_meta("grid_points", self.cfg.grid_points)
            .with_meta("grid_spacing", self.cfg.grid_spacing)
            .with_meta("delta", self.cfg.delta)
            .with_meta("updates", self.updates)
            .with_group("actor", actor)
            .with_group("critic", self.nets.critic.params())
    }

    /// Full training run. With `out`, writes `metrics.csv`, `eval_log.csv`,
    /// `checkpoint_best.txt`, `checkpoint_last.txt` and `eval_episodes.csv`.
    pub fn run(&mut self, algorithm: &str, out: Option<&Path>) -> Result<TrainOutcome> {
        let start = Instant::now();
        if let Some(d) = out {
            std::fs::create_dir_all(d)?;
        }
        let mut metrics_csv = out.map(|d| csv_writer(&d.join("metrics.csv"))).transpose()?;
        let mut eval_csv = out.map(|d| csv_writer(&d.join("eval_log.csv"))).transpose()?;
        let mut episodes = Vec::with_capacity(self.cfg.episodes);
        let mut evaluations = Vec::new();
        let mut best: Option<(f64, ParamStore)> = None;

        for ep in 1..=self.cfg.episodes {
            let outcome = self.collect_episode()?;
            if let Some(w) = metrics_csv.as_mut() {
                w.serialize(EpisodeRow::new(ep, &outcome.metrics, start.elapsed().as_secs_f64()))?;
                w.flush()?;
            }
            episodes.push(outcome.metrics);

            let due = ep % self.cfg.eval_every == 0 || ep == self.cfg.episodes;
            if due && self.cfg.eval_episodes > 0 {
                let seed = self.cfg.seed ^ EVAL_STREAM ^ ep as u64;
                let runs = evaluate(&self.nets.actor, &self.env_cfg, self.cfg.eval_episodes, seed)?;
                let summary = MetricSummary::of(&runs);
                let improved = best.as_ref().map_or(true, |(b, _)| summary.reward.mean > *b);
                if improved {
                    best = Some((summary.reward.mean, self.nets.actor.params().clone()));
                    if let Some(d) = out {
                        self.checkpoint(algorithm, self.nets.actor.params())
                            .with_meta("episode", ep)
                            .with_meta("eval_reward", summary.reward.mean)
                            .save(&d.join("checkpoint_best.txt"))?;
                    }
                }
                log::info!(
                    "{} seed {} episode {ep}: eval reward {:.3} success {:.2}{}",
                    self.env_cfg.task,
                    self.cfg.seed,
                    summary.reward.mean,
                    summary.success.mean,
                    if improved { " (best)" } else { "" }
                );
                if let Some(w) = eval_csv.as_mut() {
                    w.serialize(EvalLogRow {
                        episode: ep,
                        mean_reward: summary.reward.mean,
                        success_rate: summary.success.mean,
                        best: improved as u8,
                    })?;
                    w.flush()?;
                }
                evaluations.push((ep, summary.reward.mean));
            }
        }

        if let Some(d) = out {
            self.checkpoint(algorithm, self.nets.actor.params())
                .with_meta("episode", self.cfg.episodes)
                .save(&d.join("checkpoint_last.txt"))?;
            if best.is_none() {
                self.checkpoint(algorithm, self.nets.actor.params())
                    .with_meta("episode", self.cfg.episodes)
                    .save(&d.join("checkpoint_best.txt"))?;
            }
        }

        let best_eval_reward = best.as_ref().map(|(r, _)| *r);
        let best_actor = best.map_or_else(|| self.nets.actor.params().clone(), |(_, p)| p);
        let mut final_eval = Vec::new();
        if self.cfg.final_eval_episodes > 0 {
            let mut actor = self.nets.actor.clone();
            actor.params_mut().load_from(&best_actor)?;
            final_eval = evaluate(&actor, &self.env_cfg, self.cfg.final_eval_episodes, self.cfg.seed ^ EVAL_STREAM)?;
            if let Some(d) = out {
                write_eval_rows(&d.join("eval_episodes.csv"), self.env_cfg.n_agents, &final_eval)?;
            }
        }
        Ok(TrainOutcome {
            episodes,
            evaluations,
            best_eval_reward,
            updates: self.updates,
            best_actor,
            final_eval,
        })
    }
}

fn broadcast_cols(y: &Array2<f64>, cols: usize) -> Array2<f64> {
    if y.ncols() == cols {
        return y.clone();
    }
    Array2::from_shape_fn((y.nrows(), cols), |(i, _)| y[[i, 0]])
}

pub fn write_eval_rows(path: &Path, agents: usize, runs: &[EpisodeMetrics]) -> Result<()> {
    let mut w = csv_writer(path)?;
    for (i, m) in runs.iter().enumerate() {
        w.serialize(EvalRow::new(i + 1, agents, m))?;
    }
    w.flush()?;
    Ok(())
}
