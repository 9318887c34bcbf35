//! Centralised recurrent critic and target-network bookkeeping.

use ndarray::Array2;
use rand::Rng;

use crate::diffcore::{Activation, Bound, Linear, LstmCell, Mlp, ParamStore, Tape, Var};
use crate::envs::ACTIONS;
use crate::error::{Error, Result};
use crate::policy::{Actor, HIDDEN};

/// Reward discount.
pub const GAMMA: f64 = 0.95;
/// Target mixing rate.
pub const TAU: f64 = 0.01;

/// Any critic trained by the shared loop.
pub trait Critic: Clone + Send + Sync {
    fn params(&self) -> &ParamStore;
    fn params_mut(&mut self) -> &mut ParamStore;

    /// Q-values `batch × k` for `batch` joint observations (rows `b·n + agent`)
    /// and matching actions; `k` is 1 for a centralised critic.
    fn q(&self, tape: &mut Tape, bound: &Bound, obs: &Array2<f64>, actions: Var, n: usize) -> Result<Var>;
}

pub(crate) fn check_inputs(tape: &Tape, obs: &Array2<f64>, actions: Var, n: usize, width: usize) -> Result<usize> {
    let sa = tape.shape(actions);
    if n == 0 || obs.nrows() % n != 0 || obs.ncols() != width || sa != [obs.nrows(), ACTIONS] {
        return Err(Error::Shape {
            op: "critic inputs",
            left: vec![obs.nrows(), width, ACTIONS],
            right: vec![sa[0], obs.ncols(), sa[1]],
        });
    }
    Ok(obs.nrows() / n)
}

/// Row indices of agent `i` in every sample of a stacked batch.
pub(crate) fn agent_rows(batch: usize, n: usize, i: usize) -> Vec<usize> {
    (0..batch).map(|b| b * n + i).collect()
}

/// `(o_i, a_i)` pairs embedded and folded by an LSTM in agent-index order;
/// the last hidden state feeds the Q head.
#[derive(Clone, Debug, PartialEq)]
pub struct RecurrentCritic {
    pub params: ParamStore,
    embed: Linear,
    lstm: LstmCell,
    head: Mlp,
    obs_width: usize,
}

impl RecurrentCritic {
    pub fn new<R: Rng>(obs_width: usize, rng: &mut R) -> Self {
        let mut params = ParamStore::new();
        let embed = Linear::new(&mut params, "critic.embed", obs_width + ACTIONS, HIDDEN, rng);
        let lstm = LstmCell::new(&mut params, "critic.lstm", HIDDEN, HIDDEN, rng);
        let head = Mlp::new(&mut params, "critic.q", &[HIDDEN, HIDDEN, HIDDEN, 1], Activation::Identity, rng);
        Self {
            params,
            embed,
            lstm,
            head,
            obs_width,
        }
    }

    /// Q for one joint observation and one-hot joint action.
    pub fn q_value(&self, obs: &Array2<f64>, actions: &Array2<f64>) -> Result<f64> {
        let mut tape = Tape::new();
        let bound = tape.bind(&self.params, false);
        let a = tape.constant(actions.clone());
        let q = self.q(&mut tape, &bound, obs, a, obs.nrows())?;
        Ok(tape.value(q)[[0, 0]])
    }
}

impl Critic for RecurrentCritic {
    fn params(&self) -> &ParamStore {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    fn q(&self, tape: &mut Tape, bound: &Bound, obs: &Array2<f64>, actions: Var, n: usize) -> Result<Var> {
        let batch = check_inputs(tape, obs, actions, n, self.obs_width)?;
        let o = tape.constant(obs.clone());
        let x = tape.concat_cols(&[o, actions])?;
        let e = self.embed.forward(tape, bound, x)?;
        let mut h = tape.constant(Array2::zeros((batch, HIDDEN)));
        let mut c = tape.constant(Array2::zeros((batch, HIDDEN)));
        for i in 0..n {
            let xi = tape.gather_rows(e, agent_rows(batch, n, i))?;
            (h, c) = self.lstm.forward(tape, bound, xi, h, c)?;
        }
        self.head.forward(tape, bound, h)
    }
}

/// `y = r + γ·q_next`, row-broadcast over the critic's output columns.
pub fn td_target(rewards: &Array2<f64>, gamma: f64, q_next: &Array2<f64>) -> Result<Array2<f64>> {
    if rewards.ncols() != 1 || rewards.nrows() != q_next.nrows() {
        return Err(Error::Shape {
            op: "td_target",
            left: vec![rewards.nrows(), rewards.ncols()],
            right: vec![q_next.nrows(), q_next.ncols()],
        });
    }
    Ok(q_next * gamma + rewards)
}

/// Live and target copies of an actor and a critic.
#[derive(Clone, Debug)]
pub struct TargetPair<A, C> {
    pub actor: A,
    pub critic: C,
    pub target_actor: A,
    pub target_critic: C,
    pub tau: f64,
    soft_updates: u64,
}

impl<A: Actor, C: Critic> TargetPair<A, C> {
    /// Targets start as exact copies of the live networks.
    pub fn new(actor: A, critic: C, tau: f64) -> Self {
        Self {
            target_actor: actor.clone(),
            target_critic: critic.clone(),
            actor,
            critic,
            tau,
            soft_updates: 0,
        }
    }

    /// `θ' ← τθ + (1−τ)θ'` for both target networks.
    pub fn soft_update(&mut self) -> Result<()> {
        self.target_actor.params_mut().soft_update_from(self.actor.params(), self.tau)?;
        self.target_critic.params_mut().soft_update_from(self.critic.params(), self.tau)?;
        self.soft_updates += 1;
        Ok(())
    }

    pub fn soft_updates(&self) -> u64 {
        self.soft_updates
    }
}
