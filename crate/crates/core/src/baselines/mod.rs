//! Ablation agents: independent DDPG, observation pooling (mean of all
//! others or of the two nearest), and CDC paired with a feed-forward critic.
//! All of them plug into the same [`Trainer`](crate::training::Trainer).

use std::fmt;
use std::str::FromStr;

use ndarray::{s, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::critic::{agent_rows, check_inputs, Critic, RecurrentCritic};
use crate::diffcore::{Activation, Bound, Mlp, ParamStore, Tape, Var};
use crate::envs::ACTIONS;
use crate::error::{Error, Result};
use crate::policy::{check_obs, Actor, CdcActor, Checkpoint, HIDDEN};
use crate::spectral::{HeatConfig, TimeGrid};

/// Number of neighbours pooled by [`Pooling::Nearest`].
pub const NEIGHBOURS: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BaselineKind {
    IndependentDDPG,
    AverageObs,
    NearestNeighbourObs,
    CdcFeedForwardCritic,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 4] = [
        BaselineKind::IndependentDDPG,
        BaselineKind::AverageObs,
        BaselineKind::NearestNeighbourObs,
        BaselineKind::CdcFeedForwardCritic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::IndependentDDPG => "independent-ddpg",
            BaselineKind::AverageObs => "average-obs",
            BaselineKind::NearestNeighbourObs => "nearest-neighbour-obs",
            BaselineKind::CdcFeedForwardCritic => "cdc-ff-critic",
        }
    }
}

/// Every trainable algorithm: CDC itself or one of the baselines.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Cdc,
    Baseline(BaselineKind),
}

impl Algorithm {
    pub fn all() -> Vec<Algorithm> {
        std::iter::once(Algorithm::Cdc)
            .chain(BaselineKind::ALL.map(Algorithm::Baseline))
            .collect()
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Cdc => "cdc",
            Algorithm::Baseline(k) => k.name(),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Algorithm::all().into_iter().find(|a| a.name() == key).ok_or_else(|| {
            let valid: Vec<&str> = Algorithm::all().iter().map(|a| a.name()).collect();
            Error::Usage(format!("unknown algorithm `{s}` (valid: {})", valid.join(", ")))
        })
    }
}

fn stack_agents(tape: &mut Tape, per_agent: &[Var], batch: usize) -> Result<Var> {
    let n = per_agent.len();
    let stacked = tape.concat_rows(per_agent)?;
    let order = (0..batch).flat_map(|b| (0..n).map(move |i| i * batch + b)).collect();
    tape.gather_rows(stacked, order)
}

/// One unshared two-hidden-layer network per agent, each seeing only its own observation.
#[derive(Clone, Debug, PartialEq)]
pub struct IndependentActor {
    pub params: ParamStore,
    nets: Vec<Mlp>,
    obs_width: usize,
}

impl IndependentActor {
    pub fn new<R: Rng>(obs_width: usize, n_agents: usize, rng: &mut R) -> Self {
        let mut params = ParamStore::new();
        let nets = (0..n_agents)
            .map(|i| {
                Mlp::new(
                    &mut params,
                    &format!("ddpg.agent{i}"),
                    &[obs_width, HIDDEN, HIDDEN, ACTIONS],
                    Activation::Identity,
                    rng,
                )
            })
            .collect();
        Self { params, nets, obs_width }
    }

    pub fn n_agents(&self) -> usize {
        self.nets.len()
    }
}

impl Actor for IndependentActor {
    fn algorithm(&self) -> &'static str {
        BaselineKind::IndependentDDPG.name()
    }

    fn params(&self) -> &ParamStore {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    fn obs_width(&self) -> usize {
        self.obs_width
    }

    fn logits(&self, tape: &mut Tape, bound: &Bound, obs: &Array2<f64>, n: usize) -> Result<Var> {
        self.check_agents(n)?;
        let batch = check_obs(obs, n, self.obs_width)?;
        let x = tape.constant(obs.clone());
        let mut outs = Vec::with_capacity(n);
        for (i, net) in self.nets.iter().enumerate() {
            let xi = tape.gather_rows(x, agent_rows(batch, n, i))?;
            outs.push(net.forward(tape, bound, xi)?);
        }
        stack_agents(tape, &outs, batch)
    }

    fn check_agents(&self, n: usize) -> Result<()> {
        if n != self.nets.len() {
            return Err(Error::Parameter(format!(
                "independent actor has {} agent networks, asked to act for {n}",
                self.nets.len()
            )));
        }
        Ok(())
    }
}

/// What an agent pools from the others before acting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pooling {
    /// Mean over all other agents.
    Average,
    /// Mean over the [`NEIGHBOURS`] Euclidean-nearest agents.
    Nearest,
}

/// `[o_u, pooled_u]` rows for a stacked batch.
#[derive(Clone, Debug, PartialEq)]
pub struct PooledObs {
    pub inputs: Array2<f64>,
    /// Set when some agent had fewer candidates than the pooling rule asks
    /// for and fell back to every agent available (itself when alone).
    pub fallback: bool,
}

/// Indices of the `k` agents nearest to `u` (ties broken by index), excluding `u`.
pub fn nearest_neighbours(positions: &[[f64; 2]], u: usize, k: usize) -> Vec<usize> {
    let d2 = |j: usize| {
        let dx = positions[j][0] - positions[u][0];
        let dy = positions[j][1] - positions[u][1];
        dx * dx + dy * dy
    };
    let mut others: Vec<usize> = (0..positions.len()).filter(|&j| j != u).collect();
    others.sort_by(|&a, &b| d2(a).total_cmp(&d2(b)).then(a.cmp(&b)));
    others.truncate(k);
    others
}

/// Builds pooled policy inputs. Positions are the first two observation columns.
pub fn pool_observations(pooling: Pooling, obs: &Array2<f64>, n: usize) -> Result<PooledObs> {
    let w = obs.ncols();
    if n == 0 || obs.nrows() % n != 0 || w < 2 {
        return Err(Error::Shape {
            op: "pool_observations",
            left: vec![n, 2],
            right: vec![obs.nrows(), w],
        });
    }
    let batch = obs.nrows() / n;
    let mut inputs = Array2::zeros((obs.nrows(), 2 * w));
    let mut fallback = false;
    for b in 0..batch {
        let rows = obs.slice(s![b * n..(b + 1) * n, ..]);
        let positions: Vec<[f64; 2]> = rows.outer_iter().map(|r| [r[0], r[1]]).collect();
        for u in 0..n {
            let mut pool: Vec<usize> = match pooling {
                Pooling::Average => (0..n).filter(|&j| j != u).collect(),
                Pooling::Nearest => nearest_neighbours(&positions, u, NEIGHBOURS),
            };
            let wanted = match pooling {
                Pooling::Average => 1,
                Pooling::Nearest => NEIGHBOURS,
            };
            if pool.len() < wanted {
                fallback = true;
            }
            if pool.is_empty() {
                pool.push(u);
            }
            let mut out = inputs.row_mut(b * n + u);
            out.slice_mut(s![..w]).assign(&rows.row(u));
            let scale = 1.0 / pool.len() as f64;
            for &j in &pool {
                out.slice_mut(s![w..]).scaled_add(scale, &rows.row(j));
            }
        }
    }
    if fallback {
        log::debug!("{pooling:?} pooling with {n} agents fell back to all available neighbours");
    }
    Ok(PooledObs { inputs, fallback })
}

/// Shared policy over `[own observation, pooled observation of others]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PooledObsActor {
    pub params: ParamStore,
    head: Mlp,
    obs_width: usize,
    pub pooling: Pooling,
}

impl PooledObsActor {
    pub fn new<R: Rng>(obs_width: usize, pooling: Pooling, rng: &mut R) -> Self {
        let mut params = ParamStore::new();
        let head = Mlp::new(
            &mut params,
            "pooled.policy",
            &[2 * obs_width, HIDDEN, HIDDEN, ACTIONS],
            Activation::Identity,
            rng,
        );
        Self {
            params,
            head,
            obs_width,
            pooling,
        }
    }
}

impl Actor for PooledObsActor {
    fn algorithm(&self) -> &'static str {
        match self.pooling {
            Pooling::Average => BaselineKind::AverageObs.name(),
            Pooling::Nearest => BaselineKind::NearestNeighbourObs.name(),
        }
    }

    fn params(&self) -> &ParamStore {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    fn obs_width(&self) -> usize {
        self.obs_width
    }

    fn logits(&self, tape: &mut Tape, bound: &Bound, obs: &Array2<f64>, n: usize) -> Result<Var> {
        check_obs(obs, n, self.obs_width)?;
        let pooled = pool_observations(self.pooling, obs, n)?;
        let x = tape.constant(pooled.inputs);
        self.head.forward(tape, bound, x)
    }
}

/// One critic per agent over its own observation and action; output `batch × n`.
#[derive(Clone, Debug, PartialEq)]
pub struct IndependentCritic {
    pub params: ParamStore,
    nets: Vec<Mlp>,
    obs_width: usize,
}

impl IndependentCritic {
    pub fn new<R: Rng>(obs_width: usize, n_agents: usize, rng: &mut R) -> Self {
        let mut params = ParamStore::new();
        let nets = (0..n_agents)
            .map(|i| {
                Mlp::new(
                    &mut params,
                    &format!("ddpg.critic{i}"),
                    &[obs_width + ACTIONS, HIDDEN, HIDDEN, 1],
                    Activation::Identity,
                    rng,
                )
            })
            .collect();
        Self { params, nets, obs_width }
    }
}

impl Critic for IndependentCritic {
    fn params(&self) -> &ParamStore {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    fn q(&self, tape: &mut Tape, bound: &Bound, obs: &Array2<f64>, actions: Var, n: usize) -> Result<Var> {
        let batch = check_inputs(tape, obs, actions, n, self.obs_width)?;
        if n != self.nets.len() {
            return Err(Error::Parameter(format!("critic built for {} agents, got {n}", self.nets.len())));
        }
        let o = tape.constant(obs.clone());
        let mut cols = Vec::with_capacity(n);
        for (i, net) in self.nets.iter().enumerate() {
            let rows = agent_rows(batch, n, i);
            let oi = tape.gather_rows(o, rows.clone())?;
            let ai = tape.gather_rows(actions, rows)?;
            let x = tape.concat_cols(&[oi, ai])?;
            cols.push(net.forward(tape, bound, x)?);
        }
        tape.concat_cols(&cols)
    }
}

/// Centralised critic over all observations and actions concatenated in agent order.
#[derive(Clone, Debug, PartialEq)]
pub struct FeedForwardCritic {
    pub params: ParamStore,
    net: Mlp,
    obs_width: usize,
    n_agents: usize,
}

impl FeedForwardCritic {
    pub fn new<R: Rng>(obs_width: usize, n_agents: usize, rng: &mut R) -> Self {
        let mut params = ParamStore::new();
        let net = Mlp::new(
            &mut params,
            "ff_critic",
            &[Self::input_width(obs_width, n_agents), HIDDEN, HIDDEN, 1],
            Activation::Identity,
            rng,
        );
        Self {
            params,
            net,
            obs_width,
            n_agents,
        }
    }

    pub fn input_width(obs_width: usize, n_agents: usize) -> usize {
        n_agents * (obs_width + ACTIONS)
    }
}

impl Critic for FeedForwardCritic {
    fn params(&self) -> &ParamStore {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    fn q(&self, tape: &mut Tape, bound: &Bound, obs: &Array2<f64>, actions: Var, n: usize) -> Result<Var> {
        let batch = check_inputs(tape, obs, actions, n, self.obs_width)?;
        if n != self.n_agents {
            return Err(Error::Shape {
                op: "feed-forward critic",
                left: vec![Self::input_width(self.obs_width, self.n_agents)],
                right: vec![Self::input_width(self.obs_width, n)],
            });
        }
        let o = tape.constant(obs.clone());
        let mut parts = Vec::with_capacity(2 * n);
        for i in 0..n {
            let rows = agent_rows(batch, n, i);
            parts.push(tape.gather_rows(o, rows.clone())?);
            parts.push(tape.gather_rows(actions, rows)?);
        }
        let x = tape.concat_cols(&parts)?;
        self.net.forward(tape, bound, x)
    }
}

/// Any trained actor, as restored from a checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub enum AgentPolicy {
    Cdc(CdcActor),
    Independent(IndependentActor),
    Pooled(PooledObsActor),
}

impl AgentPolicy {
    /// Fresh actor for `algorithm`.
    pub fn build<R: Rng>(
        algorithm: Algorithm,
        obs_width: usize,
        n_agents: usize,
        heat: HeatConfig,
        rng: &mut R,
    ) -> Self {
        use BaselineKind::*;
        match algorithm {
            Algorithm::Cdc | Algorithm::Baseline(CdcFeedForwardCritic) => {
                AgentPolicy::Cdc(CdcActor::new(obs_width, heat, rng))
            }
            Algorithm::Baseline(IndependentDDPG) => {
                AgentPolicy::Independent(IndependentActor::new(obs_width, n_agents, rng))
            }
            Algorithm::Baseline(AverageObs) => {
                AgentPolicy::Pooled(PooledObsActor::new(obs_width, Pooling::Average, rng))
            }
            Algorithm::Baseline(NearestNeighbourObs) => {
                AgentPolicy::Pooled(PooledObsActor::new(obs_width, Pooling::Nearest, rng))
            }
        }
    }

    /// Rebuilds the actor described by a checkpoint's metadata and loads its weights.
    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        fn num<T: FromStr>(ck: &Checkpoint, key: &str) -> Result<T> {
            let v = ck.meta(key)?;
            v.parse()
                .map_err(|_| Error::Parameter(format!("checkpoint field `{key}` has bad value `{v}`")))
        }
        let algorithm: Algorithm = ck.meta("algorithm")?.parse()?;
        let heat = HeatConfig {
            grid: TimeGrid::new(num(ck, "grid_spacing")?, num(ck, "grid_points")?)?,
            delta: num(ck, "delta")?,
        };
        let mut policy = Self::build(
            algorithm,
            num(ck, "obs_width")?,
            num(ck, "agents")?,
            heat,
            &mut ChaCha8Rng::seed_from_u64(0),
        );
        let stored = ck
            .group("actor")
            .ok_or_else(|| Error::Parameter("checkpoint has no actor group".into()))?;
        policy.params_mut().load_from(stored)?;
        Ok(policy)
    }

    pub fn as_cdc(&self) -> Option<&CdcActor> {
        match self {
            AgentPolicy::Cdc(a) => Some(a),
            _ => None,
        }
    }
}

impl Actor for AgentPolicy {
    fn algorithm(&self) -> &'static str {
        match self {
            AgentPolicy::Cdc(a) => a.algorithm(),
            AgentPolicy::Independent(a) => a.algorithm(),
            AgentPolicy::Pooled(a) => a.algorithm(),
        }
    }

    fn params(&self) -> &ParamStore {
        match self {
            AgentPolicy::Cdc(a) => a.params(),
            AgentPolicy::Independent(a) => a.params(),
            AgentPolicy::Pooled(a) => a.params(),
        }
    }

    fn params_mut(&mut self) -> &mut ParamStore {
        match self {
            AgentPolicy::Cdc(a) => a.params_mut(),
            AgentPolicy::Independent(a) => a.params_mut(),
            AgentPolicy::Pooled(a) => a.params_mut(),
        }
    }

    fn obs_width(&self) -> usize {
        match self {
            AgentPolicy::Cdc(a) => a.obs_width(),
            AgentPolicy::Independent(a) => a.obs_width(),
            AgentPolicy::Pooled(a) => a.obs_width(),
        }
    }

    fn logits(&self, tape: &mut Tape, bound: &Bound, obs: &Array2<f64>, n: usize) -> Result<Var> {
        match self {
            AgentPolicy::Cdc(a) => a.logits(tape, bound, obs, n),
            AgentPolicy::Independent(a) => a.logits(tape, bound, obs, n),
            AgentPolicy::Pooled(a) => a.logits(tape, bound, obs, n),
        }
    }

    fn check_agents(&self, n: usize) -> Result<()> {
        match self {
            AgentPolicy::Cdc(a) => a.check_agents(n),
            AgentPolicy::Independent(a) => a.check_agents(n),
            AgentPolicy::Pooled(a) => a.check_agents(n),
        }
    }
}

/// Critic matching each algorithm.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyCritic {
    Recurrent(RecurrentCritic),
    Independent(IndependentCritic),
    FeedForward(FeedForwardCritic),
}

impl AnyCritic {
    pub fn build<R: Rng>(algorithm: Algorithm, obs_width: usize, n_agents: usize, rng: &mut R) -> Self {
        match algorithm {
            Algorithm::Cdc => AnyCritic::Recurrent(RecurrentCritic::new(obs_width, rng)),
            Algorithm::Baseline(BaselineKind::IndependentDDPG) => {
                AnyCritic::Independent(IndependentCritic::new(obs_width, n_agents, rng))
            }
            Algorithm::Baseline(_) => AnyCritic::FeedForward(FeedForwardCritic::new(obs_width, n_agents, rng)),
        }
    }
}

impl Critic for AnyCritic {
    fn params(&self) -> &ParamStore {
        match self {
            AnyCritic::Recurrent(c) => c.params(),
            AnyCritic::Independent(c) => c.params(),
            AnyCritic::FeedForward(c) => c.params(),
        }
    }

    fn params_mut(&mut self) -> &mut ParamStore {
        match self {
            AnyCritic::Recurrent(c) => c.params_mut(),
            AnyCritic::Independent(c) => c.params_mut(),
            AnyCritic::FeedForward(c) => c.params_mut(),
        }
    }

    fn q(&self, tape: &mut Tape, bound: &Bound, obs: &Array2<f64>, actions: Var, n: usize) -> Result<Var> {
        match self {
            AnyCritic::Recurrent(c) => c.q(tape, bound, obs, actions, n),
            AnyCritic::Independent(c) => c.q(tape, bound, obs, actions, n),
            AnyCritic::FeedForward(c) => c.q(tape, bound, obs, actions, n),
        }
    }
}
