//! The CDC actor: pairwise message encoding, learned connectivity, heat-kernel
//! attention over messages, and action selection. One parameter set serves
//! every agent, so a trained actor runs with any number of agents.

mod checkpoint;
mod heat_op;

pub use checkpoint::Checkpoint;
pub use heat_op::{stable_heat_op, HeatBatch};

use ndarray::{Array2, Array3};
use rand::Rng;

use crate::diffcore::{argmax_one_hot, gumbel_softmax, Activation, Bound, Linear, Mlp, ParamStore, Tape, Var};
use crate::envs::ACTIONS;
use crate::error::{Error, Result};
use crate::spectral::{HeatConfig, StableHeatMatrix, WeightedGraph};

pub const HIDDEN: usize = 64;
/// Width of the pairwise messages.
pub const MESSAGE_WIDTH: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Straight-through Gumbel-Softmax samples.
    Train,
    /// Arg-max of the logits.
    Eval,
}

/// Any decentralised actor trained by the shared loop.
pub trait Actor: Clone + Send + Sync {
    fn algorithm(&self) -> &'static str;
    fn params(&self) -> &ParamStore;
    fn params_mut(&mut self) -> &mut ParamStore;
    fn obs_width(&self) -> usize;

    /// Logits (`batch·n × 5`) for `batch` joint observations stacked as rows
    /// `b·n + agent` of `obs`.
    fn logits(&self, tape: &mut Tape, bound: &Bound, obs: &Array2<f64>, n: usize) -> Result<Var>;

    fn check_agents(&self, _n: usize) -> Result<()> {
        Ok(())
    }
}

/// Stacks per-agent observation vectors into `n × w`.
pub fn stack_rows(rows: &[Vec<f64>]) -> Result<Array2<f64>> {
    let w = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|r| r.len() != w) {
        return Err(Error::Shape {
            op: "stack_rows",
            left: vec![w],
            right: vec![bad.len()],
        });
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(Array2::from_shape_vec((rows.len(), w), flat).expect("checked widths"))
}

pub(crate) fn check_obs(obs: &Array2<f64>, n: usize, width: usize) -> Result<usize> {
    if n == 0 || obs.nrows() % n != 0 || obs.ncols() != width {
        return Err(Error::Shape {
            op: "actor observations",
            left: vec![n, width],
            right: vec![obs.nrows(), obs.ncols()],
        });
    }
    Ok(obs.nrows() / n)
}

/// Turns logits into actions: hard Gumbel samples in training, arg-max in evaluation.
pub fn select_actions<R: Rng>(tape: &mut Tape, logits: Var, mode: Mode, temperature: f64, rng: &mut R) -> Result<Var> {
    match mode {
        Mode::Train => gumbel_softmax(tape, logits, temperature, true, rng),
        Mode::Eval => {
            let hot = argmax_one_hot(tape.value(logits));
            Ok(tape.constant(hot))
        }
    }
}

/// Row index of each action in a one-hot matrix.
pub fn action_indices(one_hot: &Array2<f64>) -> Vec<usize> {
    one_hot
        .outer_iter()
        .map(|r| crate::diffcore::argmax(r.iter().copied()))
        .collect()
}

/// Runs an actor on one joint observation and returns action indices and logits.
pub fn act<A: Actor, R: Rng>(actor: &A, obs: &[Vec<f64>], mode: Mode, temperature: f64, rng: &mut R) -> Result<(Vec<usize>, Array2<f64>)> {
    let x = stack_rows(obs)?;
    let mut tape = Tape::new();
    let bound = tape.bind(actor.params(), false);
    let logits = actor.logits(&mut tape, &bound, &x, obs.len())?;
    let a = select_actions(&mut tape, logits, mode, temperature, rng)?;
    Ok((action_indices(tape.value(a)), tape.value(logits).clone()))
}

/// `n × n × d_c` pairwise messages; `C[u][v] = C[v][u]`.
pub type MessageTensor = Array3<f64>;

/// Intermediate tape variables of a batched CDC forward pass.
pub struct CdcForward {
    pub logits: Var,
    /// `batch·n × d_c` aggregated messages.
    pub messages: Var,
    /// `batch·n(n+1)/2 × d_c` messages for unordered pairs `u ≤ v`.
    pub pair_messages: Var,
    /// `batch·n(n−1)/2 × 1` connectivity strengths for pairs `u < v`.
    pub strengths: Var,
    /// `batch·n² × 1` stable heat values for ordered pairs.
    pub heat: Var,
    pub graphs: HeatBatch,
}

/// Everything one CDC decision produces, for logging and analysis.
#[derive(Clone, Debug)]
pub struct ActorStep {
    pub actions: Vec<usize>,
    pub logits: Array2<f64>,
    pub pair_messages: MessageTensor,
    pub strengths: WeightedGraph,
    pub stable: StableHeatMatrix,
    pub messages: Array2<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CdcActor {
    pub params: ParamStore,
    encoder: Linear,
    joint: Mlp,
    strength: Mlp,
    head: Mlp,
    obs_width: usize,
    pub heat: HeatConfig,
}

/// Unordered pairs `u ≤ v` in row-major order, and the index of each ordered pair among them.
fn pair_layout(n: usize) -> (Vec<(usize, usize)>, Vec<usize>) {
    let mut pairs = Vec::with_capacity(n * (n + 1) / 2);
    let mut index = vec![0; n * n];
    for u in 0..n {
        for v in u..n {
            index[u * n + v] = pairs.len();
            index[v * n + u] = pairs.len();
            pairs.push((u, v));
        }
    }
    (pairs, index)
}

impl CdcActor {
    pub fn new<R: Rng>(obs_width: usize, heat: HeatConfig, rng: &mut R) -> Self {
        let mut params = ParamStore::new();
        let encoder = Linear::new(&mut params, "cdc.encoder", obs_width, HIDDEN, rng);
        let joint = Mlp::new(&mut params, "cdc.joint", &[HIDDEN, HIDDEN, MESSAGE_WIDTH], Activation::Identity, rng);
        let strength = Mlp::new(&mut params, "cdc.strength", &[MESSAGE_WIDTH, HIDDEN, HIDDEN, 1], Activation::Sigmoid, rng);
        let head = Mlp::new(&mut params, "cdc.policy", &[MESSAGE_WIDTH, HIDDEN, HIDDEN, ACTIONS], Activation::Identity, rng);
        Self {
            params,
            encoder,
            joint,
            strength,
            head,
            obs_width,
            heat,
        }
    }

    /// Final layer of the connectivity head, exposed for analysis and tests.
    pub fn strength_output_layer(&self) -> &Linear {
        self.strength.layers.last().expect("three layers")
    }

    pub fn policy_output_layer(&self) -> &Linear {
        self.head.layers.last().expect("three layers")
    }

    /// Pairwise messages for unordered pairs: `f_out(g(o_u) + g(o_v))`.
    fn encode_on_tape(&self, tape: &mut Tape, bound: &Bound, obs: &Array2<f64>, n: usize) -> Result<Var> {
        let batch = check_obs(obs, n, self.obs_width)?;
        let (pairs, _) = pair_layout(n);
        let x = tape.constant(obs.clone());
        let h = self.encoder.forward(tape, bound, x)?;
        let h = tape.relu(h)?;
        let mut left = Vec::with_capacity(batch * pairs.len());
        let mut right = Vec::with_capacity(batch * pairs.len());
        for b in 0..batch {
            for &(u, v) in &pairs {
                left.push(b * n + u);
                right.push(b * n + v);
            }
        }
        let hl = tape.gather_rows(h, left)?;
        let hr = tape.gather_rows(h, right)?;
        let sum = tape.add(hl, hr)?;
        let z = self.joint.layers[0].forward(tape, bound, sum)?;
        let z = tape.relu(z)?;
        self.joint.layers[1].forward(tape, bound, z)
    }

    /// Full batched forward pass on the tape.
    pub fn forward_on_tape(&self, tape: &mut Tape, bound: &Bound, obs: &Array2<f64>, n: usize) -> Result<CdcForward> {
        self.forward_frozen(tape, bound, obs, n, None)
    }

    /// Forward pass that reuses the stable times of `frozen` (one matrix per sample).
    pub fn forward_frozen(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        obs: &Array2<f64>,
        n: usize,
        frozen: Option<&[StableHeatMatrix]>,
    ) -> Result<CdcForward> {
        let batch = check_obs(obs, n, self.obs_width)?;
        let (pairs, index) = pair_layout(n);
        let np = pairs.len();
        let c = self.encode_on_tape(tape, bound, obs, n)?;

        let mut off = Vec::with_capacity(batch * n * n.saturating_sub(1) / 2);
        for b in 0..batch {
            for (k, &(u, v)) in pairs.iter().enumerate() {
                if u < v {
                    off.push(b * np + k);
                }
            }
        }
        let c_off = tape.gather_rows(c, off)?;
        let s = self.strength.forward(tape, bound, c_off)?;
        let (heat, graphs) = stable_heat_op(tape, s, batch, n, &self.heat, frozen)?;

        let mut ordered = Vec::with_capacity(batch * n * n);
        for b in 0..batch {
            ordered.extend(index.iter().map(|&k| b * np + k));
        }
        let c_ord = tape.gather_rows(c, ordered)?;
        let weighted = tape.mul_col(c_ord, heat)?;
        let messages = tape.group_sum_rows(weighted, n)?;
        let logits = self.head.forward(tape, bound, messages)?;
        Ok(CdcForward {
            logits,
            messages,
            pair_messages: c,
            strengths: s,
            heat,
            graphs,
        })
    }

    /// `C[u][v] = f_out(g(o_u) + g(o_v))` for one joint observation.
    pub fn encode_pairwise(&self, obs: &[Vec<f64>]) -> Result<MessageTensor> {
        let n = obs.len();
        let x = stack_rows(obs)?;
        let mut tape = Tape::new();
        let bound = tape.bind(&self.params, false);
        let c = self.encode_on_tape(&mut tape, &bound, &x, n)?;
        let (pairs, _) = pair_layout(n);
        let cv = tape.value(c);
        let mut out = Array3::zeros((n, n, MESSAGE_WIDTH));
        for (k, &(u, v)) in pairs.iter().enumerate() {
            for d in 0..MESSAGE_WIDTH {
                out[[u, v, d]] = cv[[k, d]];
                out[[v, u, d]] = cv[[k, d]];
            }
        }
        Ok(out)
    }

    /// Connectivity strengths `σ(θ^s(c_uv))` off the diagonal.
    pub fn connectivity(&self, c: &MessageTensor) -> Result<WeightedGraph> {
        let n = c.dim().0;
        let rows: Vec<Vec<f64>> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .map(|(u, v)| (0..MESSAGE_WIDTH).map(|d| c[[u, v, d]]).collect())
            .collect();
        let mut upper = Vec::new();
        if !rows.is_empty() {
            let mut tape = Tape::new();
            let bound = tape.bind(&self.params, false);
            let x = tape.constant(stack_rows(&rows)?);
            let s = self.strength.forward(&mut tape, &bound, x)?;
            upper = tape.value(s).column(0).to_vec();
        }
        let mut full = Array2::zeros((n, n));
        let mut k = 0;
        for u in 0..n {
            for v in u + 1..n {
                full[[u, v]] = upper[k];
                full[[v, u]] = upper[k];
                k += 1;
            }
        }
        WeightedGraph::with_nonnegative_weights(full)
    }

    /// Action logits from aggregated messages (`n × d_c`), then action selection.
    pub fn select_actions<R: Rng>(
        &self,
        messages: &Array2<f64>,
        mode: Mode,
        temperature: f64,
        rng: &mut R,
    ) -> Result<(Vec<usize>, Array2<f64>)> {
        if messages.ncols() != MESSAGE_WIDTH {
            return Err(Error::Shape {
                op: "select_actions",
                left: vec![messages.nrows(), MESSAGE_WIDTH],
                right: vec![messages.nrows(), messages.ncols()],
            });
        }
        let mut tape = Tape::new();
        let bound = tape.bind(&self.params, false);
        let m = tape.constant(messages.clone());
        let logits = self.head.forward(&mut tape, &bound, m)?;
        let a = select_actions(&mut tape, logits, mode, temperature, rng)?;
        Ok((action_indices(tape.value(a)), tape.value(logits).clone()))
    }

    /// One decision for a single joint observation, with all intermediates.
    pub fn step<R: Rng>(&self, obs: &[Vec<f64>], mode: Mode, temperature: f64, rng: &mut R) -> Result<ActorStep> {
        let n = obs.len();
        let x = stack_rows(obs)?;
        let mut tape = Tape::new();
        let bound = tape.bind(&self.params, false);
        let fwd = self.forward_on_tape(&mut tape, &bound, &x, n)?;
        let a = select_actions(&mut tape, fwd.logits, mode, temperature, rng)?;
        let (pairs, _) = pair_layout(n);
        let cv = tape.value(fwd.pair_messages);
        let mut c = Array3::zeros((n, n, MESSAGE_WIDTH));
        for (k, &(u, v)) in pairs.iter().enumerate() {
            for d in 0..MESSAGE_WIDTH {
                c[[u, v, d]] = cv[[k, d]];
                c[[v, u, d]] = cv[[k, d]];
            }
        }
        let mut graphs = fwd.graphs;
        Ok(ActorStep {
            actions: action_indices(tape.value(a)),
            logits: tape.value(fwd.logits).clone(),
            pair_messages: c,
            strengths: graphs.graphs.pop().expect("one sample"),
            stable: graphs.stable.pop().expect("one sample"),
            messages: tape.value(fwd.messages).clone(),
        })
    }
}

impl Actor for CdcActor {
    fn algorithm(&self) -> &'static str {
        "cdc"
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
        Ok(self.forward_on_tape(tape, bound, obs, n)?.logits)
    }
}

/// `m_u = Σ_v H_uv c_uv`; pairs without a stable time carry zero heat.
pub fn aggregate_messages(c: &MessageTensor, h: &StableHeatMatrix) -> Result<Array2<f64>> {
    let (n, n2, d) = c.dim();
    if n != n2 || h.n() != n {
        return Err(Error::Shape {
            op: "aggregate_messages",
            left: vec![n, n2, d],
            right: vec![h.n(), h.n()],
        });
    }
    let mut m = Array2::zeros((n, d));
    for u in 0..n {
        for v in 0..n {
            if !h.found[[u, v]] {
                continue;
            }
            for k in 0..d {
                m[[u, k]] += h.heat[[u, v]] * c[[u, v, k]];
            }
        }
    }
    Ok(m)
}
