use rand::Rng;

use super::params::{Bound, ParamId, ParamStore};
use super::tape::{Tape, Unary, Var};
use crate::error::{shape_err, Result};

/// Output nonlinearity of an [`Mlp`]. Hidden layers are always ReLU.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Sigmoid,
    Tanh,
    Relu,
}

impl Activation {
    pub fn apply(self, tape: &mut Tape, x: Var) -> Result<Var> {
        match self {
            Activation::Identity => Ok(x),
            Activation::Sigmoid => tape.unary(Unary::Sigmoid, x),
            Activation::Tanh => tape.unary(Unary::Tanh, x),
            Activation::Relu => tape.unary(Unary::Relu, x),
        }
    }
}

/// Affine layer `x·W + b` with `W: in×out`, `b: 1×out`.
#[derive(Clone, Debug, PartialEq)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
    pub fan_in: usize,
    pub fan_out: usize,
}

impl Linear {
    pub fn new<R: Rng>(store: &mut ParamStore, name: &str, fan_in: usize, fan_out: usize, rng: &mut R) -> Self {
        let weight = store.add_uniform(format!("{name}.weight"), (fan_in, fan_out), fan_in, rng);
        let bias = store.add_uniform(format!("{name}.bias"), (1, fan_out), fan_in, rng);
        Self {
            weight,
            bias,
            fan_in,
            fan_out,
        }
    }

    pub fn forward(&self, tape: &mut Tape, bound: &Bound, x: Var) -> Result<Var> {
        let sx = tape.shape(x);
        if sx[1] != self.fan_in {
            return Err(shape_err("linear", &sx, &[self.fan_in, self.fan_out]));
        }
        let h = tape.matmul(x, bound.var(self.weight))?;
        tape.add_row(h, bound.var(self.bias))
    }
}

/// Feed-forward network: ReLU on hidden layers, chosen activation on the output.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Linear>,
    pub output: Activation,
}

impl Mlp {
    /// `widths` lists every layer width including input and output,
    /// e.g. `[10, 64, 64, 5]` for two hidden layers of 64.
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        name: &str,
        widths: &[usize],
        output: Activation,
        rng: &mut R,
    ) -> Self {
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| Linear::new(store, &format!("{name}.{i}"), w[0], w[1], rng))
            .collect();
        Self { layers, output }
    }

    pub fn input_width(&self) -> usize {
        self.layers.first().map_or(0, |l| l.fan_in)
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map_or(0, |l| l.fan_out)
    }

    pub fn forward(&self, tape: &mut Tape, bound: &Bound, x: Var) -> Result<Var> {
        mlp_forward(&self.layers, self.output, tape, bound, x)
    }
}

/// Runs `layers` in sequence with ReLU between them and `output` at the end.
pub fn mlp_forward(layers: &[Linear], output: Activation, tape: &mut Tape, bound: &Bound, x: Var) -> Result<Var> {
    let mut h = x;
    for (i, layer) in layers.iter().enumerate() {
        h = layer.forward(tape, bound, h)?;
        if i + 1 < layers.len() {
            h = tape.relu(h)?;
        }
    }
    output.apply(tape, h)
}
