use rand::Rng;

use super::params::{Bound, ParamId, ParamStore};
use super::tape::{Tape, Var};
use crate::error::{shape_err, Result};

/// Gate weights of an LSTM cell, packed as `[input | forget | candidate | output]`
/// blocks along the columns.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmCell {
    pub input_weight: ParamId,
    pub hidden_weight: ParamId,
    pub input_bias: ParamId,
    pub hidden_bias: ParamId,
    pub input: usize,
    pub hidden: usize,
}

impl LstmCell {
    pub fn new<R: Rng>(store: &mut ParamStore, name: &str, input: usize, hidden: usize, rng: &mut R) -> Self {
        let g = 4 * hidden;
        Self {
            input_weight: store.add_uniform(format!("{name}.w_ih"), (input, g), hidden, rng),
            hidden_weight: store.add_uniform(format!("{name}.w_hh"), (hidden, g), hidden, rng),
            input_bias: store.add_uniform(format!("{name}.b_ih"), (1, g), hidden, rng),
            hidden_bias: store.add_uniform(format!("{name}.b_hh"), (1, g), hidden, rng),
            input,
            hidden,
        }
    }

    /// One recurrence step on a batch: `x: B×input`, `h, c: B×hidden`.
    pub fn forward(&self, tape: &mut Tape, bound: &Bound, x: Var, h: Var, c: Var) -> Result<(Var, Var)> {
        let (sx, sh, sc) = (tape.shape(x), tape.shape(h), tape.shape(c));
        if sx[1] != self.input || sh[1] != self.hidden || sh != sc || sx[0] != sh[0] {
            return Err(shape_err("lstm_cell", &sx, &sh));
        }
        let hs = self.hidden;
        let xi = tape.matmul(x, bound.var(self.input_weight))?;
        let xi = tape.add_row(xi, bound.var(self.input_bias))?;
        let hh = tape.matmul(h, bound.var(self.hidden_weight))?;
        let hh = tape.add_row(hh, bound.var(self.hidden_bias))?;
        let pre = tape.add(xi, hh)?;

        let i = tape.slice_cols(pre, 0, hs)?;
        let i = tape.sigmoid(i)?;
        let f = tape.slice_cols(pre, hs, hs)?;
        let f = tape.sigmoid(f)?;
        let g = tape.slice_cols(pre, 2 * hs, hs)?;
        let g = tape.tanh(g)?;
        let o = tape.slice_cols(pre, 3 * hs, hs)?;
        let o = tape.sigmoid(o)?;

        let keep = tape.mul(f, c)?;
        let write = tape.mul(i, g)?;
        let c_next = tape.add(keep, write)?;
        let squashed = tape.tanh(c_next)?;
        let h_next = tape.mul(o, squashed)?;
        Ok((h_next, c_next))
    }
}
