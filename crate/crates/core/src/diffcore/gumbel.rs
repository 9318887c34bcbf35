use ndarray::Array2;
use rand::Rng;

use super::tape::{Tape, Var};
use crate::error::{Error, Result};

/// One standard Gumbel draw, `-ln(-ln U)` with `U` uniform on the open unit interval.
pub fn sample_gumbel<R: Rng>(rng: &mut R) -> f64 {
    let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    -(-u.ln()).ln()
}

/// Row-wise one-hot of the arg-max. Ties resolve to the lowest index.
pub fn argmax_one_hot(values: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros(values.raw_dim());
    for (r, row) in values.outer_iter().enumerate() {
        out[[r, argmax(row.iter().copied())]] = 1.0;
    }
    out
}

pub fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Gumbel-Softmax relaxation of row-wise categorical sampling.
///
/// With `hard`, the forward value is the one-hot arg-max of the relaxed sample
/// while gradients flow through the soft sample (straight-through).
pub fn gumbel_softmax<R: Rng>(
    tape: &mut Tape,
    logits: Var,
    temperature: f64,
    hard: bool,
    rng: &mut R,
) -> Result<Var> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(Error::Parameter(format!("temperature must be positive, got {temperature}")));
    }
    let shape = tape.value(logits).raw_dim();
    let noise = Array2::from_shape_simple_fn(shape, || sample_gumbel(rng));
    let noise = tape.constant(noise);
    let perturbed = tape.add(logits, noise)?;
    let scaled = tape.scale(perturbed, 1.0 / temperature);
    let soft = tape.softmax_rows(scaled)?;
    if !hard {
        return Ok(soft);
    }
    let one_hot = argmax_one_hot(tape.value(soft));
    tape.straight_through(soft, one_hot)
}
