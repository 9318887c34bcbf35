use ndarray::Array2;

use crate::diffcore::{CustomBackward, Tape, Var};
use crate::error::{Error, Result};
use crate::spectral::{heat_at_frozen_times, stable_heat, stable_heat_vjp, HeatConfig, StableHeatMatrix, WeightedGraph};

/// Graphs and stable heat matrices built by one [`stable_heat_op`] call.
#[derive(Clone, Debug)]
pub struct HeatBatch {
    pub graphs: Vec<WeightedGraph>,
    pub stable: Vec<StableHeatMatrix>,
}

struct HeatRule {
    n: usize,
    batch: HeatBatch,
}

impl CustomBackward for HeatRule {
    fn backward(&self, inputs: &[&Array2<f64>], _output: &Array2<f64>, grad_output: &Array2<f64>) -> Result<Vec<Array2<f64>>> {
        let n = self.n;
        let m = n * n.saturating_sub(1) / 2;
        let mut grad = Array2::zeros(inputs[0].raw_dim());
        for (b, (g, shm)) in self.batch.graphs.iter().zip(&self.batch.stable).enumerate() {
            let up = Array2::from_shape_fn((n, n), |(u, v)| grad_output[[b * n * n + u * n + v, 0]]);
            if up.iter().all(|&x| x == 0.0) {
                continue;
            }
            let gs = stable_heat_vjp(g, shm, &up)?;
            let mut k = 0;
            for u in 0..n {
                for v in u + 1..n {
                    grad[[b * m + k, 0]] = 2.0 * gs[[u, v]];
                    k += 1;
                }
            }
        }
        Ok(vec![grad])
    }
}

/// Maps a column of upper-triangular strengths (`batch·n(n−1)/2 × 1`, pairs
/// `u < v` row-major within each sample) to the stable heat values of every
/// ordered pair (`batch·n² × 1`). Stable times are frozen for the backward pass.
///
/// With `frozen`, the stable times and masks of those matrices are reused
/// instead of being detected afresh.
pub fn stable_heat_op(
    tape: &mut Tape,
    strengths: Var,
    batch: usize,
    n: usize,
    cfg: &HeatConfig,
    frozen: Option<&[StableHeatMatrix]>,
) -> Result<(Var, HeatBatch)> {
    if let Some(f) = frozen {
        if f.len() != batch {
            return Err(Error::Shape {
                op: "stable_heat_op",
                left: vec![batch],
                right: vec![f.len()],
            });
        }
    }
    let m = n * n.saturating_sub(1) / 2;
    let shape = tape.shape(strengths);
    if shape != [batch * m, 1] {
        return Err(Error::Shape {
            op: "stable_heat_op",
            left: vec![batch * m, 1],
            right: shape.to_vec(),
        });
    }
    let s = tape.value(strengths);
    let mut out = Array2::zeros((batch * n * n, 1));
    let mut graphs = Vec::with_capacity(batch);
    let mut stable = Vec::with_capacity(batch);
    for b in 0..batch {
        let mut full = Array2::zeros((n, n));
        let mut k = 0;
        for u in 0..n {
            for v in u + 1..n {
                full[[u, v]] = s[[b * m + k, 0]];
                full[[v, u]] = s[[b * m + k, 0]];
                k += 1;
            }
        }
        let g = WeightedGraph::with_nonnegative_weights(full)?;
        let shm = match frozen {
            Some(f) => {
                let mut shm = f[b].clone();
                shm.heat = heat_at_frozen_times(&g, &shm)?;
                shm
            }
            None => stable_heat(&g, &cfg.grid, cfg.delta)?.stable,
        };
        for u in 0..n {
            for v in 0..n {
                out[[b * n * n + u * n + v, 0]] = shm.heat[[u, v]];
            }
        }
        graphs.push(g);
        stable.push(shm);
    }
    let batch_info = HeatBatch { graphs, stable };
    let rule = HeatRule {
        n,
        batch: batch_info.clone(),
    };
    Ok((tape.custom(&[strengths], out, Box::new(rule)), batch_info))
}
