use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

const RESIDUAL_TOL: f64 = 1e-10;
const MAX_ITERATIONS: usize = 100_000;

#[derive(Clone, Debug, PartialEq)]
pub struct Centrality {
    /// Nonnegative scores summing to one.
    pub scores: Vec<f64>,
    /// Set when the input had no weight at all and the uniform vector was returned.
    pub degenerate: bool,
    pub iterations: usize,
}

/// Dominant eigenvector of a nonnegative symmetric matrix by power iteration.
///
/// Iterates on `A + cI` with `c` half the largest row sum, which keeps the
/// Perron eigenvalue strictly dominant in magnitude even for bipartite patterns.
pub fn eigenvector_centrality(weights: &Array2<f64>) -> Result<Centrality> {
    let n = weights.nrows();
    if weights.ncols() != n || n == 0 {
        return Err(Error::Parameter(format!("centrality of {:?} matrix", weights.dim())));
    }
    if weights.iter().any(|&w| !(w >= -1e-12) || !w.is_finite()) {
        return Err(Error::Parameter("centrality needs nonnegative finite weights".into()));
    }
    let a = weights.mapv(|w| w.max(0.0));
    let max_row = a.rows().into_iter().map(|r| r.sum()).fold(0.0, f64::max);
    if max_row == 0.0 {
        log::warn!("eigenvector_centrality: zero matrix, returning uniform scores");
        return Ok(Centrality {
            scores: vec![1.0 / n as f64; n],
            degenerate: true,
            iterations: 0,
        });
    }
    let shift = 0.5 * max_row;
    let mut x = Array1::from_elem(n, 1.0 / (n as f64).sqrt());
    for it in 1..=MAX_ITERATIONS {
        let ax = a.dot(&x);
        let mut y = &ax + &(&x * shift);
        let norm = y.dot(&y).sqrt();
        y /= norm;
        let ay = a.dot(&y);
        let rayleigh = y.dot(&ay);
        let residual = (&ay - &(&y * rayleigh)).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        x = y;
        if residual < RESIDUAL_TOL * max_row.max(1.0) {
            let total: f64 = x.iter().map(|v| v.abs()).sum();
            return Ok(Centrality {
                scores: x.iter().map(|v| v.abs() / total).collect(),
                degenerate: false,
                iterations: it,
            });
        }
    }
    Err(Error::Numeric("power iteration did not converge".into()))
}
