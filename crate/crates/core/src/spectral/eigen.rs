use ndarray::Array2;

use crate::error::{Error, Result};

const OFF_DIAGONAL_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Eigenvalues in ascending order and matching orthonormal eigenvector columns.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    pub vectors: Array2<f64>,
}

impl EigenSystem {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// `Φ · diag(f(λ)) · Φᵀ`.
    pub fn apply_fn(&self, f: impl Fn(f64) -> f64) -> Array2<f64> {
        let n = self.n();
        let phi = &self.vectors;
        let scaled: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = Array2::zeros((n, n));
        for u in 0..n {
            for v in u..n {
                let mut acc = 0.0;
                for (i, w) in scaled.iter().enumerate() {
                    acc += w * phi[[u, i]] * phi[[v, i]];
                }
                out[[u, v]] = acc;
                out[[v, u]] = acc;
            }
        }
        out
    }
}

fn max_off_diagonal(a: &Array2<f64>) -> f64 {
    let n = a.nrows();
    let mut m: f64 = 0.0;
    for p in 0..n {
        for q in p + 1..n {
            m = m.max(a[[p, q]].abs());
        }
    }
    m
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// The input is symmetrised by averaging with its transpose first. Sweeps stop
/// once the largest off-diagonal magnitude is below `1e-12` (scaled by the
/// matrix norm when that exceeds one).
pub fn sym_eigendecompose(m: &Array2<f64>) -> Result<EigenSystem> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Parameter(format!("eigendecomposition of non-square {:?}", m.dim())));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("eigendecomposition of non-finite matrix".into()));
    }
    let mut a = (m + &m.t()) * 0.5;
    let mut v = Array2::eye(n);
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
    let tol = OFF_DIAGONAL_TOL * scale;

    let mut converged = max_off_diagonal(&a) < tol;
    let mut sweeps = 0;
    while !converged {
        if sweeps == MAX_SWEEPS {
            return Err(Error::Numeric(format!(
                "Jacobi did not converge in {MAX_SWEEPS} sweeps (off-diagonal {:e})",
                max_off_diagonal(&a)
            )));
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[[p, q]];
                if apq.abs() < f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[[k, p]], a[[k, q]]);
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[[p, k]], a[[q, k]]);
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[[k, p]], v[[k, q]]);
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
        converged = max_off_diagonal(&a) < tol;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[[i, i]].total_cmp(&a[[j, j]]));
    let values = order.iter().map(|&i| a[[i, i]]).collect();
    let vectors = Array2::from_shape_fn((n, n), |(r, c)| v[[r, order[c]]]);
    Ok(EigenSystem { values, vectors })
}
