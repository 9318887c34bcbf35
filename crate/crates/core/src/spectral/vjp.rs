//! Exact reverse-mode derivative of the stable heat matrix with respect to the
//! connectivity strengths, holding the selected diffusion times fixed.

use std::collections::BTreeMap;

use ndarray::Array2;

use super::eigen::{sym_eigendecompose, EigenSystem};
use super::graph::{normalized_laplacian, WeightedGraph, DEGREE_FLOOR};
use super::heat::{StableHeatMatrix, TimeGrid};
use crate::error::{Error, Result};

/// Eigenvalue gaps below this use the derivative branch of the divided difference.
pub const GAP_TOL: f64 = 1e-9;

/// Everything the forward pass produces for one graph.
#[derive(Clone, Debug)]
pub struct StableHeat {
    pub laplacian: Array2<f64>,
    pub eigen: EigenSystem,
    pub stable: StableHeatMatrix,
}

/// Laplacian → eigensystem → stable-time scan.
pub fn stable_heat(g: &WeightedGraph, grid: &TimeGrid, delta: f64) -> Result<StableHeat> {
    let lap = normalized_laplacian(g);
    let eigen = sym_eigendecompose(&lap.matrix)?;
    let stable = super::heat::detect_stable_times(&eigen, grid, delta)?;
    Ok(StableHeat {
        laplacian: lap.matrix,
        eigen,
        stable,
    })
}

/// Re-evaluates `H(p̂)` entrywise for `g` with the times and mask of `frozen`.
pub fn heat_at_frozen_times(g: &WeightedGraph, frozen: &StableHeatMatrix) -> Result<Array2<f64>> {
    let n = g.n();
    check_dims(n, frozen)?;
    let lap = normalized_laplacian(g);
    let es = sym_eigendecompose(&lap.matrix)?;
    let mut out = Array2::zeros((n, n));
    for (p, pairs) in group_by_time(frozen) {
        let h = { let p = f64::from_bits(p); es.apply_fn(|l| (-l * p).exp()) };
        for (u, v) in pairs {
            out[[u, v]] = h[[u, v]];
        }
    }
    Ok(out)
}

fn check_dims(n: usize, shm: &StableHeatMatrix) -> Result<()> {
    if shm.n() != n || shm.p_hat.dim() != (n, n) || shm.found.dim() != (n, n) {
        return Err(Error::Shape {
            op: "stable_heat",
            left: vec![n, n],
            right: vec![shm.heat.nrows(), shm.heat.ncols()],
        });
    }
    Ok(())
}

fn group_by_time(shm: &StableHeatMatrix) -> BTreeMap<u64, Vec<(usize, usize)>> {
    let n = shm.n();
    let mut groups: BTreeMap<u64, Vec<(usize, usize)>> = BTreeMap::new();
    for u in 0..n {
        for v in 0..n {
            if shm.found[[u, v]] {
                groups.entry(shm.p_hat[[u, v]].to_bits()).or_default().push((u, v));
            }
        }
    }
    groups
}

/// Adjoint of `L ↦ exp(−p L)` at a symmetric `L = Φ Λ Φᵀ` (Daleckii–Krein).
fn exp_adjoint(es: &EigenSystem, p: f64, upstream: &Array2<f64>) -> Array2<f64> {
    let n = es.n();
    let phi = &es.vectors;
    let f: Vec<f64> = es.values.iter().map(|&l| (-p * l).exp()).collect();
    let mut inner = phi.t().dot(upstream).dot(phi);
    for i in 0..n {
        for j in 0..n {
            let (li, lj) = (es.values[i], es.values[j]);
            let gamma = if (li - lj).abs() < GAP_TOL {
                -p * 0.5 * (f[i] + f[j])
            } else {
                (f[i] - f[j]) / (li - lj)
            };
            inner[[i, j]] *= gamma;
        }
    }
    phi.dot(&inner).dot(&phi.t())
}

/// `dLoss/dS` for `Loss = Σ upstream ∘ H`, with `H` the stable heat matrix of
/// `g` at the frozen times of `shm`. The result is the symmetrised gradient, so
/// a symmetric perturbation of pair `(u, v)` changes the loss by `2·grad[u][v]`.
pub fn stable_heat_vjp(g: &WeightedGraph, shm: &StableHeatMatrix, upstream: &Array2<f64>) -> Result<Array2<f64>> {
    let n = g.n();
    check_dims(n, shm)?;
    if upstream.dim() != (n, n) {
        return Err(Error::Shape {
            op: "stable_heat_vjp",
            left: vec![n, n],
            right: vec![upstream.nrows(), upstream.ncols()],
        });
    }
    let lap = normalized_laplacian(g);
    let es = sym_eigendecompose(&lap.matrix)?;

    let mut grad_lap = Array2::zeros((n, n));
    for (bits, pairs) in group_by_time(shm) {
        let mut masked = Array2::zeros((n, n));
        let mut any = false;
        for (u, v) in pairs {
            masked[[u, v]] = upstream[[u, v]];
            any |= upstream[[u, v]] != 0.0;
        }
        if any {
            grad_lap += &exp_adjoint(&es, f64::from_bits(bits), &masked);
        }
    }

    // L̂_uv = δ_uv d_u q_u² − S_uv q_u q_v, with q = max(d, floor)^{-1/2}
    let s = g.strengths();
    let d = &lap.degrees;
    let q: Vec<f64> = d.iter().map(|&x| x.max(DEGREE_FLOOR).powf(-0.5)).collect();
    let dq: Vec<f64> = d
        .iter()
        .map(|&x| if x >= DEGREE_FLOOR { -0.5 * x.powf(-1.5) } else { 0.0 })
        .collect();

    let mut grad_s = Array2::zeros((n, n));
    let mut grad_q = vec![0.0; n];
    for u in 0..n {
        for v in 0..n {
            let gl = grad_lap[[u, v]];
            grad_s[[u, v]] -= gl * q[u] * q[v];
            grad_q[u] -= gl * s[[u, v]] * q[v];
            grad_q[v] -= gl * s[[u, v]] * q[u];
        }
    }
    for u in 0..n {
        let d_diag = q[u] * q[u] + 2.0 * d[u] * q[u] * dq[u];
        let grad_d = grad_lap[[u, u]] * d_diag + grad_q[u] * dq[u];
        for v in 0..n {
            grad_s[[u, v]] += grad_d;
        }
    }
    Ok((&grad_s + &grad_s.t()) * 0.5)
}
