//! Spectral graph machinery behind the heat-kernel attention: normalised
//! Laplacians, a Jacobi eigensolver, heat kernels on a diffusion-time grid,
//! stable-time selection, its exact gradient, and eigenvector centrality.

mod centrality;
mod eigen;
mod graph;
mod heat;
mod vjp;

pub use centrality::{eigenvector_centrality, Centrality};
pub use eigen::{sym_eigendecompose, EigenSystem};
pub use graph::{normalized_laplacian, NormalizedLaplacian, WeightedGraph, DEGREE_FLOOR};
pub use heat::{
    average_heat_over_episode, detect_stable_times, expm, heat_kernel_at, heat_kernel_pade, StableHeatMatrix,
    TimeGrid, ZERO_HEAT,
};
pub use vjp::{heat_at_frozen_times, stable_heat, stable_heat_vjp, StableHeat, GAP_TOL};

/// Grid and threshold used by the stable-time scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeatConfig {
    pub grid: TimeGrid,
    pub delta: f64,
}

impl Default for HeatConfig {
    fn default() -> Self {
        Self {
            grid: TimeGrid::default(),
            delta: 0.05,
        }
    }
}
