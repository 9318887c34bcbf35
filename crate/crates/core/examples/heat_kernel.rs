//! Heat kernel of a small weighted graph: spectral and Padé evaluations,
//! and the stable diffusion time selected for every pair.

use cdc::spectral::{
    heat_kernel_at, heat_kernel_pade, normalized_laplacian, stable_heat, sym_eigendecompose, TimeGrid, WeightedGraph,
};
use ndarray::array;

fn main() -> cdc::Result<()> {
    let g = WeightedGraph::with_nonnegative_weights(array![
        [0.0, 0.9, 0.1, 0.0],
        [0.9, 0.0, 0.5, 0.2],
        [0.1, 0.5, 0.0, 0.7],
        [0.0, 0.2, 0.7, 0.0],
    ])?;
    let lap = normalized_laplacian(&g);
    let es = sym_eigendecompose(&lap.matrix)?;
    println!("eigenvalues {:.4?}", es.values);

    for p in [0.0, 0.5, 2.0, 10.0] {
        let h = heat_kernel_at(&es, p)?;
        let pade = heat_kernel_pade(&lap.matrix, p)?;
        let gap = (&h - &pade).mapv(|x| x * x).sum().sqrt();
        println!("p = {p:>4}: H[0][1] = {:.6}, |spectral − padé|_F = {gap:.2e}", h[[0, 1]]);
    }

    let out = stable_heat(&g, &TimeGrid::new(0.1, 300)?, 0.05)?;
    println!("stable times p̂:\n{:.1}", out.stable.p_hat);
    println!("stable heat H(p̂):\n{:.4}", out.stable.heat);
    Ok(())
}
