use ndarray::Array2;

use crate::error::{Error, Result};

/// Degrees below this are floored when normalising.
pub const DEGREE_FLOOR: f64 = 1e-8;

/// Symmetric connectivity-strength matrix with zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedGraph {
    strengths: Array2<f64>,
}

impl WeightedGraph {
    /// Strict constructor: exact symmetry, zero diagonal, off-diagonal in `(0, 1)`.
    pub fn new(strengths: Array2<f64>) -> Result<Self> {
        Self::validate(&strengths, true)?;
        Ok(Self { strengths })
    }

    /// Accepts any finite nonnegative symmetric weights with zero diagonal;
    /// used for analysis matrices and hand-built test graphs.
    pub fn with_nonnegative_weights(strengths: Array2<f64>) -> Result<Self> {
        Self::validate(&strengths, false)?;
        Ok(Self { strengths })
    }

    /// Builds the graph from the strictly-upper-triangular entries in row-major order.
    pub fn from_upper(n: usize, upper: &[f64]) -> Result<Self> {
        if upper.len() != n * n.saturating_sub(1) / 2 {
            return Err(Error::Parameter(format!(
                "{} strengths for {n} nodes",
                upper.len()
            )));
        }
        let mut s = Array2::zeros((n, n));
        let mut k = 0;
        for u in 0..n {
            for v in u + 1..n {
                s[[u, v]] = upper[k];
                s[[v, u]] = upper[k];
                k += 1;
            }
        }
        Self::new(s)
    }

    fn validate(s: &Array2<f64>, strict: bool) -> Result<()> {
        let n = s.nrows();
        if s.ncols() != n {
            return Err(Error::Parameter(format!("strength matrix is {:?}, not square", s.dim())));
        }
        for u in 0..n {
            if s[[u, u]] != 0.0 {
                return Err(Error::Parameter(format!("diagonal entry {u} is {}", s[[u, u]])));
            }
            for v in 0..n {
                let w = s[[u, v]];
                if w != s[[v, u]] {
                    return Err(Error::Parameter(format!("asymmetric strengths at ({u}, {v})")));
                }
                let ok = if u == v {
                    true
                } else if strict {
                    w > 0.0 && w < 1.0
                } else {
                    w.is_finite() && w >= 0.0
                };
                if !ok {
                    return Err(Error::Parameter(format!("strength ({u}, {v}) = {w} out of range")));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.strengths.nrows()
    }

    pub fn strengths(&self) -> &Array2<f64> {
        &self.strengths
    }

    pub fn degrees(&self) -> Vec<f64> {
        self.strengths.rows().into_iter().map(|r| r.sum()).collect()
    }
}

/// Normalised Laplacian together with the degrees it was built from.
#[derive(Clone, Debug)]
pub struct NormalizedLaplacian {
    pub matrix: Array2<f64>,
    pub degrees: Vec<f64>,
    /// Number of degrees that fell below [`DEGREE_FLOOR`] and were floored.
    pub floored: usize,
}

/// `D^{-1/2} (D − S) D^{-1/2}`, with degrees under [`DEGREE_FLOOR`] floored in
/// the normalising factors only, so an isolated node gets a zero row.
pub fn normalized_laplacian(g: &WeightedGraph) -> NormalizedLaplacian {
    let n = g.n();
    let s = g.strengths();
    let degrees = g.degrees();
    let mut floored = 0;
    let q: Vec<f64> = degrees
        .iter()
        .map(|&d| {
            if d < DEGREE_FLOOR {
                floored += 1;
                DEGREE_FLOOR.powf(-0.5)
            } else {
                d.powf(-0.5)
            }
        })
        .collect();
    if floored > 0 {
        log::debug!("normalized_laplacian: floored {floored} degree(s)");
    }
    let matrix = Array2::from_shape_fn((n, n), |(u, v)| {
        let diag = if u == v { degrees[u] } else { 0.0 };
        (diag - s[[u, v]]) * q[u] * q[v]
    });
    NormalizedLaplacian {
        matrix,
        degrees,
        floored,
    }
}
