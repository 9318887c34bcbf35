use ndarray::Array2;

use super::eigen::EigenSystem;
use crate::error::{Error, Result};

/// Heat values below this magnitude make the relative-change test undefined.
pub const ZERO_HEAT: f64 = 1e-12;

/// `H(p) = Σ_i exp(−λ_i p) φ_i φ_iᵀ`.
pub fn heat_kernel_at(es: &EigenSystem, p: f64) -> Result<Array2<f64>> {
    if !(p >= 0.0) || !p.is_finite() {
        return Err(Error::Parameter(format!("diffusion time must be >= 0, got {p}")));
    }
    Ok(es.apply_fn(|l| (-l * p).exp()))
}

/// Uniform diffusion-time grid `{k·spacing : k = 1..=points}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub spacing: f64,
    pub points: usize,
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self {
            spacing: 0.1,
            points: 300,
        }
    }
}

impl TimeGrid {
    pub fn new(spacing: f64, points: usize) -> Result<Self> {
        if !(spacing > 0.0) || !spacing.is_finite() || points < 2 {
            return Err(Error::Parameter(format!(
                "time grid needs spacing > 0 and at least 2 points (got {spacing}, {points})"
            )));
        }
        Ok(Self { spacing, points })
    }

    /// Time of grid point `k` (1-based).
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.spacing
    }

    pub fn contains(&self, p: f64) -> bool {
        let k = (p / self.spacing).round();
        k >= 1.0 && k <= self.points as f64 && self.time(k as usize) == p
    }
}

/// Heat values at each pair's selected stable time.
#[derive(Clone, Debug, PartialEq)]
pub struct StableHeatMatrix {
    pub heat: Array2<f64>,
    /// Selected time per pair, 0 where nothing was found.
    pub p_hat: Array2<f64>,
    pub found: Array2<bool>,
}

impl StableHeatMatrix {
    pub fn n(&self) -> usize {
        self.heat.nrows()
    }
}

/// Scans the grid for each pair's first time whose relative change to the next
/// grid point is below `delta`. Pairs that never stabilise get heat 0.
pub fn detect_stable_times(es: &EigenSystem, grid: &TimeGrid, delta: f64) -> Result<StableHeatMatrix> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Parameter(format!("threshold must be positive, got {delta}")));
    }
    let n = es.n();
    let mut heat = Array2::zeros((n, n));
    let mut p_hat = Array2::zeros((n, n));
    let mut found = Array2::from_elem((n, n), false);
    let mut pending = n * (n + 1) / 2;

    let mut current = heat_kernel_at(es, grid.time(1))?;
    for k in 1..grid.points {
        if pending == 0 {
            break;
        }
        let next = heat_kernel_at(es, grid.time(k + 1))?;
        for u in 0..n {
            for v in u..n {
                if found[[u, v]] {
                    continue;
                }
                let h = current[[u, v]];
                if h.abs() < ZERO_HEAT {
                    continue;
                }
                if ((next[[u, v]] - h) / h).abs() < delta {
                    let p = grid.time(k);
                    for (a, b) in [(u, v), (v, u)] {
                        heat[[a, b]] = h;
                        p_hat[[a, b]] = p;
                        found[[a, b]] = true;
                    }
                    pending -= 1;
                }
            }
        }
        current = next;
    }
    Ok(StableHeatMatrix { heat, p_hat, found })
}

/// Element-wise mean of the heat matrices of one episode.
pub fn average_heat_over_episode(per_step: &[StableHeatMatrix]) -> Result<Array2<f64>> {
    let first = per_step
        .first()
        .ok_or_else(|| Error::Parameter("cannot average an empty episode".into()))?;
    let n = first.n();
    let mut acc = Array2::zeros((n, n));
    for m in per_step {
        if m.n() != n {
            return Err(Error::Parameter(format!("mixed agent counts {} and {n}", m.n())));
        }
        acc += &m.heat;
    }
    Ok(acc / per_step.len() as f64)
}

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA13: f64 = 5.371920351148152;

fn one_norm(a: &Array2<f64>) -> f64 {
    a.columns().into_iter().map(|c| c.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Solves `Q X = P` by LU with partial pivoting.
fn solve(q: &Array2<f64>, p: &Array2<f64>) -> Result<Array2<f64>> {
    let n = q.nrows();
    let mut a = q.clone();
    let mut b = p.clone();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[[i, col]].abs().total_cmp(&a[[j, col]].abs()))
            .unwrap_or(col);
        if a[[pivot, col]].abs() < f64::MIN_POSITIVE {
            return Err(Error::Numeric("singular Padé denominator".into()));
        }
        if pivot != col {
            for k in 0..n {
                a.swap([pivot, k], [col, k]);
            }
            for k in 0..b.ncols() {
                b.swap([pivot, k], [col, k]);
            }
        }
        for r in col + 1..n {
            let f = a[[r, col]] / a[[col, col]];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[[r, k]] -= f * a[[col, k]];
            }
            for k in 0..b.ncols() {
                b[[r, k]] -= f * b[[col, k]];
            }
        }
    }
    for col in (0..n).rev() {
        for k in 0..b.ncols() {
            let mut acc = b[[col, k]];
            for j in col + 1..n {
                acc -= a[[col, j]] * b[[j, k]];
            }
            b[[col, k]] = acc / a[[col, col]];
        }
    }
    Ok(b)
}

/// Matrix exponential by scaling and squaring with a diagonal Padé approximant
/// of degree 3, 5, 7, 9 or 13, whichever is the cheapest accurate choice for
/// the 1-norm of `a`.
pub fn expm(a: &Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Parameter(format!("expm of non-square {:?}", a.dim())));
    }
    let ident: Array2<f64> = Array2::eye(n);
    let norm = one_norm(a);
    if !norm.is_finite() {
        return Err(Error::Numeric("expm of non-finite matrix".into()));
    }
    let a2 = a.dot(a);

    for (m, theta) in THETA {
        if norm <= theta {
            let b: &[f64] = match m {
                3 => &PADE3,
                5 => &PADE5,
                7 => &PADE7,
                _ => &PADE9,
            };
            let mut odd = &ident * b[1];
            let mut even = &ident * b[0];
            let mut power = ident.clone();
            for k in 1..=m / 2 {
                power = power.dot(&a2);
                odd = odd + &power * b[2 * k + 1];
                even = even + &power * b[2 * k];
            }
            let u = a.dot(&odd);
            return solve(&(&even - &u), &(&even + &u));
        }
    }

    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let scale = 2f64.powi(-s);
    let a1 = a * scale;
    let a2 = &a2 * (scale * scale);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);
    let b = &PADE13;
    let inner_u = &a6 * b[13] + &a4 * b[11] + &a2 * b[9];
    let u = a1.dot(&(a6.dot(&inner_u) + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &ident * b[1]));
    let inner_v = &a6 * b[12] + &a4 * b[10] + &a2 * b[8];
    let v = a6.dot(&inner_v) + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &ident * b[0];
    let mut r = solve(&(&v - &u), &(&v + &u))?;
    for _ in 0..s {
        r = r.dot(&r);
    }
    Ok(r)
}

/// `exp(−p·L̂)` through the Padé path.
pub fn heat_kernel_pade(laplacian: &Array2<f64>, p: f64) -> Result<Array2<f64>> {
    if !(p >= 0.0) || !p.is_finite() {
        return Err(Error::Parameter(format!("diffusion time must be >= 0, got {p}")));
    }
    expm(&(laplacian * -p))
}
