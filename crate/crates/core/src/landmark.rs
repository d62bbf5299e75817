//! Gaussian-kernel LDDMM cometric on landmark tuples and its Hamiltonian
//! flow, next to the elastic extended cometric evaluated on the polygon
//! through the same points.
//!
//! The elastic weights depend only on consecutive distances; the Gaussian
//! kernel couples every pair of landmarks by their distance.

use nalgebra::DMatrix;

use crate::curve::{dot, flatten_points, Covector, Grid, Polygon, VertexField};
use crate::dynamics::{run, Diagnostics, GeodesicState, IntegratorConfig, Sample, Trajectory};
use crate::error::{Error, Result};
use crate::metric::{extended_cometric_matrix, KernelMatrix};

/// Relative separation threshold: landmarks must stay further apart than
/// `LANDMARK_GUARD_REL` times the configuration diameter.
pub const LANDMARK_GUARD_REL: f64 = 1e-8;

/// Pairwise distinct points with a Gaussian kernel width.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkConfig {
    points: VertexField,
    sigma: f64,
}

impl LandmarkConfig {
    pub fn new(grid: Grid, values: Vec<f64>, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!("sigma must be positive, got {sigma}")));
        }
        let points = VertexField::new(grid, values)?;
        check_separation(grid, points.values())?;
        Ok(LandmarkConfig { points, sigma })
    }

    pub fn from_points<P: AsRef<[f64]>>(points: &[P], sigma: f64) -> Result<Self> {
        let (grid, flat) = flatten_points(points, Grid::for_landmarks)?;
        Self::new(grid, flat, sigma)
    }

    pub fn grid(&self) -> Grid {
        self.points.grid()
    }

    pub fn points(&self) -> &VertexField {
        &self.points
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn min_pair_distance(&self) -> f64 {
        pair_stats(self.grid(), self.points.values()).0
    }
}

/// `(min distance, diameter, argmin pair)` over all pairs.
fn pair_stats(grid: Grid, q: &[f64]) -> (f64, f64, (usize, usize)) {
    let (n, d) = (grid.n(), grid.d());
    let mut min = f64::INFINITY;
    let mut max: f64 = 0.0;
    let mut arg = (0, 0);
    for i in 0..n {
        for j in i + 1..n {
            let r = dist(&q[i * d..(i + 1) * d], &q[j * d..(j + 1) * d]);
            if r < min {
                min = r;
                arg = (i, j);
            }
            max = max.max(r);
        }
    }
    (min, max, arg)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn check_separation(grid: Grid, q: &[f64]) -> Result<()> {
    if grid.n() < 2 {
        return Ok(());
    }
    let (min, diameter, (i, j)) = pair_stats(grid, q);
    if !(min > LANDMARK_GUARD_REL * diameter) || min == 0.0 {
        return Err(Error::DegenerateLandmarks { i, j, distance: min });
    }
    Ok(())
}

fn gaussian_weights(grid: Grid, q: &[f64], sigma: f64) -> DMatrix<f64> {
    let d = grid.d();
    let s2 = 2.0 * sigma * sigma;
    DMatrix::from_fn(grid.n(), grid.n(), |i, j| {
        let r = dist(&q[i * d..(i + 1) * d], &q[j * d..(j + 1) * d]);
        (-r * r / s2).exp()
    })
}

/// `K^H_ij = exp(-|q^i - q^j|^2 / (2 sigma^2)) I_d`.
pub fn lddmm_kernel_matrix(q: &LandmarkConfig) -> KernelMatrix {
    KernelMatrix::new(q.grid(), gaussian_weights(q.grid(), q.points.values(), q.sigma))
}

/// Elastic extended cometric weights of the closed polygon through the landmarks.
pub fn elastic_kernel_weights(q: &LandmarkConfig) -> Result<DMatrix<f64>> {
    let c = Polygon::new(q.grid(), q.points.values().to_vec())?;
    Ok(extended_cometric_matrix(&c).weights().clone())
}

/// `H(q, p) = 1/2 sum_ij K^H_ij <p^i, p^j>`.
pub fn lddmm_hamiltonian(q: &LandmarkConfig, p: &Covector) -> f64 {
    0.5 * lddmm_kernel_matrix(q).bilinear(p, p)
}

/// `dH/dq^i = -sum_j <p^i, p^j> K_ij (q^i - q^j) / sigma^2`.
pub fn lddmm_hamiltonian_gradient(q: &LandmarkConfig, p: &Covector) -> VertexField {
    assert_eq!(q.grid(), p.grid(), "grid mismatch");
    VertexField::from_raw(q.grid(), gradient_values(q.grid(), q.points.values(), p.values(), q.sigma))
}

fn gradient_values(grid: Grid, q: &[f64], p: &[f64], sigma: f64) -> Vec<f64> {
    let (n, d) = (grid.n(), grid.d());
    let k = gaussian_weights(grid, q, sigma);
    let inv_s2 = 1.0 / (sigma * sigma);
    let mut out = vec![0.0; n * d];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let w = dot(&p[i * d..(i + 1) * d], &p[j * d..(j + 1) * d]) * k[(i, j)] * inv_s2;
            for m in 0..d {
                out[i * d + m] -= w * (q[i * d + m] - q[j * d + m]);
            }
        }
    }
    out
}

/// Integrates `q_t = K^H(q) p`, `p_t = -dH/dq`. Aborts with
/// `DegenerateLandmarks` if two landmarks (nearly) meet.
pub fn lddmm_hamiltonian_flow(q0: &LandmarkConfig, p0: &Covector, cfg: &IntegratorConfig) -> Result<Trajectory> {
    assert_eq!(q0.grid(), p0.grid(), "grid mismatch");
    let grid = q0.grid();
    let sigma = q0.sigma;
    let y0 = [q0.points.values(), p0.values()].concat();
    run(
        y0,
        cfg,
        |y| {
            let (q, p) = y.split_at(y.len() / 2);
            check_separation(grid, q)?;
            let k = KernelMatrix::new(grid, gaussian_weights(grid, q, sigma));
            let qt = k.apply(&Covector::from_raw(grid, p.to_vec()));
            let grad = gradient_values(grid, q, p, sigma);
            Ok(qt.values().iter().copied().chain(grad.iter().map(|g| -g)).collect())
        },
        |t, y| {
            let (q, p) = y.split_at(y.len() / 2);
            check_separation(grid, q)?;
            let q = VertexField::from_raw(grid, q.to_vec());
            let p = Covector::from_raw(grid, p.to_vec());
            let k = KernelMatrix::new(grid, gaussian_weights(grid, q.values(), sigma));
            let n = grid.n();
            let edges: Vec<f64> = (0..n)
                .map(|i| {
                    let j = grid.next(i);
                    dist(q.at(i), q.at(j))
                })
                .collect();
            let diagnostics = Diagnostics {
                energy: k.bilinear(&p, &p),
                length: if n > 1 { edges.iter().sum() } else { 0.0 },
                min_edge: if n > 1 { edges.iter().cloned().fold(f64::INFINITY, f64::min) } else { 0.0 },
                vertex_sum: crate::curve::inf_norm(&q.sum()),
                total_momentum: p.sum(),
                min_pair_distance: (n > 1).then(|| pair_stats(grid, q.values()).0),
            };
            Ok(Sample { t, state: GeodesicState::Landmark { q, p }, diagnostics })
        },
    )
}
