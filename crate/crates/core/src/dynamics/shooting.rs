use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{exp_map, IntegratorConfig};
use crate::curve::{Grid, Polygon, VertexField};
use crate::error::{Error, Result};
use crate::metric::metric;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootingConfig {
    pub integrator: IntegratorConfig,
    /// Target `|exp(c0, h) - c1|_inf`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        ShootingConfig { integrator: IntegratorConfig::default(), tol: 1e-8, max_iter: 100 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogResult {
    pub velocity: VertexField,
    /// Accepted Gauss-Newton updates.
    pub iterations: usize,
    /// Final `|exp(c0, h) - c1|_inf`.
    pub residual: f64,
    /// Residual before each update and after the last.
    pub history: Vec<f64>,
}

/// Orthonormal basis of the mean-zero subspace of `R^{n x d}` (Helmert
/// contrasts tensored with the coordinate axes), as columns.
fn mean_zero_basis(grid: Grid) -> DMatrix<f64> {
    let (n, d) = (grid.n(), grid.d());
    let mut b = DMatrix::zeros(n * d, (n - 1) * d);
    for k in 1..n {
        let norm = ((k * (k + 1)) as f64).sqrt();
        for m in 0..d {
            let col = (k - 1) * d + m;
            for i in 0..k {
                b[(i * d + m, col)] = 1.0 / norm;
            }
            b[(k * d + m, col)] = -(k as f64) / norm;
        }
    }
    b
}

/// Solves `exp(c0, h) = c1` for a mean-zero `h` by damped Gauss-Newton with a
/// forward-difference Jacobian in mean-zero coordinates.
pub fn log_map(c0: &Polygon, c1: &Polygon, cfg: &ShootingConfig) -> Result<LogResult> {
    assert_eq!(c0.grid(), c1.grid(), "grid mismatch");
    c0.require_mean_zero()?;
    c1.require_mean_zero()?;
    cfg.integrator.validate()?;
    let grid = c0.grid();
    let basis = mean_zero_basis(grid);
    let target = DVector::from_column_slice(c1.vertices());

    let shoot = |z: &DVector<f64>| -> Result<(DVector<f64>, f64)> {
        let h = VertexField::flagged(grid, (&basis * z).as_slice().to_vec());
        let end = exp_map(c0, &h, &cfg.integrator)?;
        let diff = DVector::from_column_slice(end.vertices()) - &target;
        Ok((basis.transpose() * &diff, diff.amax()))
    };

    let mut z = basis.transpose() * (&target - DVector::from_column_slice(c0.vertices()));
    let (mut r, mut res) = shoot(&z)?;
    let mut history = vec![res];
    let mut iterations = 0;
    while res > cfg.tol {
        if iterations >= cfg.max_iter {
            return Err(Error::NoConvergence { iterations, residual: res });
        }
        let dim = z.len();
        let step = 1e-6 * (1.0 + z.norm());
        let mut jac = DMatrix::zeros(dim, dim);
        for j in 0..dim {
            let mut zj = z.clone();
            zj[j] += step;
            let (rj, _) = shoot(&zj)?;
            jac.set_column(j, &((rj - &r) / step));
        }
        let Some(delta) = jac.lu().solve(&(-&r)) else {
            return Err(Error::NoConvergence { iterations, residual: res });
        };
        let norm = r.norm();
        let mut damping = 1.0;
        let mut accepted = None;
        for _ in 0..=10 {
            let trial = &z + &delta * damping;
            match shoot(&trial) {
                Ok((rt, rest)) if rt.norm() < norm => {
                    accepted = Some((trial, rt, rest));
                    break;
                }
                Ok(_) | Err(Error::DegenerateEdge { .. }) => damping *= 0.5,
                Err(e) => return Err(e),
            }
        }
        let Some((zt, rt, rest)) = accepted else {
            return Err(Error::NoConvergence { iterations, residual: res });
        };
        z = zt;
        r = rt;
        res = rest;
        iterations += 1;
        history.push(res);
    }
    Ok(LogResult {
        velocity: VertexField::flagged(grid, (&basis * &z).as_slice().to_vec()),
        iterations,
        residual: res,
        history,
    })
}

/// `sqrt(G_{c0}(h, h))` with `h = log(c0, c1)`; energy is conserved along the
/// geodesic, so this is its length.
pub fn geodesic_distance(c0: &Polygon, c1: &Polygon, cfg: &ShootingConfig) -> Result<f64> {
    let h = log_map(c0, c1, cfg)?.velocity;
    Ok(metric(c0, &h, &h).sqrt())
}
