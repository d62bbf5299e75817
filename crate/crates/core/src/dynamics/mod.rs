//! Geodesics of the elastic metric on polygons: the geodesic equation in
//! Lagrangian form, Hamilton's equations for the extended cometric, the
//! exponential and logarithm maps, and conserved-quantity monitors.

mod integrator;
mod shooting;

pub use integrator::{
    exp_map, integrate_hamiltonian, integrate_lagrangian, IntegratorConfig, Scheme,
};
#[allow(unused_imports)]
pub(crate) use integrator::run;
pub use shooting::{geodesic_distance, log_map, LogResult, ShootingConfig};

use crate::curve::{
    ds_antiderivative_unchecked, inf_norm, pi0, Covector, EdgeField, Polygon, VertexField,
};
use crate::error::{Error, Result};
use crate::metric::{metric, momentum};

/// A point of phase space in one of the three charts.
#[derive(Debug, Clone, PartialEq)]
pub enum GeodesicState {
    /// Mean-zero polygon and mean-zero velocity `c_t`.
    Lagrangian { c: Polygon, v: VertexField },
    /// Mean-zero polygon and unconstrained momentum.
    Hamiltonian { c: Polygon, a: Covector },
    /// Landmark positions and momenta for the Gaussian-kernel flow.
    Landmark { q: VertexField, p: Covector },
}

impl GeodesicState {
    /// Vertex or landmark positions.
    pub fn positions(&self) -> &[f64] {
        match self {
            GeodesicState::Lagrangian { c, .. } | GeodesicState::Hamiltonian { c, .. } => {
                c.vertices()
            }
            GeodesicState::Landmark { q, .. } => q.values(),
        }
    }

    pub fn grid(&self) -> crate::curve::Grid {
        match self {
            GeodesicState::Lagrangian { c, .. } | GeodesicState::Hamiltonian { c, .. } => c.grid(),
            GeodesicState::Landmark { q, .. } => q.grid(),
        }
    }
}

/// Monitors recorded with every stored sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    /// `G_c(c_t, c_t)`, or `2H` in the momentum charts.
    pub energy: f64,
    /// Total length of the closed polygon through the positions.
    pub length: f64,
    pub min_edge: f64,
    /// `|sum_i c^i|_inf`.
    pub vertex_sum: f64,
    /// `sum_i alpha^i`.
    pub total_momentum: Vec<f64>,
    /// Smallest distance between any two landmarks (landmark chart only).
    pub min_pair_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: GeodesicState,
    pub diagnostics: Diagnostics,
}

/// Why and when an integration stopped early.
#[derive(Debug, Clone, PartialEq)]
pub struct Abort {
    pub time: f64,
    pub error: Error,
}

/// Stored samples in increasing time. On early abort the last sample is the
/// last valid state reached.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub abort: Option<Abort>,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory has at least the initial sample")
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }
}

/// `Gamma_c(u, u) = G(c,u) u - 1/2 G(u,u) c + D_s^{-1} pi_0(<D_s c, D_s u> D_s u - 1/2 |D_s u|^2 D_s c)`.
/// The geodesic equation reads `c_tt = Gamma_c(c_t, c_t)`.
pub fn christoffel(c: &Polygon, h: &VertexField) -> Result<VertexField> {
    assert_eq!(c.grid(), h.grid(), "grid mismatch");
    c.require_mean_zero()?;
    let residual = inf_norm(&h.sum());
    if residual > crate::curve::MEAN_ZERO_TOL {
        return Err(Error::NotMeanZero { residual });
    }
    Ok(VertexField::flagged(c.grid(), christoffel_values(c, h.values())))
}

pub(crate) fn christoffel_values(c: &Polygon, u: &[f64]) -> Vec<f64> {
    let grid = c.grid();
    let (n, d) = (grid.n(), grid.d());
    let l = c.edge_lengths();
    let x = c.vertices();
    let mut w = vec![0.0; n * d];
    let mut g_cu = 0.0;
    let mut g_uu = 0.0;
    let mut e = vec![0.0; d];
    let mut du = vec![0.0; d];
    for i in 0..n {
        let j = grid.next(i);
        for m in 0..d {
            e[m] = x[j * d + m] - x[i * d + m];
            du[m] = u[j * d + m] - u[i * d + m];
        }
        let e_du: f64 = e.iter().zip(&du).map(|(a, b)| a * b).sum();
        let du_du: f64 = du.iter().map(|a| a * a).sum();
        g_cu += e_du / l[i];
        g_uu += du_du / l[i];
        let l3 = l[i] * l[i] * l[i];
        for m in 0..d {
            w[i * d + m] = (e_du * du[m] - 0.5 * du_du * e[m]) / l3;
        }
    }
    let lc = c.total_length();
    g_cu /= lc;
    g_uu /= lc;
    let w = pi0(c, &EdgeField::from_raw(grid, w));
    let third = ds_antiderivative_unchecked(c, w.values());
    third
        .values()
        .iter()
        .enumerate()
        .map(|(idx, t)| g_cu * u[idx] - 0.5 * g_uu * x[idx] + t)
        .collect()
}

/// `|a - Gamma_c(v, v)|_inf`; zero exactly on solutions of the geodesic equation.
pub fn geodesic_residual(c: &Polygon, v: &VertexField, a: &VertexField) -> Result<f64> {
    assert_eq!(c.grid(), a.grid(), "grid mismatch");
    Ok(christoffel(c, v)?.max_abs_diff(a))
}

/// Momentum `G_{c(t)} c_t(t)` at every stored sample of a Lagrangian trajectory.
pub fn soliton_momentum(traj: &Trajectory) -> Result<Vec<Covector>> {
    traj.samples
        .iter()
        .map(|s| match &s.state {
            GeodesicState::Lagrangian { c, v } => Ok(momentum(c, v)),
            _ => Err(Error::InvalidState("soliton momentum needs a Lagrangian trajectory".into())),
        })
        .collect()
}

pub(crate) fn lagrangian_diagnostics(c: &Polygon, v: &VertexField) -> Diagnostics {
    Diagnostics {
        energy: metric(c, v, v),
        length: c.total_length(),
        min_edge: c.min_edge_length(),
        vertex_sum: inf_norm(&c.vertex_sum()),
        total_momentum: momentum(c, v).sum(),
        min_pair_distance: None,
    }
}
