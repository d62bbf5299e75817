use serde::{Deserialize, Serialize};

use super::{christoffel_values, lagrangian_diagnostics, Abort, Diagnostics, GeodesicState, Sample, Trajectory};
use crate::curve::{inf_norm, Covector, Grid, Polygon, VertexField, MEAN_ZERO_TOL};
use crate::error::{Error, Result};
use crate::metric::{extended_cometric_matrix, hamiltonian_gradient_c};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Classical fourth-order Runge-Kutta with a fixed step.
    Rk4Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    /// Store every `sample_stride`-th step (the initial and final states are always stored).
    pub sample_stride: usize,
    /// Multiplier on the immersion threshold `1e-8 * max(1, l_c)`.
    pub edge_guard: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig { scheme: Scheme::Rk4Fixed, dt: 1e-3, t_end: 1.0, sample_stride: 1, edge_guard: 1.0 }
    }
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        IntegratorConfig { dt, t_end, ..Default::default() }
    }

    pub fn with_stride(self, sample_stride: usize) -> Self {
        IntegratorConfig { sample_stride, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidConfig(format!("t_end must be positive, got {}", self.t_end)));
        }
        if self.sample_stride == 0 {
            return Err(Error::InvalidConfig("sample_stride must be at least 1".into()));
        }
        if !(self.edge_guard > 0.0 && self.edge_guard.is_finite()) {
            return Err(Error::InvalidConfig(format!("edge_guard must be positive, got {}", self.edge_guard)));
        }
        Ok(())
    }

    /// Number of steps; the last one is shortened to land exactly on `t_end`.
    pub fn steps(&self) -> usize {
        ((self.t_end / self.dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize
    }
}

fn axpy(y: &[f64], s: f64, k: &[f64]) -> Vec<f64> {
    y.iter().zip(k).map(|(a, b)| a + s * b).collect()
}

/// Fixed-step RK4 over a flat state vector. `rhs` may fail (the state left
/// its admissible set); the run then stops and records the abort.
pub(crate) fn run<R, S>(y0: Vec<f64>, cfg: &IntegratorConfig, mut rhs: R, mut sample: S) -> Result<Trajectory>
where
    R: FnMut(&[f64]) -> Result<Vec<f64>>,
    S: FnMut(f64, &[f64]) -> Result<Sample>,
{
    cfg.validate()?;
    let steps = cfg.steps();
    let mut samples = vec![sample(0.0, &y0)?];
    let mut y = y0;
    let mut t = 0.0;
    // last state known to be admissible and whether it is already stored
    let mut good = (0.0, y.clone());
    let mut good_stored = true;
    let mut abort = None;
    for k in 0..steps {
        let last = k + 1 == steps;
        let h = if last { cfg.t_end - t } else { cfg.dt };
        let k1 = match rhs(&y) {
            Ok(k1) => {
                if good.0 != t {
                    good = (t, y.clone());
                    good_stored = false;
                }
                k1
            }
            Err(error) => {
                abort = Some(Abort { time: t, error });
                break;
            }
        };
        let step = (|| {
            let k2 = rhs(&axpy(&y, 0.5 * h, &k1))?;
            let k3 = rhs(&axpy(&y, 0.5 * h, &k2))?;
            let k4 = rhs(&axpy(&y, h, &k3))?;
            Ok::<_, Error>(
                (0..y.len())
                    .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                    .collect::<Vec<f64>>(),
            )
        })();
        let y1 = match step {
            Ok(y1) => y1,
            Err(error) => {
                abort = Some(Abort { time: t, error });
                break;
            }
        };
        let t1 = if last { cfg.t_end } else { (k + 1) as f64 * cfg.dt };
        if last || (k + 1) % cfg.sample_stride == 0 {
            match sample(t1, &y1) {
                Ok(s) => {
                    samples.push(s);
                    good = (t1, y1.clone());
                    good_stored = true;
                }
                Err(error) => {
                    abort = Some(Abort { time: t1, error });
                    break;
                }
            }
        }
        y = y1;
        t = t1;
    }
    if abort.is_some() && !good_stored {
        samples.push(sample(good.0, &good.1)?);
    }
    Ok(Trajectory { samples, abort })
}

fn split(y: &[f64]) -> (&[f64], &[f64]) {
    y.split_at(y.len() / 2)
}

fn polygon(grid: Grid, x: &[f64], guard: f64) -> Result<Polygon> {
    Polygon::with_edge_guard(grid, x.to_vec(), guard)
}

fn require_mean_zero_field(h: &VertexField) -> Result<()> {
    let residual = inf_norm(&h.sum());
    if residual > MEAN_ZERO_TOL {
        return Err(Error::NotMeanZero { residual });
    }
    Ok(())
}

/// Integrates `c_tt = Gamma_c(c_t, c_t)` from a Lagrangian state.
pub fn integrate_lagrangian(s0: &GeodesicState, cfg: &IntegratorConfig) -> Result<Trajectory> {
    let GeodesicState::Lagrangian { c, v } = s0 else {
        return Err(Error::InvalidState("expected a Lagrangian state".into()));
    };
    assert_eq!(c.grid(), v.grid(), "grid mismatch");
    c.require_mean_zero()?;
    require_mean_zero_field(v)?;
    let grid = c.grid();
    let guard = cfg.edge_guard;
    let y0 = [c.vertices(), v.values()].concat();
    run(
        y0,
        cfg,
        |y| {
            let (x, u) = split(y);
            let c = polygon(grid, x, guard)?;
            Ok([u, &christoffel_values(&c, u)].concat())
        },
        |t, y| {
            let (x, u) = split(y);
            let c = polygon(grid, x, guard)?;
            let v = VertexField::from_raw(grid, u.to_vec());
            let diagnostics = lagrangian_diagnostics(&c, &v);
            Ok(Sample { t, state: GeodesicState::Lagrangian { c, v }, diagnostics })
        },
    )
}

/// Integrates `c_t = K_c a`, `a_t = -dH/dc` from a Hamiltonian state.
pub fn integrate_hamiltonian(s0: &GeodesicState, cfg: &IntegratorConfig) -> Result<Trajectory> {
    let GeodesicState::Hamiltonian { c, a } = s0 else {
        return Err(Error::InvalidState("expected a Hamiltonian state".into()));
    };
    assert_eq!(c.grid(), a.grid(), "grid mismatch");
    c.require_mean_zero()?;
    let grid = c.grid();
    let guard = cfg.edge_guard;
    let y0 = [c.vertices(), a.values()].concat();
    run(
        y0,
        cfg,
        |y| {
            let (x, p) = split(y);
            let c = polygon(grid, x, guard)?;
            let a = Covector::from_raw(grid, p.to_vec());
            let ct = extended_cometric_matrix(&c).apply(&a);
            let grad = hamiltonian_gradient_c(&c, &a);
            Ok(ct.values().iter().copied().chain(grad.values().iter().map(|g| -g)).collect())
        },
        |t, y| {
            let (x, p) = split(y);
            let c = polygon(grid, x, guard)?;
            let a = Covector::from_raw(grid, p.to_vec());
            let diagnostics = Diagnostics {
                energy: extended_cometric_matrix(&c).bilinear(&a, &a),
                length: c.total_length(),
                min_edge: c.min_edge_length(),
                vertex_sum: inf_norm(&c.vertex_sum()),
                total_momentum: a.sum(),
                min_pair_distance: None,
            };
            Ok(Sample { t, state: GeodesicState::Hamiltonian { c, a }, diagnostics })
        },
    )
}

/// Endpoint at `t = 1` of the geodesic with initial velocity `h`. Only `dt`
/// and `edge_guard` of `cfg` are used.
pub fn exp_map(c: &Polygon, h: &VertexField, cfg: &IntegratorConfig) -> Result<Polygon> {
    let cfg = IntegratorConfig { t_end: 1.0, sample_stride: usize::MAX, ..*cfg };
    let traj = integrate_lagrangian(&GeodesicState::Lagrangian { c: c.clone(), v: h.clone() }, &cfg)?;
    if let Some(abort) = traj.abort {
        return Err(abort.error);
    }
    match traj.samples.into_iter().last().map(|s| s.state) {
        Some(GeodesicState::Lagrangian { c, .. }) => Ok(c),
        _ => unreachable!("Lagrangian integration yields Lagrangian samples"),
    }
}
