//! Discrete basic mapping `Phi(e, f) = 1/2 int (e + i f)^2 dtheta` from
//! square-root velocity pairs to planar polygons.
//!
//! With `e`, `f` constant on each grid cell, `Phi` lands exactly on polygons:
//! edge `i` is `1/2 (e_i + i f_i)^2 * 2 pi / n`, so its length is
//! `1/2 (e_i^2 + f_i^2) * 2 pi / n`. Closedness of the polygon is exactly the
//! pair of constraints `sum (e^2 - f^2) = sum e f = 0`.

use serde::{Deserialize, Serialize};

use crate::curve::{edge_guard, pi1, Grid, Polygon, VertexField};
use crate::error::{Error, Result};
use crate::metric::metric;

/// Relative tolerance on the closedness constraints and their linearisation.
pub const CONSTRAINT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SqrtVelocityPair {
    grid: Grid,
    e: Vec<f64>,
    f: Vec<f64>,
}

impl SqrtVelocityPair {
    /// Checks both closedness constraints and that every induced edge is longer
    /// than the immersion threshold.
    pub fn new(e: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        if e.len() != f.len() {
            return Err(Error::ShapeMismatch { expected: e.len(), actual: f.len() });
        }
        let grid = Grid::new(e.len(), 2)?;
        if let Some(i) = e.iter().chain(&f).position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let (c1, c2, norm) = constraints(&e, &f);
        if c1.abs() > CONSTRAINT_TOL * norm || c2.abs() > CONSTRAINT_TOL * norm {
            return Err(Error::ConstraintViolation(format!(
                "closedness: sum(e^2 - f^2) = {c1:e}, sum(e f) = {c2:e}, scale {norm:e}"
            )));
        }
        let s = SqrtVelocityPair { grid, e, f };
        let lengths = s.edge_lengths();
        let guard = edge_guard(lengths.iter().sum());
        if let Some(index) = lengths.iter().position(|&l| !(l > guard)) {
            return Err(Error::DegenerateEdge { index, length: lengths[index], guard });
        }
        Ok(s)
    }

    /// Discrete Stiefel normalisation: Gram-Schmidt in `L2(dtheta)` so that
    /// `int e^2 = int f^2 = 1` and `int e f = 0`. The image then has unit length.
    pub fn stiefel(e: &[f64], f: &[f64]) -> Result<Self> {
        if e.len() != f.len() {
            return Err(Error::ShapeMismatch { expected: e.len(), actual: f.len() });
        }
        let h = Grid::new(e.len(), 2)?.spacing();
        let inner = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * h };
        let ne = inner(e, e).sqrt();
        let e: Vec<f64> = e.iter().map(|x| x / ne).collect();
        let p = inner(&e, f);
        let f: Vec<f64> = f.iter().zip(&e).map(|(y, x)| y - p * x).collect();
        let nf = inner(&f, &f).sqrt();
        if !(ne > 0.0 && nf > 0.0) {
            return Err(Error::ConstraintViolation("pair is linearly dependent".into()));
        }
        Self::new(e, f.iter().map(|y| y / nf).collect())
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn e(&self) -> &[f64] {
        &self.e
    }

    pub fn f(&self) -> &[f64] {
        &self.f
    }

    pub fn negated(&self) -> Self {
        SqrtVelocityPair {
            grid: self.grid,
            e: self.e.iter().map(|x| -x).collect(),
            f: self.f.iter().map(|x| -x).collect(),
        }
    }

    /// `1/2 (e_i^2 + f_i^2) * 2 pi / n`.
    pub fn edge_lengths(&self) -> Vec<f64> {
        let h = self.grid.spacing();
        self.e.iter().zip(&self.f).map(|(e, f)| 0.5 * (e * e + f * f) * h).collect()
    }

    /// Orthogonal projection of `(de, df)` onto the tangent space of the
    /// constraint set. The constraint gradients `(e, -f)` and `(f, e)` are
    /// orthogonal with equal norms, so this is a two-term correction.
    pub fn project_tangent(&self, de: &[f64], df: &[f64]) -> (Vec<f64>, Vec<f64>) {
        assert_eq!(de.len(), self.e.len(), "length mismatch");
        assert_eq!(df.len(), self.e.len(), "length mismatch");
        let norm2: f64 = self.e.iter().zip(&self.f).map(|(e, f)| e * e + f * f).sum();
        let (t1, t2) = linearized(&self.e, &self.f, de, df);
        let (a, b) = (t1 / norm2, t2 / norm2);
        let pe = (0..de.len()).map(|i| de[i] - a * self.e[i] - b * self.f[i]).collect();
        let pf = (0..df.len()).map(|i| df[i] + a * self.f[i] - b * self.e[i]).collect();
        (pe, pf)
    }
}

/// `(sum e^2 - f^2, sum e f, sum e^2 + f^2)`.
fn constraints(e: &[f64], f: &[f64]) -> (f64, f64, f64) {
    let mut c = (0.0, 0.0, 0.0);
    for (x, y) in e.iter().zip(f) {
        c.0 += x * x - y * y;
        c.1 += x * y;
        c.2 += x * x + y * y;
    }
    c
}

/// `(sum e de - f df, sum e df + f de)`.
fn linearized(e: &[f64], f: &[f64], de: &[f64], df: &[f64]) -> (f64, f64) {
    let mut t = (0.0, 0.0);
    for i in 0..e.len() {
        t.0 += e[i] * de[i] - f[i] * df[i];
        t.1 += e[i] * df[i] + f[i] * de[i];
    }
    t
}

/// Partial sums of edge vectors starting from the origin, re-centred.
fn integrate_edges(grid: Grid, edges: &[[f64; 2]]) -> Vec<f64> {
    let mut v = Vec::with_capacity(grid.len());
    let mut x = [0.0, 0.0];
    for edge in edges {
        v.extend_from_slice(&x);
        x[0] += edge[0];
        x[1] += edge[1];
    }
    pi1(&VertexField::from_raw(grid, v)).into_values()
}

/// The polygon `Phi(s)` in the mean-zero chart.
pub fn phi(s: &SqrtVelocityPair) -> Result<Polygon> {
    let h = s.grid.spacing();
    let edges: Vec<[f64; 2]> = s
        .e
        .iter()
        .zip(&s.f)
        .map(|(e, f)| [0.5 * (e * e - f * f) * h, e * f * h])
        .collect();
    Polygon::new_mean_zero(s.grid, integrate_edges(s.grid, &edges))
}

/// `T Phi (de, df) = int (e + i f)(de + i df) dtheta`, re-centred.
pub fn phi_tangent(s: &SqrtVelocityPair, de: &[f64], df: &[f64]) -> Result<VertexField> {
    let n = s.grid.n();
    if de.len() != n || df.len() != n {
        return Err(Error::ShapeMismatch { expected: n, actual: de.len().min(df.len()) });
    }
    let (t1, t2) = linearized(&s.e, &s.f, de, df);
    let scale = constraints(&s.e, &s.f).2.sqrt() * constraints(de, df).2.sqrt();
    if t1.abs() > CONSTRAINT_TOL * scale || t2.abs() > CONSTRAINT_TOL * scale {
        return Err(Error::ConstraintViolation(format!(
            "tangent: sum(e de - f df) = {t1:e}, sum(e df + f de) = {t2:e}"
        )));
    }
    let h = s.grid.spacing();
    let edges: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            [
                (s.e[i] * de[i] - s.f[i] * df[i]) * h,
                (s.e[i] * df[i] + s.f[i] * de[i]) * h,
            ]
        })
        .collect();
    Ok(VertexField::flagged(s.grid, integrate_edges(s.grid, &edges)))
}

/// Elastic energy of the pushed-forward tangent, the flat energy of the
/// tangent pair, and the length of `Phi(s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsometryReport {
    pub pullback: f64,
    pub flat: f64,
    pub length: f64,
}

impl IsometryReport {
    /// `pullback / flat`, or `None` for a zero tangent.
    pub fn ratio(&self) -> Option<f64> {
        (self.flat > 0.0).then(|| self.pullback / self.flat)
    }
}

pub fn pullback_isometry_defect(s: &SqrtVelocityPair, de: &[f64], df: &[f64]) -> Result<IsometryReport> {
    let c = phi(s)?;
    let t = phi_tangent(s, de, df)?;
    let flat = constraints(de, df).2 * s.grid.spacing();
    Ok(IsometryReport { pullback: metric(&c, &t, &t), flat, length: c.total_length() })
}
