//! Curve generators: the analytic diamond geodesic, regular polygons and
//! band-limited Fourier curves.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::curve::{pi1, Grid, Polygon, VertexField};
use crate::error::{Error, Result};

/// The four-vertex geodesic `c1 = -c3 = (sin t, 0)`, `c2 = -c4 = (0, cos t)`.
///
/// Returns `(c(t), c_t(t), c_tt(t))`. Every edge has unit length for all `t`,
/// so `c(t)` is a valid immersion even where non-adjacent vertices meet.
pub fn gen_diamond(t: f64) -> (Polygon, VertexField, VertexField) {
    let (s, co) = t.sin_cos();
    let grid = Grid::new(4, 2).expect("static grid");
    let c = vec![s, 0.0, 0.0, co, -s, 0.0, 0.0, -co];
    let v = vec![co, 0.0, 0.0, -s, -co, 0.0, 0.0, s];
    let a = c.iter().map(|x| -x).collect();
    (
        Polygon::new_mean_zero(grid, c).expect("diamond edges have unit length"),
        VertexField::new_mean_zero(grid, v).expect("antipodal symmetry"),
        VertexField::new_mean_zero(grid, a).expect("antipodal symmetry"),
    )
}

/// Regular planar `n`-gon with circumradius `radius`; vertex `i` sits at angle
/// `2 pi i / n + pi / n`, so `n = 4`, `radius = sqrt 2` is the square `(+-1, +-1)`.
pub fn gen_regular_polygon(n: usize, radius: f64) -> Result<Polygon> {
    if n < 3 {
        return Err(Error::InvalidGrid(format!("regular polygon needs n >= 3, got {n}")));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidConfig(format!("radius must be positive, got {radius}")));
    }
    let grid = Grid::new(n, 2)?;
    let mut v = Vec::with_capacity(2 * n);
    for i in 0..n {
        let t = grid.theta(i) + PI / n as f64;
        v.push(radius * t.cos());
        v.push(radius * t.sin());
    }
    Ok(Polygon::new(grid, v)?.centered())
}

/// `x(theta) = sum_k cos_k[k-1] cos(k theta) + sin_k[k-1] sin(k theta)` in `R^d`,
/// harmonics starting at `k = 1` (no constant term).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierSeries {
    pub cos: Vec<Vec<f64>>,
    pub sin: Vec<Vec<f64>>,
}

impl FourierSeries {
    /// Circle of radius `r` in the first two coordinates of `R^d`.
    pub fn circle(r: f64, d: usize) -> Self {
        let mut a = vec![0.0; d];
        let mut b = vec![0.0; d];
        a[0] = r;
        b[1] = r;
        FourierSeries { cos: vec![a], sin: vec![b] }
    }

    pub fn dim(&self) -> usize {
        self.cos.first().or(self.sin.first()).map_or(0, Vec::len)
    }

    fn check(&self) -> Result<usize> {
        let d = self.dim();
        if self.cos.iter().chain(&self.sin).any(|c| c.len() != d) {
            return Err(Error::InvalidConfig("Fourier coefficients differ in dimension".into()));
        }
        Ok(d)
    }

    pub fn eval(&self, theta: f64) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        for (k, a) in self.cos.iter().enumerate() {
            let w = ((k + 1) as f64 * theta).cos();
            x.iter_mut().zip(a).for_each(|(xi, ai)| *xi += w * ai);
        }
        for (k, b) in self.sin.iter().enumerate() {
            let w = ((k + 1) as f64 * theta).sin();
            x.iter_mut().zip(b).for_each(|(xi, bi)| *xi += w * bi);
        }
        x
    }

    /// Samples at the `n` grid parameters, re-centred onto the mean-zero subspace.
    pub fn sample(&self, n: usize) -> Result<VertexField> {
        let d = self.check()?;
        let grid = Grid::new(n, d)?;
        let values = (0..n).flat_map(|i| self.eval(grid.theta(i))).collect();
        Ok(pi1(&VertexField::new(grid, values)?))
    }
}

/// Polygon through the samples of a Fourier curve at the `n` grid parameters.
pub fn gen_fourier_curve(series: &FourierSeries, n: usize) -> Result<Polygon> {
    let h = series.sample(n)?;
    Polygon::new_mean_zero(h.grid(), h.into_values())
}
