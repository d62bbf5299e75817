//! Polygonal closed curves on the uniform grid `theta_i = 2 pi i / n` and the
//! discrete arc-length operators acting on them.
//!
//! All storage is row-major `n x d` (`values[i * d + k]` is coordinate `k`
//! of vertex/edge `i`). Indices are 0-based and wrap modulo `n`: edge `i`
//! joins vertex `i` to vertex `i + 1 mod n`.
//!
//! Three kinds of per-index data live on a grid:
//!
//! * [`VertexField`] - piecewise-linear fields given by their vertex values
//!   (tangent vectors to the curve space);
//! * [`EdgeField`] - piecewise-constant fields given by one value per edge
//!   (e.g. arc-length derivatives);
//! * [`Covector`] - coefficients of a sum of vertex delta distributions,
//!   paired with vertex fields by the Euclidean scalar product.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for mean-zero / sum-zero checks.
pub const MEAN_ZERO_TOL: f64 = 1e-9;

/// Relative immersion threshold: an edge must be longer than
/// `EDGE_GUARD_REL * max(1, total_length)`.
pub const EDGE_GUARD_REL: f64 = 1e-8;

/// Vertex count and ambient dimension of a uniform closed grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    d: usize,
}

impl Grid {
    /// Grid for closed polygons: `n >= 2`, `d >= 2`.
    pub fn new(n: usize, d: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need n >= 2 vertices, got {n}")));
        }
        if d < 2 {
            return Err(Error::InvalidGrid(format!("need dimension d >= 2, got {d}")));
        }
        Ok(Grid { n, d })
    }

    /// Grid for landmark tuples, which may consist of a single point.
    pub fn for_landmarks(n: usize, d: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidGrid("need at least one landmark".into()));
        }
        if d < 2 {
            return Err(Error::InvalidGrid(format!("need dimension d >= 2, got {d}")));
        }
        Ok(Grid { n, d })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of scalars in a field on this grid.
    pub fn len(&self) -> usize {
        self.n * self.d
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Parameter spacing `2 pi / n`.
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    /// Parameter of vertex `i` (0-based).
    pub fn theta(&self, i: usize) -> f64 {
        self.spacing() * i as f64
    }

    #[inline]
    pub fn next(&self, i: usize) -> usize {
        if i + 1 == self.n {
            0
        } else {
            i + 1
        }
    }

    #[inline]
    pub fn prev(&self, i: usize) -> usize {
        if i == 0 {
            self.n - 1
        } else {
            i - 1
        }
    }

    fn check_len(&self, values: &[f64]) -> Result<()> {
        if values.len() != self.len() {
            return Err(Error::ShapeMismatch { expected: self.len(), actual: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(())
    }
}

/// Componentwise sum over all indices, a vector in `R^d`.
pub(crate) fn column_sum(grid: Grid, values: &[f64]) -> Vec<f64> {
    let d = grid.d();
    let mut s = vec![0.0; d];
    for row in values.chunks_exact(d) {
        for (acc, v) in s.iter_mut().zip(row) {
            *acc += v;
        }
    }
    s
}

pub(crate) fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

macro_rules! grid_field {
    ($name:ident) => {
        impl $name {
            pub fn zeros(grid: Grid) -> Self {
                Self::from_raw(grid, vec![0.0; grid.len()])
            }

            pub fn grid(&self) -> Grid {
                self.grid
            }

            pub fn values(&self) -> &[f64] {
                &self.values
            }

            pub fn into_values(self) -> Vec<f64> {
                self.values
            }

            /// The `d` components at index `i`.
            pub fn at(&self, i: usize) -> &[f64] {
                let d = self.grid.d();
                &self.values[i * d..(i + 1) * d]
            }

            /// Sum over all indices.
            pub fn sum(&self) -> Vec<f64> {
                column_sum(self.grid, &self.values)
            }

            pub fn max_abs(&self) -> f64 {
                inf_norm(&self.values)
            }

            /// `|a - b|_inf` over all components.
            pub fn max_abs_diff(&self, other: &Self) -> f64 {
                assert_eq!(self.grid, other.grid, "grid mismatch");
                self.values
                    .iter()
                    .zip(&other.values)
                    .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
            }
        }
    };
}

/// Vertex values `h^1..h^n` of a piecewise-linear field.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexField {
    grid: Grid,
    values: Vec<f64>,
    mean_zero: bool,
}

grid_field!(VertexField);

impl VertexField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        grid.check_len(&values)?;
        Ok(VertexField { grid, values, mean_zero: false })
    }

    /// Validated element of the mean-zero subspace.
    pub fn new_mean_zero(grid: Grid, values: Vec<f64>) -> Result<Self> {
        let mut h = Self::new(grid, values)?;
        let residual = inf_norm(&h.sum());
        if residual > MEAN_ZERO_TOL {
            return Err(Error::NotMeanZero { residual });
        }
        h.mean_zero = true;
        Ok(h)
    }

    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        VertexField { grid, values, mean_zero: false }
    }

    pub(crate) fn flagged(grid: Grid, values: Vec<f64>) -> Self {
        VertexField { grid, values, mean_zero: true }
    }

    /// Declared mean-zero flag.
    pub fn is_flagged_mean_zero(&self) -> bool {
        self.mean_zero
    }

    /// Numerical mean-zero check at [`MEAN_ZERO_TOL`].
    pub fn is_mean_zero(&self) -> bool {
        inf_norm(&self.sum()) <= MEAN_ZERO_TOL
    }

    /// Explicit re-projection onto the mean-zero subspace.
    pub fn projected(&self) -> VertexField {
        pi1(self)
    }

    pub fn scaled(&self, s: f64) -> VertexField {
        VertexField {
            grid: self.grid,
            values: self.values.iter().map(|v| v * s).collect(),
            mean_zero: self.mean_zero,
        }
    }

    /// Euclidean inner product of the vertex coordinates.
    pub fn dot(&self, other: &VertexField) -> f64 {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        dot(&self.values, &other.values)
    }
}

/// One value per edge: a piecewise-constant field.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeField {
    grid: Grid,
    values: Vec<f64>,
}

grid_field!(EdgeField);

impl EdgeField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        grid.check_len(&values)?;
        Ok(EdgeField { grid, values })
    }

    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        EdgeField { grid, values }
    }

    /// `|sum_i k^i l^i|_inf`; zero exactly for elements of the ds-mean-zero subspace of `c`.
    pub fn ds_mean_residual(&self, c: &Polygon) -> f64 {
        assert_eq!(self.grid, c.grid, "grid mismatch");
        let d = self.grid.d();
        let mut s = vec![0.0; d];
        for (i, row) in self.values.chunks_exact(d).enumerate() {
            for (acc, v) in s.iter_mut().zip(row) {
                *acc += v * c.edge_lengths[i];
            }
        }
        inf_norm(&s)
    }

    pub fn is_ds_mean_zero(&self, c: &Polygon) -> bool {
        self.ds_mean_residual(c) <= MEAN_ZERO_TOL * c.total_length
    }
}

/// Coefficients `alpha^i` of `sum_i alpha^i delta_{theta^i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Covector {
    grid: Grid,
    values: Vec<f64>,
    sum_zero: bool,
}

grid_field!(Covector);

impl Covector {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        grid.check_len(&values)?;
        Ok(Covector { grid, values, sum_zero: false })
    }

    /// Validated element of the sum-zero subspace (dual of the mean-zero fields).
    pub fn new_sum_zero(grid: Grid, values: Vec<f64>) -> Result<Self> {
        let mut a = Self::new(grid, values)?;
        let residual = inf_norm(&a.sum());
        if residual > MEAN_ZERO_TOL {
            return Err(Error::NotSumZero { residual });
        }
        a.sum_zero = true;
        Ok(a)
    }

    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        Covector { grid, values, sum_zero: false }
    }

    pub(crate) fn flagged(grid: Grid, values: Vec<f64>) -> Self {
        Covector { grid, values, sum_zero: true }
    }

    pub fn is_flagged_sum_zero(&self) -> bool {
        self.sum_zero
    }

    pub fn is_sum_zero(&self) -> bool {
        inf_norm(&self.sum()) <= MEAN_ZERO_TOL
    }

    pub(crate) fn require_sum_zero(&self) -> Result<()> {
        let residual = inf_norm(&self.sum());
        if residual > MEAN_ZERO_TOL {
            return Err(Error::NotSumZero { residual });
        }
        Ok(())
    }

    /// Removes the mean coefficient: the adjoint of the inclusion of mean-zero fields.
    pub fn centered(&self) -> Covector {
        let mean: Vec<f64> = self.sum().iter().map(|s| s / self.grid.n() as f64).collect();
        let d = self.grid.d();
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(idx, v)| v - mean[idx % d])
            .collect();
        Covector::flagged(self.grid, values)
    }

    pub fn scaled(&self, s: f64) -> Covector {
        Covector {
            grid: self.grid,
            values: self.values.iter().map(|v| v * s).collect(),
            sum_zero: self.sum_zero,
        }
    }

    /// Dual pairing with a vertex field: `sum_i <alpha^i, h^i>`.
    pub fn pair(&self, h: &VertexField) -> f64 {
        assert_eq!(self.grid, h.grid, "grid mismatch");
        dot(&self.values, &h.values)
    }
}

/// A closed polygon with eagerly computed edge-length caches.
///
/// For 0-based vertex `i` the caches hold
/// `edge_lengths[i] = |c[i+1] - c[i]|`, `tail_sums[i] = sum_{j >= i} l[j]`
/// and `weighted_tail_sums[i] = sum_{j >= i} (j + 1) l[j]` (the weights are
/// the 1-based edge labels).
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    grid: Grid,
    vertices: Vec<f64>,
    edge_lengths: Vec<f64>,
    tail_sums: Vec<f64>,
    weighted_tail_sums: Vec<f64>,
    total_length: f64,
    mean_zero: bool,
}

impl Polygon {
    /// Validates shape, finiteness and the immersion condition.
    pub fn new(grid: Grid, vertices: Vec<f64>) -> Result<Self> {
        Self::with_edge_guard(grid, vertices, 1.0)
    }

    /// As [`Polygon::new`], with the immersion threshold multiplied by `guard_factor`.
    pub fn with_edge_guard(grid: Grid, vertices: Vec<f64>, guard_factor: f64) -> Result<Self> {
        if grid.n() < 2 {
            return Err(Error::InvalidGrid("a closed polygon needs n >= 2".into()));
        }
        grid.check_len(&vertices)?;
        let n = grid.n();
        let d = grid.d();
        let mut edge_lengths = Vec::with_capacity(n);
        for i in 0..n {
            let j = grid.next(i);
            let mut sq = 0.0;
            for k in 0..d {
                let e = vertices[j * d + k] - vertices[i * d + k];
                sq += e * e;
            }
            edge_lengths.push(sq.sqrt());
        }
        let mut tail_sums = vec![0.0; n];
        let mut weighted_tail_sums = vec![0.0; n];
        let mut acc = 0.0;
        let mut wacc = 0.0;
        for i in (0..n).rev() {
            acc += edge_lengths[i];
            wacc += (i + 1) as f64 * edge_lengths[i];
            tail_sums[i] = acc;
            weighted_tail_sums[i] = wacc;
        }
        let total_length = tail_sums[0];
        let guard = guard_factor * edge_guard(total_length);
        for (index, &length) in edge_lengths.iter().enumerate() {
            if !(length > guard) {
                return Err(Error::DegenerateEdge { index, length, guard });
            }
        }
        Ok(Polygon {
            grid,
            vertices,
            edge_lengths,
            tail_sums,
            weighted_tail_sums,
            total_length,
            mean_zero: false,
        })
    }

    /// Validated point of the mean-zero chart.
    pub fn new_mean_zero(grid: Grid, vertices: Vec<f64>) -> Result<Self> {
        let mut c = Self::new(grid, vertices)?;
        let residual = inf_norm(&c.vertex_sum());
        if residual > MEAN_ZERO_TOL {
            return Err(Error::NotMeanZero { residual });
        }
        c.mean_zero = true;
        Ok(c)
    }

    /// Builds a polygon from a list of points of equal dimension.
    pub fn from_points<P: AsRef<[f64]>>(points: &[P]) -> Result<Self> {
        let (grid, flat) = flatten_points(points, Grid::new)?;
        Self::new(grid, flat)
    }

    /// Translates the polygon so that its vertex mean is zero.
    pub fn centered(&self) -> Polygon {
        let values = pi1_values(self.grid, &self.vertices);
        Polygon { vertices: values, mean_zero: true, ..self.clone() }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn vertices(&self) -> &[f64] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        let d = self.grid.d();
        &self.vertices[i * d..(i + 1) * d]
    }

    /// Edge vector `c[i+1] - c[i]`.
    pub fn edge(&self, i: usize) -> Vec<f64> {
        let j = self.grid.next(i);
        self.vertex(j).iter().zip(self.vertex(i)).map(|(a, b)| a - b).collect()
    }

    /// Unit tangent on edge `i`.
    pub fn unit_tangent(&self, i: usize) -> Vec<f64> {
        let l = self.edge_lengths[i];
        self.edge(i).into_iter().map(|e| e / l).collect()
    }

    pub fn edge_lengths(&self) -> &[f64] {
        &self.edge_lengths
    }

    pub fn tail_sums(&self) -> &[f64] {
        &self.tail_sums
    }

    pub fn weighted_tail_sums(&self) -> &[f64] {
        &self.weighted_tail_sums
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn min_edge_length(&self) -> f64 {
        self.edge_lengths.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Immersion threshold for this polygon's scale.
    pub fn edge_guard(&self) -> f64 {
        edge_guard(self.total_length)
    }

    pub fn vertex_sum(&self) -> Vec<f64> {
        column_sum(self.grid, &self.vertices)
    }

    pub fn is_flagged_mean_zero(&self) -> bool {
        self.mean_zero
    }

    pub fn is_mean_zero(&self) -> bool {
        inf_norm(&self.vertex_sum()) <= MEAN_ZERO_TOL
    }

    pub(crate) fn require_mean_zero(&self) -> Result<()> {
        let residual = inf_norm(&self.vertex_sum());
        if residual > MEAN_ZERO_TOL {
            return Err(Error::NotMeanZero { residual });
        }
        Ok(())
    }

    /// The vertex positions viewed as a tangent vector.
    pub fn as_field(&self) -> VertexField {
        VertexField { grid: self.grid, values: self.vertices.clone(), mean_zero: self.mean_zero }
    }

    /// `|c - other|_inf` over all vertex coordinates.
    pub fn max_abs_diff(&self, other: &Polygon) -> f64 {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        self.vertices
            .iter()
            .zip(&other.vertices)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Moves every vertex by `h`.
    pub fn displaced(&self, h: &VertexField) -> Result<Polygon> {
        assert_eq!(self.grid, h.grid, "grid mismatch");
        let v = self.vertices.iter().zip(&h.values).map(|(a, b)| a + b).collect();
        Polygon::new(self.grid, v)
    }
}

pub(crate) fn edge_guard(total_length: f64) -> f64 {
    EDGE_GUARD_REL * total_length.max(1.0)
}

pub(crate) fn flatten_points<P: AsRef<[f64]>>(
    points: &[P],
    make_grid: impl Fn(usize, usize) -> Result<Grid>,
) -> Result<(Grid, Vec<f64>)> {
    let d = points.first().map(|p| p.as_ref().len()).unwrap_or(0);
    let grid = make_grid(points.len(), d)?;
    let mut flat = Vec::with_capacity(grid.len());
    for p in points {
        let p = p.as_ref();
        if p.len() != d {
            return Err(Error::ShapeMismatch { expected: d, actual: p.len() });
        }
        flat.extend_from_slice(p);
    }
    Ok((grid, flat))
}

fn pi1_values(grid: Grid, values: &[f64]) -> Vec<f64> {
    let n = grid.n() as f64;
    let d = grid.d();
    let mean: Vec<f64> = column_sum(grid, values).into_iter().map(|s| s / n).collect();
    values.iter().enumerate().map(|(idx, v)| v - mean[idx % d]).collect()
}

/// L2(dtheta)-orthogonal projection onto mean-zero vertex fields.
pub fn pi1(h: &VertexField) -> VertexField {
    VertexField::flagged(h.grid, pi1_values(h.grid, &h.values))
}

/// L2(ds)-orthogonal projection onto ds-mean-zero edge fields.
pub fn pi0(c: &Polygon, k: &EdgeField) -> EdgeField {
    assert_eq!(c.grid, k.grid, "grid mismatch");
    let d = c.grid.d();
    let mut weighted = vec![0.0; d];
    for (i, row) in k.values.chunks_exact(d).enumerate() {
        for (acc, v) in weighted.iter_mut().zip(row) {
            *acc += v * c.edge_lengths[i];
        }
    }
    let values = k
        .values
        .iter()
        .enumerate()
        .map(|(idx, v)| v - weighted[idx % d] / c.total_length)
        .collect();
    EdgeField::from_raw(c.grid, values)
}

/// Arc-length derivative: `(h^{i+1} - h^i) / l^i` on each edge.
pub fn ds_derivative(c: &Polygon, h: &VertexField) -> EdgeField {
    assert_eq!(c.grid, h.grid, "grid mismatch");
    let grid = c.grid;
    let d = grid.d();
    let mut values = vec![0.0; grid.len()];
    for i in 0..grid.n() {
        let j = grid.next(i);
        let l = c.edge_lengths[i];
        for k in 0..d {
            values[i * d + k] = (h.values[j * d + k] - h.values[i * d + k]) / l;
        }
    }
    EdgeField::from_raw(grid, values)
}

/// Inverse of [`ds_derivative`] from ds-mean-zero edge fields to mean-zero vertex fields.
pub fn ds_antiderivative(c: &Polygon, k: &EdgeField) -> Result<VertexField> {
    assert_eq!(c.grid, k.grid, "grid mismatch");
    let residual = k.ds_mean_residual(c);
    if residual > MEAN_ZERO_TOL * c.total_length {
        return Err(Error::NotDsMeanZero { residual });
    }
    Ok(ds_antiderivative_unchecked(c, &k.values))
}

/// `h^i = sum_{j<i} k^j l^j`, then re-centred. The closing increment is not checked.
pub(crate) fn ds_antiderivative_unchecked(c: &Polygon, k: &[f64]) -> VertexField {
    let grid = c.grid;
    let d = grid.d();
    let mut values = vec![0.0; grid.len()];
    for i in 1..grid.n() {
        let l = c.edge_lengths[i - 1];
        for m in 0..d {
            values[i * d + m] = values[(i - 1) * d + m] + k[(i - 1) * d + m] * l;
        }
    }
    VertexField::flagged(grid, pi1_values(grid, &values))
}

/// `(k ds)^i = k^i l^i`.
pub fn mul_ds(c: &Polygon, k: &EdgeField) -> Covector {
    assert_eq!(c.grid, k.grid, "grid mismatch");
    let d = c.grid.d();
    let values = k.values.iter().enumerate().map(|(idx, v)| v * c.edge_lengths[idx / d]).collect();
    Covector::from_raw(c.grid, values)
}

/// `(beta / ds)^i = beta^i / l^i`.
pub fn div_ds(c: &Polygon, b: &Covector) -> EdgeField {
    assert_eq!(c.grid, b.grid, "grid mismatch");
    let d = c.grid.d();
    let values = b.values.iter().enumerate().map(|(idx, v)| v / c.edge_lengths[idx / d]).collect();
    EdgeField::from_raw(c.grid, values)
}

/// Adjoint of the arc-length derivative: `beta^{i-1}/l^{i-1} - beta^i/l^i`.
pub fn ds_adjoint(c: &Polygon, b: &Covector) -> Covector {
    assert_eq!(c.grid, b.grid, "grid mismatch");
    let grid = c.grid;
    let d = grid.d();
    let mut values = vec![0.0; grid.len()];
    for i in 0..grid.n() {
        let p = grid.prev(i);
        for k in 0..d {
            values[i * d + k] =
                b.values[p * d + k] / c.edge_lengths[p] - b.values[i * d + k] / c.edge_lengths[i];
        }
    }
    Covector::flagged(grid, values)
}

/// Right inverse of [`ds_adjoint`] on sum-zero covectors.
pub fn ds_adjoint_inverse(c: &Polygon, a: &Covector) -> Result<Covector> {
    assert_eq!(c.grid, a.grid, "grid mismatch");
    a.require_sum_zero()?;
    let grid = c.grid;
    let d = grid.d();
    let mut weighted = vec![0.0; d];
    for (row, lam) in a.values.chunks(d).zip(&c.tail_sums) {
        for (w, x) in weighted.iter_mut().zip(row) {
            *w += x * lam;
        }
    }
    for w in weighted.iter_mut() {
        *w /= c.total_length;
    }
    let mut prefix = vec![0.0; d];
    let mut values = vec![0.0; grid.len()];
    for i in 0..grid.n() {
        for k in 0..d {
            prefix[k] += a.values[i * d + k];
            values[i * d + k] = (weighted[k] - prefix[k]) * c.edge_lengths[i];
        }
    }
    Ok(Covector::flagged(grid, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_square() -> Polygon {
        Polygon::from_points(&[[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]]).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn grid_rejects_small_sizes() {
        assert!(Grid::new(1, 2).is_err());
        assert!(Grid::new(3, 1).is_err());
        assert!(Grid::for_landmarks(1, 2).is_ok());
    }

    #[test]
    fn square_caches() {
        let c = unit_square();
        assert_eq!(c.edge_lengths(), &[2.0, 2.0, 2.0, 2.0]);
        assert_eq!(c.tail_sums(), &[8.0, 6.0, 4.0, 2.0]);
        // 1*2 + 2*2 + 3*2 + 4*2
        assert_eq!(c.weighted_tail_sums()[0], 20.0);
        assert_eq!(c.total_length(), 8.0);
        assert!(c.is_mean_zero());
    }

    #[test]
    fn repeated_vertex_is_degenerate() {
        let err = Polygon::from_points(&[[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]).unwrap_err();
        assert!(matches!(err, Error::DegenerateEdge { index: 0, .. }));
    }

    #[test]
    fn shape_and_mean_checks() {
        let g = Grid::new(3, 2).unwrap();
        assert!(matches!(
            VertexField::new(g, vec![0.0; 5]),
            Err(Error::ShapeMismatch { expected: 6, actual: 5 })
        ));
        assert!(matches!(
            VertexField::new_mean_zero(g, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
            Err(Error::NotMeanZero { .. })
        ));
        assert!(matches!(
            Covector::new_sum_zero(g, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
            Err(Error::NotSumZero { .. })
        ));
        assert!(matches!(VertexField::new(g, vec![f64::NAN; 6]), Err(Error::NonFinite(0))));
    }

    #[test]
    fn pi1_examples() {
        let g = Grid::new(2, 2).unwrap();
        let h = VertexField::new(g, vec![2.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(pi1(&h).values(), &[1.0, 0.0, -1.0, 0.0]);

        let g = Grid::new(5, 3).unwrap();
        let constant = VertexField::new(g, [0.5, -2.0, 3.0].repeat(5)).unwrap();
        assert!(pi1(&constant).max_abs() < 1e-15);
        let p = pi1(&VertexField::new(g, (0..15).map(|x| x as f64).collect()).unwrap());
        assert!(pi1(&p).max_abs_diff(&p) < 1e-14);
        assert!(p.is_flagged_mean_zero());
    }

    #[test]
    fn pi0_square() {
        let c = unit_square();
        let k = EdgeField::new(c.grid(), vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let p = pi0(&c, &k);
        assert!(close(p.values(), &[0.75, 0.0, -0.25, 0.0, -0.25, 0.0, -0.25, 0.0], 1e-15));
        assert!(p.is_ds_mean_zero(&c));
        assert!(pi0(&c, &p).max_abs_diff(&p) < 1e-15);
        let constant = EdgeField::new(c.grid(), [3.0, -1.0].repeat(4)).unwrap();
        assert!(pi0(&c, &constant).max_abs() < 1e-15);
    }

    #[test]
    fn ds_derivative_examples() {
        let c = unit_square();
        let h = VertexField::new(c.grid(), vec![1.0, 0.0, -1.0, 0.0, 1.0, 0.0, -1.0, 0.0]).unwrap();
        let k = ds_derivative(&c, &h);
        assert_eq!(k.values(), &[-1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 1.0, 0.0]);

        let t = ds_derivative(&c, &c.as_field());
        for i in 0..4 {
            assert!((dot(t.at(i), t.at(i)) - 1.0).abs() < 1e-15);
        }
        let constant = VertexField::new(c.grid(), [4.0, 4.0].repeat(4)).unwrap();
        assert_eq!(ds_derivative(&c, &constant).max_abs(), 0.0);
    }

    #[test]
    fn antiderivative_rejects_non_ds_mean_zero() {
        let c = unit_square();
        let k = EdgeField::new(c.grid(), vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(ds_antiderivative(&c, &k), Err(Error::NotDsMeanZero { .. })));
        let zero = EdgeField::zeros(c.grid());
        assert_eq!(ds_antiderivative(&c, &zero).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn mul_div_ds_square() {
        let c = unit_square();
        let k = EdgeField::new(c.grid(), vec![1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0]).unwrap();
        let b = mul_ds(&c, &k);
        assert_eq!(b.values(), &[2.0, 0.0, 0.0, 2.0, -2.0, 0.0, 0.0, -2.0]);
        assert_eq!(div_ds(&c, &b), k);
    }

    #[test]
    fn ds_adjoint_square() {
        let c = unit_square();
        let b = Covector::new(c.grid(), vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(ds_adjoint(&c, &b).values(), &[-0.5, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let constant = Covector::new(c.grid(), [1.0, 2.0].repeat(4)).unwrap();
        assert_eq!(ds_adjoint(&c, &constant).max_abs(), 0.0);
    }

    #[test]
    fn adjoint_inverse_requires_sum_zero() {
        let c = unit_square();
        let a = Covector::new(c.grid(), vec![1.0; 8]).unwrap();
        assert!(matches!(ds_adjoint_inverse(&c, &a), Err(Error::NotSumZero { .. })));
        let zero = Covector::zeros(c.grid());
        assert_eq!(ds_adjoint_inverse(&c, &zero).unwrap().max_abs(), 0.0);
    }

    /// Random polygon with entries in [-10, 10] and all edges >= 0.1.
    fn arb_case() -> impl Strategy<Value = (Polygon, Vec<f64>, Vec<f64>)> {
        (2usize..=64, 2usize..=3)
            .prop_flat_map(|(n, d)| {
                (
                    prop::collection::vec(-10.0..10.0f64, n * d),
                    prop::collection::vec(-10.0..10.0f64, n * d),
                    prop::collection::vec(-10.0..10.0f64, n * d),
                    Just((n, d)),
                )
            })
            .prop_filter_map("edges too short", |(v, a, b, (n, d))| {
                let c = Polygon::new(Grid::new(n, d).unwrap(), v).ok()?;
                (c.min_edge_length() >= 0.1).then_some((c, a, b))
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(96))]

        #[test]
        fn diagram_commutes((c, a, _b) in arb_case()) {
            let h = VertexField::new(c.grid(), a).unwrap();
            let left = ds_derivative(&c, &pi1(&h));
            let right = pi0(&c, &ds_derivative(&c, &h));
            prop_assert!(left.max_abs_diff(&right) <= 1e-12);
            let round = ds_antiderivative(&c, &pi0(&c, &ds_derivative(&c, &h))).unwrap();
            prop_assert!(round.max_abs_diff(&pi1(&h)) <= 1e-12);
        }

        #[test]
        fn derivative_inverts_antiderivative((c, a, _b) in arb_case()) {
            let k = pi0(&c, &EdgeField::new(c.grid(), a).unwrap());
            let h = ds_antiderivative(&c, &k).unwrap();
            prop_assert!(h.is_mean_zero());
            prop_assert!(ds_derivative(&c, &h).max_abs_diff(&k) <= 1e-12);
        }

        #[test]
        fn telescoping_sums_vanish((c, a, b) in arb_case()) {
            let h = VertexField::new(c.grid(), a).unwrap();
            prop_assert!(ds_derivative(&c, &h).ds_mean_residual(&c) <= 1e-12);
            let beta = Covector::new(c.grid(), b).unwrap();
            prop_assert!(inf_norm(&ds_adjoint(&c, &beta).sum()) <= 1e-12);
        }

        #[test]
        fn adjointness((c, a, b) in arb_case()) {
            let h = VertexField::new(c.grid(), a).unwrap();
            let beta = Covector::new(c.grid(), b).unwrap();
            let lhs = ds_adjoint(&c, &beta).pair(&h);
            let rhs = dot(beta.values(), ds_derivative(&c, &h).values());
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }

        #[test]
        fn adjoint_inverse_round_trip((c, _a, b) in arb_case()) {
            let alpha = Covector::new(c.grid(), b).unwrap().centered();
            let beta = ds_adjoint_inverse(&c, &alpha).unwrap();
            prop_assert!(beta.is_sum_zero());
            prop_assert!(ds_adjoint(&c, &beta).max_abs_diff(&alpha) <= 1e-12 * (1.0 + alpha.max_abs()));
        }

        #[test]
        fn cache_identities((c, _a, _b) in arb_case()) {
            let n = c.grid().n();
            let l = c.edge_lengths();
            let lam = c.tail_sums();
            let kap = c.weighted_tail_sums();
            let scale = c.total_length() * n as f64;
            prop_assert!((lam[0] - l.iter().sum::<f64>()).abs() <= 1e-12 * scale);
            prop_assert!((lam[n - 1] - l[n - 1]).abs() == 0.0);
            for i in 0..n - 1 {
                prop_assert!((lam[i] - l[i] - lam[i + 1]).abs() <= 1e-12 * scale);
            }
            prop_assert!((kap[0] - lam.iter().sum::<f64>()).abs() <= 1e-12 * scale);
            for j in 0..n {
                // sum_{i > j} lambda^i = sum_{i > j} (i - j) l^i  (1-based labels shift equally)
                let lhs: f64 = lam[j + 1..].iter().sum();
                let rhs: f64 = (j + 1..n).map(|i| (i - j) as f64 * l[i]).sum();
                prop_assert!((lhs - rhs).abs() <= 1e-12 * scale * n as f64);
            }
        }

        #[test]
        fn operators_are_homogeneous((c, a, b) in arb_case(), s in -5.0..5.0f64) {
            let h = VertexField::new(c.grid(), a).unwrap();
            let k = EdgeField::new(c.grid(), b.clone()).unwrap();
            let beta = Covector::new(c.grid(), b).unwrap();
            let tol = 1e-12 * (1.0 + s.abs()) * 1e2;
            prop_assert!(pi1(&h.scaled(s)).max_abs_diff(&pi1(&h).scaled(s)) <= tol);
            let ks = EdgeField::new(c.grid(), k.values().iter().map(|v| v * s).collect()).unwrap();
            let lhs = pi0(&c, &ks);
            let rhs: Vec<f64> = pi0(&c, &k).values().iter().map(|v| v * s).collect();
            prop_assert!(close(lhs.values(), &rhs, tol));
            let lhs = ds_derivative(&c, &h.scaled(s));
            let rhs: Vec<f64> = ds_derivative(&c, &h).values().iter().map(|v| v * s).collect();
            prop_assert!(close(lhs.values(), &rhs, tol * 1e2));
            prop_assert!(ds_adjoint(&c, &beta.scaled(s)).max_abs_diff(&ds_adjoint(&c, &beta).scaled(s)) <= tol * 1e2);
        }
    }
}
