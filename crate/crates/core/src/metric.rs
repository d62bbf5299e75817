//! The elastic metric `G_c(h,k) = (1/l_c) int <D_s h, D_s k> ds` on polygons,
//! its momentum map, the cometric on sum-zero covectors and the extended
//! cometric `K_c` (Moore-Penrose pseudo-inverse of the momentum map), together
//! with the Hamiltonian `H(c, a) = 1/2 K_c(a, a)` and its analytic gradient.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::curve::{dot, Covector, Grid, Polygon, VertexField};
use crate::error::Result;

/// `G_c(h, k)`. Only vertex differences enter, so translations are null directions.
pub fn metric(c: &Polygon, h: &VertexField, k: &VertexField) -> f64 {
    assert_eq!(c.grid(), h.grid(), "grid mismatch");
    assert_eq!(c.grid(), k.grid(), "grid mismatch");
    let grid = c.grid();
    let d = grid.d();
    let (hv, kv) = (h.values(), k.values());
    let mut sum = 0.0;
    for i in 0..grid.n() {
        let j = grid.next(i);
        let mut s = 0.0;
        for m in 0..d {
            s += (hv[j * d + m] - hv[i * d + m]) * (kv[j * d + m] - kv[i * d + m]);
        }
        sum += s / c.edge_lengths()[i];
    }
    sum / c.total_length()
}

/// Momentum `G_c h` as vertex delta coefficients; always sum-zero.
pub fn momentum(c: &Polygon, h: &VertexField) -> Covector {
    assert_eq!(c.grid(), h.grid(), "grid mismatch");
    let grid = c.grid();
    let d = grid.d();
    let l = c.edge_lengths();
    let hv = h.values();
    let inv_lc = 1.0 / c.total_length();
    // slope[i] = (h[i+1] - h[i]) / l[i]
    let mut slope = vec![0.0; grid.len()];
    for i in 0..grid.n() {
        let j = grid.next(i);
        for m in 0..d {
            slope[i * d + m] = (hv[j * d + m] - hv[i * d + m]) / l[i];
        }
    }
    let mut values = vec![0.0; grid.len()];
    for i in 0..grid.n() {
        let p = grid.prev(i);
        for m in 0..d {
            values[i * d + m] = inv_lc * (slope[p * d + m] - slope[i * d + m]);
        }
    }
    Covector::flagged(grid, values)
}

/// Scalar weights `M` with `G_c(h, k) = sum_ij M_ij <h^i, k^j>`: a weighted
/// cycle-graph Laplacian scaled by `1/l_c`.
pub fn metric_weights(c: &Polygon) -> DMatrix<f64> {
    let grid = c.grid();
    let n = grid.n();
    let inv_lc = 1.0 / c.total_length();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let j = grid.next(i);
        let w = inv_lc / c.edge_lengths()[i];
        m[(i, i)] += w;
        m[(j, j)] += w;
        m[(i, j)] -= w;
        m[(j, i)] -= w;
    }
    m
}

/// Restricted cometric `G_c^{-1}(a, b)` on sum-zero covectors.
pub fn cometric(c: &Polygon, a: &Covector, b: &Covector) -> Result<f64> {
    assert_eq!(c.grid(), a.grid(), "grid mismatch");
    assert_eq!(c.grid(), b.grid(), "grid mismatch");
    a.require_sum_zero()?;
    b.require_sum_zero()?;
    let n = c.grid().n();
    let lam = c.tail_sums();
    let l1 = lam[0];
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            let w = l1 * lam[i.max(j)] - lam[i] * lam[j];
            sum += w * dot(a.at(i), b.at(j));
        }
    }
    Ok(sum)
}

/// Symmetric `n*d x n*d` matrix stored as `n x n` scalar weights, each
/// multiplying the `d x d` identity.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    grid: Grid,
    weights: DMatrix<f64>,
}

impl KernelMatrix {
    pub fn new(grid: Grid, weights: DMatrix<f64>) -> Self {
        assert_eq!(weights.shape(), (grid.n(), grid.n()), "weight matrix shape");
        KernelMatrix { grid, weights }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    /// Weight of the block coupling indices `i` and `j`.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    /// The full `n*d x n*d` matrix, `weights (x) I_d`.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let (n, d) = (self.grid.n(), self.grid.d());
        DMatrix::from_fn(n * d, n * d, |r, s| {
            if r % d == s % d {
                self.weights[(r / d, s / d)]
            } else {
                0.0
            }
        })
    }

    /// `sum_j K_ij a^j` at every vertex `i`.
    pub fn apply(&self, a: &Covector) -> VertexField {
        assert_eq!(self.grid, a.grid(), "grid mismatch");
        let (n, d) = (self.grid.n(), self.grid.d());
        let av = a.values();
        let mut out = vec![0.0; n * d];
        for i in 0..n {
            for j in 0..n {
                let w = self.weights[(i, j)];
                for m in 0..d {
                    out[i * d + m] += w * av[j * d + m];
                }
            }
        }
        VertexField::from_raw(self.grid, out)
    }

    /// `sum_ij K_ij <a^i, b^j>`.
    pub fn bilinear(&self, a: &Covector, b: &Covector) -> f64 {
        assert_eq!(self.grid, b.grid(), "grid mismatch");
        let ka = self.apply(a);
        dot(ka.values(), b.values())
    }

    /// Eigenvalues of the dense matrix in ascending order (each weight
    /// eigenvalue repeated `d` times).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let eig = SymmetricEigen::new(self.weights.clone()).eigenvalues;
        let mut out: Vec<f64> =
            eig.iter().flat_map(|&e| std::iter::repeat_n(e, self.grid.d())).collect();
        out.sort_by(f64::total_cmp);
        out
    }

    /// Largest asymmetry `|K_ij - K_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.grid.n();
        let mut m: f64 = 0.0;
        for i in 0..n {
            for j in 0..i {
                m = m.max((self.weights[(i, j)] - self.weights[(j, i)]).abs());
            }
        }
        m
    }
}

/// Closed form of the extended cometric `K_c`, the pseudo-inverse of the
/// momentum map composed with the projections onto/from the mean-zero
/// subspace. Its kernel consists of the covectors that are constant in `i`.
pub fn extended_cometric_matrix(c: &Polygon) -> KernelMatrix {
    let grid = c.grid();
    let n = grid.n();
    let nf = n as f64;
    let lam = c.tail_sums();
    let kap = c.weighted_tail_sums();
    let (l1, k1) = (lam[0], kap[0]);
    let q = second_moment(c);
    let constant = -k1 * k1 / (nf * nf) + l1 * q / (nf * nf);
    let weights = DMatrix::from_fn(n, n, |i, j| {
        l1 * lam[i.max(j)] - lam[i] * lam[j] + (k1 / nf) * (lam[i] + lam[j])
            - (l1 / nf) * (kap[i] + kap[j])
            + constant
    });
    KernelMatrix::new(grid, weights)
}

/// `sum_k k^2 l^k` with 1-based edge labels.
fn second_moment(c: &Polygon) -> f64 {
    c.edge_lengths().iter().enumerate().map(|(k, l)| ((k + 1) * (k + 1)) as f64 * l).sum()
}

/// `H(c, a) = 1/2 K_c(a, a)` for an unconstrained covector `a`.
pub fn hamiltonian(c: &Polygon, a: &Covector) -> f64 {
    0.5 * extended_cometric_matrix(c).bilinear(a, a)
}

/// Analytic `dH/dc`. `H` depends on `c` only through the edge lengths, via
/// the tail sums, the weighted tail sums and `sum k^2 l^k`; the gradient is
/// chained through those and sums to zero over the vertices.
pub fn hamiltonian_gradient_c(c: &Polygon, a: &Covector) -> VertexField {
    assert_eq!(c.grid(), a.grid(), "grid mismatch");
    let grid = c.grid();
    let (n, d) = (grid.n(), grid.d());
    let nf = n as f64;
    let lam = c.tail_sums();
    let kap = c.weighted_tail_sums();
    let (l1, k1) = (lam[0], kap[0]);
    let q = second_moment(c);

    let s = DMatrix::from_fn(n, n, |i, j| dot(a.at(i), a.at(j)));
    let r: Vec<f64> = (0..n).map(|i| s.row(i).sum()).collect();
    let total: f64 = r.iter().sum();
    let s_lam: Vec<f64> = (0..n).map(|i| (0..n).map(|j| s[(i, j)] * lam[j]).sum()).collect();
    // w[m] = sum over pairs with max(i, j) = m
    let w: Vec<f64> =
        (0..n).map(|m| s[(m, m)] + 2.0 * (0..m).map(|i| s[(i, m)]).sum::<f64>()).collect();
    let a_max: f64 = (0..n).map(|m| w[m] * lam[m]).sum();
    let r_kap: f64 = (0..n).map(|i| r[i] * kap[i]).sum();
    let r_lam: f64 = (0..n).map(|i| r[i] * lam[i]).sum();

    // partials of 2H with respect to lambda^m, kappa^m and Q
    let mut d_lam: Vec<f64> =
        (0..n).map(|m| l1 * w[m] - 2.0 * s_lam[m] + 2.0 * k1 / nf * r[m]).collect();
    d_lam[0] += a_max - 2.0 / nf * r_kap + q * total / (nf * nf);
    let mut d_kap: Vec<f64> = (0..n).map(|m| -2.0 * l1 / nf * r[m]).collect();
    d_kap[0] += 2.0 / nf * r_lam - 2.0 * k1 * total / (nf * nf);
    let d_q = l1 * total / (nf * nf);

    // dH/dl^k, k 1-based = idx + 1
    let mut g = vec![0.0; n];
    let (mut pre_lam, mut pre_kap) = (0.0, 0.0);
    for idx in 0..n {
        pre_lam += d_lam[idx];
        pre_kap += d_kap[idx];
        let k = (idx + 1) as f64;
        g[idx] = 0.5 * (pre_lam + k * pre_kap + k * k * d_q);
    }

    let mut out = vec![0.0; n * d];
    for i in 0..n {
        let j = grid.next(i);
        let u = c.unit_tangent(i);
        for m in 0..d {
            out[j * d + m] += g[i] * u[m];
            out[i * d + m] -= g[i] * u[m];
        }
    }
    VertexField::from_raw(grid, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{pi1, Polygon};
    use crate::testutil::{random_covector, random_field, random_polygon, rng};
    use nalgebra::DVector;

    fn unit_square() -> Polygon {
        Polygon::from_points(&[[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]]).unwrap()
    }

    fn alternating(c: &Polygon) -> VertexField {
        VertexField::new(c.grid(), vec![1.0, 0.0, -1.0, 0.0, 1.0, 0.0, -1.0, 0.0]).unwrap()
    }

    /// Moore-Penrose pseudo-inverse by symmetric eigendecomposition.
    fn pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
        let eig = SymmetricEigen::new(m.clone());
        let smax = eig.eigenvalues.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let inv = eig.eigenvalues.map(|e| if e.abs() > 1e-12 * smax { 1.0 / e } else { 0.0 });
        &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose()
    }

    #[test]
    fn square_examples() {
        let c = unit_square();
        let h = alternating(&c);
        assert!((metric(&c, &h, &h) - 1.0).abs() < 1e-15);
        let a = momentum(&c, &h);
        assert_eq!(a.values(), &[0.25, 0.0, -0.25, 0.0, 0.25, 0.0, -0.25, 0.0]);
        let constant = VertexField::new(c.grid(), [2.0, -3.0].repeat(4)).unwrap();
        assert_eq!(metric(&c, &constant, &constant), 0.0);
        assert_eq!(momentum(&c, &constant).max_abs(), 0.0);
        let zero = Covector::zeros(c.grid());
        assert_eq!(cometric(&c, &zero, &zero).unwrap(), 0.0);
        assert_eq!(hamiltonian(&c, &zero), 0.0);
        assert_eq!(hamiltonian_gradient_c(&c, &zero).max_abs(), 0.0);
    }

    #[test]
    fn cometric_requires_sum_zero() {
        let c = unit_square();
        let a = Covector::new(c.grid(), vec![1.0; 8]).unwrap();
        assert!(cometric(&c, &a, &a).is_err());
    }

    #[test]
    fn duality_and_inverse_pairing() {
        let mut r = rng(1);
        for _ in 0..50 {
            let c = random_polygon(&mut r, 2..40, 2..4);
            let h = random_field(&mut r, c.grid());
            let k = random_field(&mut r, c.grid());
            let g = metric(&c, &h, &k);
            let scale = (metric(&c, &h, &h) * metric(&c, &k, &k)).sqrt();
            assert!((momentum(&c, &h).pair(&k) - g).abs() <= 1e-12 * scale);
            let co = cometric(&c, &momentum(&c, &h), &momentum(&c, &k)).unwrap();
            assert!((co - g).abs() <= 1e-10 * scale, "{co} vs {g}");
            let sym = cometric(&c, &momentum(&c, &k), &momentum(&c, &h)).unwrap();
            assert!((co - sym).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn metric_weights_reproduce_metric() {
        let mut r = rng(2);
        for _ in 0..20 {
            let c = random_polygon(&mut r, 2..20, 2..4);
            let h = random_field(&mut r, c.grid());
            let k = random_field(&mut r, c.grid());
            let m = KernelMatrix::new(c.grid(), metric_weights(&c)).to_dense();
            let hv = DVector::from_column_slice(h.values());
            let kv = DVector::from_column_slice(k.values());
            let g = (hv.transpose() * &m * kv)[(0, 0)];
            assert!((g - metric(&c, &h, &k)).abs() <= 1e-12 * (1.0 + g.abs()));
        }
    }

    #[test]
    fn cometric_is_inverse_gram_on_mean_zero_complement() {
        let mut r = rng(3);
        for _ in 0..20 {
            let c = random_polygon(&mut r, 2..24, 2..3);
            let n = c.grid().n();
            let oracle = pinv(&metric_weights(&c));
            let lam = c.tail_sums();
            let proj = DMatrix::<f64>::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64);
            let formula = DMatrix::from_fn(n, n, |i, j| lam[0] * lam[i.max(j)] - lam[i] * lam[j]);
            let restricted = &proj * formula * &proj;
            let err = (&restricted - &oracle).abs().max() / oracle.abs().max();
            assert!(err <= 1e-9, "relative error {err}");
        }
    }

    #[test]
    fn extended_cometric_matches_pseudo_inverse() {
        let mut r = rng(4);
        for _ in 0..30 {
            let c = random_polygon(&mut r, 2..33, 2..4);
            let k = extended_cometric_matrix(&c);
            let oracle = pinv(&metric_weights(&c));
            let err = (k.weights() - &oracle).abs().max() / oracle.abs().max();
            assert!(err <= 1e-9, "relative error {err}");
            assert!(k.asymmetry() <= 1e-12 * k.weights().abs().max());
        }
    }

    #[test]
    fn extended_cometric_closed_form_identities() {
        // Row and total sums of the unprojected part lambda^1 lambda^max - lambda^i lambda^j.
        let mut r = rng(5);
        let c = random_polygon(&mut r, 5..20, 2..3);
        let n = c.grid().n();
        let lam = c.tail_sums();
        let kap = c.weighted_tail_sums();
        let q = super::second_moment(&c);
        let m = DMatrix::from_fn(n, n, |i, j| lam[0] * lam[i.max(j)] - lam[i] * lam[j]);
        for j in 0..n {
            let col: f64 = m.column(j).sum();
            assert!((col - (lam[0] * kap[j] - kap[0] * lam[j])).abs() <= 1e-9 * lam[0] * kap[0]);
        }
        let total = m.sum();
        assert!((total - (lam[0] * q - kap[0] * kap[0])).abs() <= 1e-9 * lam[0] * q);
    }

    #[test]
    fn translation_kernel_and_rank() {
        let mut r = rng(6);
        for _ in 0..10 {
            let c = random_polygon(&mut r, 3..20, 2..4);
            let k = extended_cometric_matrix(&c);
            let d = c.grid().d();
            let mut v = vec![0.0; c.grid().len()];
            for (idx, x) in v.iter_mut().enumerate() {
                *x = [0.3, -1.2, 2.0][idx % d];
            }
            let a = Covector::new(c.grid(), v).unwrap();
            assert!(k.apply(&a).max_abs() <= 1e-10 * k.weights().abs().max());
            let eig = k.eigenvalues();
            let smax = eig.last().unwrap().abs();
            assert!(eig[..d].iter().all(|e| e.abs() <= 1e-10 * smax));
            assert!(eig[d] > 1e-6 * smax);
        }
    }

    #[test]
    fn moore_penrose_identities() {
        let mut r = rng(7);
        for _ in 0..20 {
            let c = random_polygon(&mut r, 2..33, 2..4);
            let g = KernelMatrix::new(c.grid(), metric_weights(&c)).to_dense();
            let k = extended_cometric_matrix(&c).to_dense();
            let rel = |a: &DMatrix<f64>, b: &DMatrix<f64>| (a - b).norm() / b.norm();
            assert!(rel(&(&g * &k * &g), &g) <= 1e-9);
            assert!(rel(&(&k * &g * &k), &k) <= 1e-9);
            let kg = &k * &g;
            let gk = &g * &k;
            assert!(rel(&kg.transpose(), &kg) <= 1e-9);
            assert!(rel(&gk.transpose(), &gk) <= 1e-9);
            // KG is the matrix of the mean-zero projection
            let n = c.grid().n();
            let proj = KernelMatrix::new(
                c.grid(),
                DMatrix::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64),
            )
            .to_dense();
            assert!(rel(&kg, &proj) <= 1e-9);
        }
    }

    #[test]
    fn hamiltonian_matches_half_metric() {
        let mut r = rng(8);
        for _ in 0..30 {
            let c = random_polygon(&mut r, 2..30, 2..4);
            let h = pi1(&random_field(&mut r, c.grid()));
            let e = metric(&c, &h, &h);
            assert!((hamiltonian(&c, &momentum(&c, &h)) - 0.5 * e).abs() <= 1e-10 * (1.0 + e));
            // K G h = h for mean-zero h
            let back = extended_cometric_matrix(&c).apply(&momentum(&c, &h));
            assert!(back.max_abs_diff(&h) <= 1e-9 * (1.0 + h.max_abs()));
        }
    }

    #[test]
    fn hamiltonian_gradient_matches_central_differences() {
        let mut r = rng(9);
        for _ in 0..20 {
            let c = random_polygon(&mut r, 2..17, 2..4);
            let a = random_covector(&mut r, c.grid());
            let grad = hamiltonian_gradient_c(&c, &a);
            let step = 1e-5;
            let mut fd = vec![0.0; c.grid().len()];
            for (idx, slot) in fd.iter_mut().enumerate() {
                let mut plus = c.vertices().to_vec();
                let mut minus = plus.clone();
                plus[idx] += step;
                minus[idx] -= step;
                let hp = hamiltonian(&Polygon::new(c.grid(), plus).unwrap(), &a);
                let hm = hamiltonian(&Polygon::new(c.grid(), minus).unwrap(), &a);
                *slot = (hp - hm) / (2.0 * step);
            }
            let err = grad.values().iter().zip(&fd).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            let scale = fd.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            assert!(err <= 1e-6 * scale, "gradient error {err} vs scale {scale}");
            assert!(crate::curve::inf_norm(&grad.sum()) <= 1e-12 * (1.0 + scale));
        }
    }

    #[test]
    fn invariances() {
        let mut r = rng(10);
        for _ in 0..20 {
            let c = random_polygon(&mut r, 3..20, 2..3);
            let h = random_field(&mut r, c.grid());
            let k = random_field(&mut r, c.grid());
            let g = metric(&c, &h, &k);
            let scale = (metric(&c, &h, &h) * metric(&c, &k, &k)).sqrt();

            let s = 3.7;
            let cs = Polygon::new(c.grid(), c.vertices().iter().map(|x| x * s).collect()).unwrap();
            assert!((metric(&cs, &h.scaled(s), &k.scaled(s)) - g).abs() <= 1e-12 * scale);

            let (cos, sin) = (0.83f64.cos(), 0.83f64.sin());
            let rot = |v: &[f64]| -> Vec<f64> {
                v.chunks(2).flat_map(|p| [cos * p[0] - sin * p[1], sin * p[0] + cos * p[1]]).collect()
            };
            let cr = Polygon::new(c.grid(), rot(c.vertices())).unwrap();
            let hr = VertexField::new(c.grid(), rot(h.values())).unwrap();
            let kr = VertexField::new(c.grid(), rot(k.values())).unwrap();
            assert!((metric(&cr, &hr, &kr) - g).abs() <= 1e-12 * scale);

            let shift = |v: &[f64]| -> Vec<f64> {
                let mut w = v.to_vec();
                w.rotate_left(2);
                w
            };
            let cc = Polygon::new(c.grid(), shift(c.vertices())).unwrap();
            let hc = VertexField::new(c.grid(), shift(h.values())).unwrap();
            let kc = VertexField::new(c.grid(), shift(k.values())).unwrap();
            assert!((metric(&cc, &hc, &kc) - g).abs() <= 1e-12 * scale);
        }
    }
}
