//! Random fixtures shared by the unit tests.

use std::f64::consts::PI;
use std::ops::Range;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::curve::{Covector, Grid, Polygon, VertexField};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Star-shaped polygon around the origin with radii in [0.5, 1.5] and
/// jittered angles, so every edge is comfortably long.
pub fn random_polygon(r: &mut impl Rng, n: Range<usize>, d: Range<usize>) -> Polygon {
    let n = r.gen_range(n);
    let d = r.gen_range(d);
    let grid = Grid::new(n, d).unwrap();
    let mut v = Vec::with_capacity(n * d);
    for i in 0..n {
        let t = 2.0 * PI * (i as f64 + r.gen_range(-0.3..0.3)) / n as f64;
        let rad = r.gen_range(0.5..1.5);
        v.push(rad * t.cos());
        v.push(rad * t.sin());
        for _ in 2..d {
            v.push(r.gen_range(-0.5..0.5));
        }
    }
    Polygon::new(grid, v).unwrap().centered()
}

pub fn random_field(r: &mut impl Rng, grid: Grid) -> VertexField {
    VertexField::new(grid, (0..grid.len()).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap()
}

pub fn random_covector(r: &mut impl Rng, grid: Grid) -> Covector {
    Covector::new(grid, (0..grid.len()).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// Smooth curve near a circle and a smooth velocity field, sampled at `n`
/// vertices in `R^d`; the velocity is scaled to unit energy times `speed`.
pub fn random_smooth_state(r: &mut impl Rng, n: usize, d: usize, speed: f64) -> (Polygon, VertexField) {
    use crate::fixtures::FourierSeries;
    use crate::metric::metric;
    let mut curve = FourierSeries::circle(1.0, d);
    let mut field = FourierSeries { cos: vec![], sin: vec![] };
    for k in 0..3 {
        let amp = if k == 0 { 0.0 } else { 0.15 / (k + 1) as f64 };
        let mut rand_vec = |s: f64| -> Vec<f64> { (0..d).map(|_| s * r.gen_range(-1.0..1.0)).collect() };
        if k > 0 {
            curve.cos.push(rand_vec(amp));
            curve.sin.push(rand_vec(amp));
        }
        field.cos.push(rand_vec(1.0 / (k + 1) as f64));
        field.sin.push(rand_vec(1.0 / (k + 1) as f64));
    }
    let c = crate::fixtures::gen_fourier_curve(&curve, n).unwrap();
    let v = field.sample(n).unwrap();
    let e = metric(&c, &v, &v).sqrt();
    (c, v.scaled(speed / e))
}
