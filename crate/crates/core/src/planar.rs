//! Planar diagnostics: winding number about a point, turning number and
//! self-intersections of a closed polygon in `R^2`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::curve::Polygon;
use crate::error::{Error, Result};

/// Absolute tolerance for point-on-segment and segment-contact tests.
pub const GEOMETRY_TOL: f64 = 1e-12;

type P2 = [f64; 2];

fn require_planar(c: &Polygon) -> Result<()> {
    if c.grid().d() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, actual: c.grid().d() });
    }
    Ok(())
}

fn pt(c: &Polygon, i: usize) -> P2 {
    let v = c.vertex(i);
    [v[0], v[1]]
}

fn sub(a: P2, b: P2) -> P2 {
    [a[0] - b[0], a[1] - b[1]]
}

fn dot(a: P2, b: P2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn cross(a: P2, b: P2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn lerp(a: P2, b: P2, t: f64) -> P2 {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

fn norm(a: P2) -> f64 {
    dot(a, a).sqrt()
}

/// Closest point of segment `[a, b]` to `p`, as a parameter in `[0, 1]`.
fn project(p: P2, a: P2, b: P2) -> f64 {
    let d = sub(b, a);
    let dd = dot(d, d);
    if dd == 0.0 {
        0.0
    } else {
        (dot(sub(p, a), d) / dd).clamp(0.0, 1.0)
    }
}

fn point_segment_distance(p: P2, a: P2, b: P2) -> f64 {
    norm(sub(p, lerp(a, b, project(p, a, b))))
}

/// Degree of the polygon around `p` by summing signed vertex angles.
pub fn winding_number(c: &Polygon, p: [f64; 2]) -> Result<i64> {
    require_planar(c)?;
    let n = c.grid().n();
    let mut total = 0.0;
    for i in 0..n {
        let (a, b) = (pt(c, i), pt(c, c.grid().next(i)));
        let distance = point_segment_distance(p, a, b);
        if distance <= GEOMETRY_TOL {
            return Err(Error::PointOnCurve { edge: i, distance });
        }
        let (u, v) = (sub(a, p), sub(b, p));
        total += cross(u, v).atan2(dot(u, v));
    }
    Ok((total / (2.0 * PI)).round() as i64)
}

/// Sum of signed exterior angles divided by `2 pi` (the rotation index).
/// A fold-back vertex contributes `+-pi` depending on round-off and is
/// therefore not meaningful; the sum is returned unrounded.
pub fn turning_number(c: &Polygon) -> Result<f64> {
    require_planar(c)?;
    let grid = c.grid();
    let mut total = 0.0;
    for i in 0..grid.n() {
        let e0 = sub(pt(c, grid.next(i)), pt(c, i));
        let j = grid.next(i);
        let e1 = sub(pt(c, grid.next(j)), pt(c, j));
        total += cross(e0, e1).atan2(dot(e0, e1));
    }
    Ok(total / (2.0 * PI))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intersection {
    pub edge_i: usize,
    pub edge_j: usize,
    /// Crossing point, or the midpoint of a collinear overlap.
    pub point: [f64; 2],
}

/// Closest points `(s, t)` between segments `[a, b]` and `[c, d]`.
fn closest_params(a: P2, b: P2, c: P2, d: P2) -> (f64, f64) {
    let (u, v, w) = (sub(b, a), sub(d, c), sub(a, c));
    let (uu, uv, vv, uw, vw) = (dot(u, u), dot(u, v), dot(v, v), dot(u, w), dot(v, w));
    let den = uu * vv - uv * uv;
    let mut s = if den > 1e-14 * uu * vv { ((uv * vw - vv * uw) / den).clamp(0.0, 1.0) } else { 0.0 };
    let mut t = if vv > 0.0 { ((uv * s + vw) / vv).clamp(0.0, 1.0) } else { 0.0 };
    if uu > 0.0 {
        s = ((uv * t - uw) / uu).clamp(0.0, 1.0);
        t = if vv > 0.0 { ((uv * s + vw) / vv).clamp(0.0, 1.0) } else { 0.0 };
    }
    (s, t)
}

fn segment_contact(a: P2, b: P2, c: P2, d: P2) -> Option<P2> {
    // candidate pairs: the generic interior solution plus all endpoint projections
    let (s, t) = closest_params(a, b, c, d);
    let mut best = (norm(sub(lerp(a, b, s), lerp(c, d, t))), lerp(a, b, s), lerp(c, d, t));
    for (p, q0, q1, first) in [(a, c, d, true), (b, c, d, true), (c, a, b, false), (d, a, b, false)] {
        let r = project(p, q0, q1);
        let q = lerp(q0, q1, r);
        let dist = norm(sub(p, q));
        if dist < best.0 {
            best = if first { (dist, p, q) } else { (dist, q, p) };
        }
    }
    if best.0 > GEOMETRY_TOL {
        return None;
    }
    let (u, v) = (sub(b, a), sub(d, c));
    if cross(u, v).abs() <= GEOMETRY_TOL * norm(u) * norm(v) {
        // parallel: report the middle of the overlap along [a, b]
        let uu = dot(u, u);
        let s0 = dot(sub(c, a), u) / uu;
        let s1 = dot(sub(d, a), u) / uu;
        let lo = s0.min(s1).max(0.0);
        let hi = s0.max(s1).min(1.0);
        if hi >= lo {
            return Some(lerp(a, b, 0.5 * (lo + hi)));
        }
    }
    Some(lerp(best.1, best.2, 0.5))
}

/// All pairs of edges that touch, cross or overlap. Adjacent edges share a
/// vertex by construction; they are reported only when they fold back onto
/// each other along a segment of positive length.
pub fn self_intersections(c: &Polygon) -> Result<Vec<Intersection>> {
    require_planar(c)?;
    let grid = c.grid();
    let n = grid.n();
    let mut out = Vec::new();
    for i in 0..n {
        let (a, b) = (pt(c, i), pt(c, grid.next(i)));
        for j in i + 1..n {
            let (p, q) = (pt(c, j), pt(c, grid.next(j)));
            let adjacent = grid.next(i) == j || grid.next(j) == i;
            let point = if adjacent {
                // shared vertex s, far ends x (edge i side) and y (edge j side)
                let (s, x, y) = if grid.next(i) == j { (b, a, q) } else { (a, b, p) };
                let folded = point_segment_distance(x, s, y) <= GEOMETRY_TOL
                    || point_segment_distance(y, s, x) <= GEOMETRY_TOL;
                folded.then(|| {
                    let near = if norm(sub(x, s)) <= norm(sub(y, s)) { x } else { y };
                    lerp(s, near, 0.5)
                })
            } else {
                segment_contact(a, b, p, q)
            };
            if let Some(point) = point {
                out.push(Intersection { edge_i: i, edge_j: j, point });
            }
        }
    }
    Ok(out)
}
