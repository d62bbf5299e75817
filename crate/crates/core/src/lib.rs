//! Discrete geometry of the scale-invariant first-order Sobolev ("elastic")
//! metric on closed polygons modulo translations.
//!
//! Piecewise-linear curves form a totally geodesic subspace for this metric,
//! so every geodesic computed here is an exact geodesic of the continuum
//! problem, up to ODE integration error only.

// `!(x > guard)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curve;
pub mod dynamics;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod landmark;
pub mod metric;
pub mod planar;
pub mod srvt;

#[cfg(test)]
pub(crate) mod testutil;

pub use curve::{Covector, EdgeField, Grid, Polygon, VertexField};
pub use error::{Error, Result};
pub use metric::KernelMatrix;
