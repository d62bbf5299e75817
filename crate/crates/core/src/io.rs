//! Versioned JSON documents for curves, tangent fields, covectors and SRV
//! pairs.
//!
//! Layout (schema version 1):
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "grid": { "n": 4, "d": 2 },
//!   "role": "polygon",
//!   "values": [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]],
//!   "flags": { "mean_zero": true, "sum_zero": false },
//!   "metadata": { "generator": "regular-polygon" }
//! }
//! ```
//!
//! `values` holds one row per grid point; rows have `d` entries, except for
//! `srv_pair` documents whose rows are `[e_i, f_i]` (and `d` must be 2).
//! `flags` and `metadata` may be omitted. Declared flags are re-checked on
//! load: `mean_zero` needs `|sum_i v_i|_inf <= 1e-9` and is meaningful for
//! `polygon` and `tangent`, `sum_zero` needs the same of a `covector`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::{column_sum, inf_norm, Covector, Grid, Polygon, VertexField, MEAN_ZERO_TOL};
use crate::srvt::SqrtVelocityPair;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("validation error: {invariant}")]
    Validation { invariant: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> DocumentError {
    DocumentError::Schema { path: path.into(), message: message.into() }
}

fn invalid(invariant: impl Into<String>) -> DocumentError {
    DocumentError::Validation { invariant: invariant.into() }
}

impl From<crate::Error> for DocumentError {
    fn from(e: crate::Error) -> Self {
        invalid(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    pub d: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Polygon,
    Tangent,
    Covector,
    SrvPair,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Flags {
    #[serde(default)]
    pub mean_zero: bool,
    #[serde(default)]
    pub sum_zero: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveDocument {
    pub schema_version: u32,
    pub grid: GridSpec,
    pub role: Role,
    pub values: Vec<Vec<f64>>,
    #[serde(default)]
    pub flags: Flags,
    #[serde(default)]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

fn rows(values: &[f64], width: usize) -> Vec<Vec<f64>> {
    values.chunks(width).map(<[f64]>::to_vec).collect()
}

impl CurveDocument {
    fn build(grid: Grid, role: Role, values: &[f64], flags: Flags) -> Self {
        CurveDocument {
            schema_version: SCHEMA_VERSION,
            grid: GridSpec { n: grid.n(), d: grid.d() },
            role,
            values: rows(values, grid.d()),
            flags,
            metadata: BTreeMap::new(),
        }
    }

    pub fn from_polygon(c: &Polygon) -> Self {
        let flags = Flags { mean_zero: c.is_flagged_mean_zero(), sum_zero: false };
        Self::build(c.grid(), Role::Polygon, c.vertices(), flags)
    }

    /// Point cloud (e.g. landmarks) stored as a polygon-role document
    /// without the immersion requirement being checked on save.
    pub fn from_points(v: &VertexField) -> Self {
        let flags = Flags { mean_zero: v.is_flagged_mean_zero(), sum_zero: false };
        Self::build(v.grid(), Role::Polygon, v.values(), flags)
    }

    pub fn from_tangent(h: &VertexField) -> Self {
        let flags = Flags { mean_zero: h.is_flagged_mean_zero(), sum_zero: false };
        Self::build(h.grid(), Role::Tangent, h.values(), flags)
    }

    pub fn from_covector(a: &Covector) -> Self {
        let flags = Flags { mean_zero: false, sum_zero: a.is_flagged_sum_zero() };
        Self::build(a.grid(), Role::Covector, a.values(), flags)
    }

    pub fn from_srv_pair(s: &SqrtVelocityPair) -> Self {
        let values: Vec<Vec<f64>> = s.e().iter().zip(s.f()).map(|(&e, &f)| vec![e, f]).collect();
        CurveDocument {
            schema_version: SCHEMA_VERSION,
            grid: GridSpec { n: s.grid().n(), d: 2 },
            role: Role::SrvPair,
            values,
            flags: Flags::default(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn with_metadata(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.metadata.insert(key.to_string(), value.into());
        self
    }

    /// Parses and checks shape; flags and role invariants are checked by
    /// [`CurveDocument::validate`] and the typed accessors.
    pub fn from_json(text: &str) -> Result<Self, DocumentError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let doc: CurveDocument = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            schema(path, e.into_inner().to_string())
        })?;
        doc.check_shape()?;
        Ok(doc)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("documents hold only finite numbers");
        s.push('\n');
        s
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DocumentError> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), DocumentError> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    fn check_shape(&self) -> Result<(), DocumentError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(schema(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        let GridSpec { n, d } = self.grid;
        if n == 0 {
            return Err(schema("grid.n", "must be at least 1"));
        }
        if d == 0 {
            return Err(schema("grid.d", "must be at least 1"));
        }
        if self.role == Role::SrvPair && d != 2 {
            return Err(schema("grid.d", format!("srv_pair documents are planar, got d = {d}")));
        }
        if self.values.len() != n {
            return Err(schema("values", format!("expected {n} rows, got {}", self.values.len())));
        }
        let width = if self.role == Role::SrvPair { 2 } else { d };
        for (i, row) in self.values.iter().enumerate() {
            if row.len() != width {
                return Err(schema(format!("values[{i}]"), format!("expected {width} entries, got {}", row.len())));
            }
        }
        Ok(())
    }

    fn flat(&self) -> Vec<f64> {
        self.values.concat()
    }

    fn grid(&self) -> Result<Grid, DocumentError> {
        Ok(Grid::new(self.grid.n, self.grid.d)?)
    }

    fn require_role(&self, role: Role) -> Result<(), DocumentError> {
        if self.role != role {
            return Err(invalid(format!("expected role {role:?}, document has role {:?}", self.role)));
        }
        Ok(())
    }

    fn check_flags(&self) -> Result<(), DocumentError> {
        let Flags { mean_zero, sum_zero } = self.flags;
        if mean_zero && !matches!(self.role, Role::Polygon | Role::Tangent) {
            return Err(invalid(format!("flag mean_zero is not defined for role {:?}", self.role)));
        }
        if sum_zero && self.role != Role::Covector {
            return Err(invalid(format!("flag sum_zero is not defined for role {:?}", self.role)));
        }
        if mean_zero || sum_zero {
            let residual = inf_norm(&column_sum_rows(&self.values, self.grid.d));
            if residual > MEAN_ZERO_TOL {
                let name = if mean_zero { "mean_zero" } else { "sum_zero" };
                return Err(invalid(format!(
                    "flag {name} declared but |sum of rows|_inf = {residual:e} exceeds {MEAN_ZERO_TOL:e}"
                )));
            }
        }
        Ok(())
    }

    /// Re-checks every invariant implied by the role and the declared flags.
    pub fn validate(&self) -> Result<(), DocumentError> {
        self.check_shape()?;
        match self.role {
            Role::Polygon => self.to_polygon().map(drop),
            Role::Tangent => self.to_tangent().map(drop),
            Role::Covector => self.to_covector().map(drop),
            Role::SrvPair => self.to_srv_pair().map(drop),
        }
    }

    pub fn to_polygon(&self) -> Result<Polygon, DocumentError> {
        self.require_role(Role::Polygon)?;
        self.check_flags()?;
        let grid = self.grid()?;
        Ok(if self.flags.mean_zero {
            Polygon::new_mean_zero(grid, self.flat())?
        } else {
            Polygon::new(grid, self.flat())?
        })
    }

    /// Polygon-role document read as a bare point set: no immersion check
    /// and a single point is allowed.
    pub fn to_points(&self) -> Result<VertexField, DocumentError> {
        self.require_role(Role::Polygon)?;
        self.check_flags()?;
        let grid = Grid::for_landmarks(self.grid.n, self.grid.d)?;
        Ok(if self.flags.mean_zero {
            VertexField::new_mean_zero(grid, self.flat())?
        } else {
            VertexField::new(grid, self.flat())?
        })
    }

    pub fn to_tangent(&self) -> Result<VertexField, DocumentError> {
        self.require_role(Role::Tangent)?;
        self.check_flags()?;
        let grid = self.grid()?;
        Ok(if self.flags.mean_zero {
            VertexField::new_mean_zero(grid, self.flat())?
        } else {
            VertexField::new(grid, self.flat())?
        })
    }

    pub fn to_covector(&self) -> Result<Covector, DocumentError> {
        self.require_role(Role::Covector)?;
        self.check_flags()?;
        let grid = Grid::for_landmarks(self.grid.n, self.grid.d)?;
        Ok(if self.flags.sum_zero {
            Covector::new_sum_zero(grid, self.flat())?
        } else {
            Covector::new(grid, self.flat())?
        })
    }

    pub fn to_srv_pair(&self) -> Result<SqrtVelocityPair, DocumentError> {
        self.require_role(Role::SrvPair)?;
        self.check_flags()?;
        let e = self.values.iter().map(|r| r[0]).collect();
        let f = self.values.iter().map(|r| r[1]).collect();
        Ok(SqrtVelocityPair::new(e, f)?)
    }
}

fn column_sum_rows(values: &[Vec<f64>], d: usize) -> Vec<f64> {
    let flat = values.concat();
    match Grid::for_landmarks(values.len(), d) {
        Ok(grid) => column_sum(grid, &flat),
        Err(_) => vec![f64::INFINITY],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::gen_regular_polygon;
    use crate::testutil::{random_covector, random_field, random_polygon, rng};

    #[test]
    fn polygon_round_trip_is_bit_exact() {
        let mut r = rng(41);
        for _ in 0..50 {
            let c = random_polygon(&mut r, 3..40, 2..5);
            let text = CurveDocument::from_polygon(&c).to_json();
            let back = CurveDocument::from_json(&text).unwrap().to_polygon().unwrap();
            assert_eq!(back.grid(), c.grid());
            for (a, b) in back.vertices().iter().zip(c.vertices()) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
            assert_eq!(back.is_flagged_mean_zero(), c.is_flagged_mean_zero());
        }
    }

    #[test]
    fn awkward_doubles_round_trip() {
        let grid = Grid::new(3, 2).unwrap();
        let vals = vec![0.1 + 0.2, -1e-300, 5e-324, 1.0 / 3.0, f64::MAX, -f64::MIN_POSITIVE];
        let h = VertexField::new(grid, vals.clone()).unwrap();
        let back = CurveDocument::from_json(&CurveDocument::from_tangent(&h).to_json())
            .unwrap()
            .to_tangent()
            .unwrap();
        for (a, b) in back.values().iter().zip(&vals) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn field_and_covector_round_trip() {
        let mut r = rng(42);
        let c = random_polygon(&mut r, 5..6, 3..4);
        let h = random_field(&mut r, c.grid());
        let a = random_covector(&mut r, c.grid());
        let h2 = CurveDocument::from_json(&CurveDocument::from_tangent(&h).to_json()).unwrap().to_tangent().unwrap();
        assert_eq!(h2.values(), h.values());
        let a2 = CurveDocument::from_json(&CurveDocument::from_covector(&a).to_json()).unwrap().to_covector().unwrap();
        assert_eq!(a2.values(), a.values());
        assert_eq!(a2.is_flagged_sum_zero(), a.is_flagged_sum_zero());
    }

    #[test]
    fn srv_pair_round_trip() {
        let s = crate::srvt::tests::half_angle_pair(7);
        let doc = CurveDocument::from_srv_pair(&s);
        assert_eq!(doc.values[0].len(), 2);
        let back = CurveDocument::from_json(&doc.to_json()).unwrap().to_srv_pair().unwrap();
        assert_eq!(back.e(), s.e());
        assert_eq!(back.f(), s.f());
    }

    #[test]
    fn metadata_survives() {
        let c = gen_regular_polygon(5, 1.0).unwrap();
        let doc = CurveDocument::from_polygon(&c).with_metadata("generator", "regular").with_metadata("n", 5);
        let back = CurveDocument::from_json(&doc.to_json()).unwrap();
        assert_eq!(back, doc);
    }

    fn square_json(values: &str, flags: &str) -> String {
        format!(r#"{{"schema_version":1,"grid":{{"n":4,"d":2}},"role":"polygon","values":{values},"flags":{flags}}}"#)
    }

    #[test]
    fn wrong_shape_is_a_schema_error() {
        let text = square_json("[[1,0],[0,1],[-1,0,7],[0,-1]]", r#"{"mean_zero":true}"#);
        match CurveDocument::from_json(&text) {
            Err(DocumentError::Schema { path, .. }) => assert_eq!(path, "values[2]"),
            other => panic!("expected schema error, got {other:?}"),
        }
        let text = square_json("[[1,0],[0,1],[-1,0]]", "{}");
        assert!(matches!(CurveDocument::from_json(&text), Err(DocumentError::Schema { path, .. }) if path == "values"));
    }

    #[test]
    fn type_errors_carry_the_field_path() {
        let text = square_json(r#"[[1,0],[0,"x"],[-1,0],[0,-1]]"#, "{}");
        match CurveDocument::from_json(&text) {
            Err(DocumentError::Schema { path, .. }) => assert_eq!(path, "values[1][1]"),
            other => panic!("expected schema error, got {other:?}"),
        }
        let text = text.replace("\"polygon\"", "\"spline\"");
        assert!(matches!(CurveDocument::from_json(&text), Err(DocumentError::Schema { path, .. }) if path == "role"));
        let text = square_json("[[1,0],[0,1],[-1,0],[0,-1]]", r#"{"centred":true}"#);
        assert!(matches!(CurveDocument::from_json(&text), Err(DocumentError::Schema { path, .. }) if path.starts_with("flags")));
        let text = square_json("[[1,0],[0,1],[-1,0],[0,-1]]", "{}").replace("\"schema_version\":1", "\"schema_version\":9");
        assert!(matches!(CurveDocument::from_json(&text), Err(DocumentError::Schema { path, .. }) if path == "schema_version"));
    }

    #[test]
    fn false_flags_are_a_validation_error() {
        let text = square_json("[[2,0],[1,1],[0,0],[1,-1]]", r#"{"mean_zero":true}"#);
        let doc = CurveDocument::from_json(&text).unwrap();
        match doc.validate() {
            Err(DocumentError::Validation { invariant }) => assert!(invariant.contains("mean_zero"), "{invariant}"),
            other => panic!("expected validation error, got {other:?}"),
        }
        let doc = CurveDocument { flags: Flags { mean_zero: false, sum_zero: true }, ..doc };
        assert!(matches!(doc.validate(), Err(DocumentError::Validation { invariant }) if invariant.contains("sum_zero")));
        let text = square_json("[[2,0],[1,1],[0,0],[1,-1]]", "{}");
        CurveDocument::from_json(&text).unwrap().validate().unwrap();
    }

    #[test]
    fn degenerate_polygons_fail_validation() {
        let text = square_json("[[1,0],[1,0],[-1,0],[0,-1]]", "{}");
        let doc = CurveDocument::from_json(&text).unwrap();
        assert!(matches!(doc.validate(), Err(DocumentError::Validation { invariant }) if invariant.contains("degenerate")));
        // the same data is a fine point set
        assert!(doc.to_points().is_ok());
    }

    #[test]
    fn role_must_match() {
        let c = gen_regular_polygon(4, 1.0).unwrap();
        let doc = CurveDocument::from_polygon(&c);
        assert!(matches!(doc.to_covector(), Err(DocumentError::Validation { .. })));
    }
}
