//! Text formats written and read by the CLI: trajectory CSV, kernel weight
//! grids and SVG frames.

use std::fmt::Write as _;
use std::path::Path;

use elastic_core::dynamics::Trajectory;
use nalgebra::DMatrix;

use crate::error::CliError;

/// Shortest decimal that parses back to the same double; scientific
/// notation outside `[1e-5, 1e16)` keeps tiny and huge values compact.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) || !a.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn trajectory_header(n: usize, d: usize, landmarks: bool) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for i in 0..n {
        for k in 0..d {
            h.push(format!("x{i}_{k}"));
        }
    }
    h.extend(["energy", "length", "min_edge", "vertex_sum"].map(String::from));
    h.extend((0..d).map(|k| format!("momentum_{k}")));
    if landmarks {
        h.push("min_pair_distance".into());
    }
    h
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<(), CliError> {
    let first = &traj.samples[0];
    let grid = first.state.grid();
    let landmarks = first.diagnostics.min_pair_distance.is_some();
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
    w.write_record(trajectory_header(grid.n(), grid.d(), landmarks)).map_err(|e| CliError::io(path, e))?;
    for s in &traj.samples {
        let dg = &s.diagnostics;
        let mut row = vec![num(s.t)];
        row.extend(s.state.positions().iter().map(|&x| num(x)));
        row.extend([dg.energy, dg.length, dg.min_edge, dg.vertex_sum].map(num));
        row.extend(dg.total_momentum.iter().map(|&x| num(x)));
        if let Some(m) = dg.min_pair_distance {
            row.push(num(m));
        }
        w.write_record(&row).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_grid(path: &Path, m: &DMatrix<f64>) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(|e| CliError::io(path, e))?;
    for i in 0..m.nrows() {
        w.write_record(m.row(i).iter().map(|&x| num(x))).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Stored samples of a trajectory CSV: times and planar vertex positions.
pub struct Frames {
    pub times: Vec<f64>,
    pub points: Vec<Vec<[f64; 2]>>,
}

/// Reads the `t` and `x{i}_{k}` columns; `k >= 2` coordinates are dropped.
pub fn read_frames(path: &Path, bytes: &[u8]) -> Result<Frames, CliError> {
    let mut r = csv::Reader::from_reader(bytes);
    let headers = r.headers().map_err(|e| CliError::io(path, e))?.clone();
    let t_col = headers
        .iter()
        .position(|h| h == "t")
        .ok_or_else(|| CliError::Validation(format!("{}: no `t` column", path.display())))?;
    let mut cols = Vec::new();
    for (idx, h) in headers.iter().enumerate() {
        let parsed = h.strip_prefix('x').and_then(|rest| rest.split_once('_')).and_then(|(i, k)| {
            Some((i.parse::<usize>().ok()?, k.parse::<usize>().ok()?))
        });
        if let Some((i, k)) = parsed {
            cols.push((idx, i, k));
        }
    }
    let n = cols.iter().map(|c| c.1 + 1).max().unwrap_or(0);
    let d = cols.iter().map(|c| c.2 + 1).max().unwrap_or(0);
    if n == 0 || d < 2 || cols.len() != n * d {
        return Err(CliError::Validation(format!(
            "{}: expected planar vertex columns x{{i}}_{{k}}, found {} columns for n = {n}, d = {d}",
            path.display(),
            cols.len()
        )));
    }
    let mut frames = Frames { times: Vec::new(), points: Vec::new() };
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| CliError::io(path, e))?;
        let field = |idx: usize| -> Result<f64, CliError> {
            rec.get(idx).and_then(|s| s.trim().parse().ok()).ok_or_else(|| {
                CliError::Validation(format!("{}: row {}: bad number in column {}", path.display(), line + 1, &headers[idx]))
            })
        };
        frames.times.push(field(t_col)?);
        let mut pts = vec![[0.0; 2]; n];
        for &(idx, i, k) in &cols {
            if k < 2 {
                pts[i][k] = field(idx)?;
            }
        }
        frames.points.push(pts);
    }
    Ok(frames)
}

/// One closed polyline per frame, all frames sharing a square view box
/// around the union of their vertices (y axis pointing up).
pub fn render_svgs(frames: &Frames, size: u32) -> Vec<String> {
    let all = frames.points.iter().flatten();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in all {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
    let size = f64::from(size);
    let margin = 0.05 * size;
    let scale = (size - 2.0 * margin) / span;
    let centre = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
    let map = |p: &[f64; 2]| (size / 2.0 + scale * (p[0] - centre[0]), size / 2.0 - scale * (p[1] - centre[1]));
    frames
        .points
        .iter()
        .zip(&frames.times)
        .map(|(pts, t)| {
            let mut coords = String::new();
            for p in pts.iter().chain(pts.first()) {
                let (x, y) = map(p);
                let _ = write!(coords, "{x:.4},{y:.4} ");
            }
            format!(
                concat!(
                    "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{s}\" height=\"{s}\" viewBox=\"0 0 {s} {s}\">\n",
                    "<title>t = {t}</title>\n",
                    "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
                    "<polyline points=\"{coords}\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" stroke-linejoin=\"round\"/>\n",
                    "</svg>\n"
                ),
                s = size,
                t = num(*t),
                coords = coords.trim_end(),
            )
        })
        .collect()
}
