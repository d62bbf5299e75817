use std::fs;
use std::path::{Path, PathBuf};

use elastic_core::dynamics::{
    integrate_hamiltonian, integrate_lagrangian, log_map, GeodesicState, IntegratorConfig, ShootingConfig,
    Trajectory,
};
use elastic_core::fixtures::{gen_diamond, gen_fourier_curve, gen_regular_polygon, FourierSeries};
use elastic_core::io::{CurveDocument, Role};
use elastic_core::landmark::{elastic_kernel_weights, lddmm_hamiltonian_flow, lddmm_kernel_matrix, LandmarkConfig};
use elastic_core::metric::{metric, momentum};
use elastic_core::planar::{self_intersections, turning_number};
use elastic_core::srvt::{phi, pullback_isometry_defect, SqrtVelocityPair};
use elastic_core::{Grid, Polygon};
use serde_json::json;

use crate::error::CliError;
use crate::manifest::{AbortInfo, Context};
use crate::output::{read_frames, render_svgs, write_grid, write_trajectory};
use crate::{
    Command, DistArgs, ExpArgs, Fixture, FlowHamiltonianArgs, FlowLddmmArgs, GenArgs, IntegrationArgs, KernelArgs,
    KernelKind, LogArgs, RenderArgs, SampleRole, ShootingArgs, SrvtArgs, ValidateArgs,
};

pub fn run(cmd: &Command, ctx: &mut Context) -> Result<(), CliError> {
    match cmd {
        Command::Exp(a) => exp(a, ctx),
        Command::Log(a) => log(a, ctx),
        Command::Dist(a) => dist(a, ctx),
        Command::FlowHamiltonian(a) => flow_hamiltonian(a, ctx),
        Command::FlowLddmm(a) => flow_lddmm(a, ctx),
        Command::Kernel(a) => kernel(a, ctx),
        Command::Srvt(a) => srvt(a, ctx),
        Command::Validate(a) => validate(a, ctx),
        Command::Gen(a) => gen(a, ctx),
        Command::Render(a) => render(a, ctx),
    }
}

fn integrator(a: &IntegrationArgs) -> Result<IntegratorConfig, CliError> {
    let cfg = IntegratorConfig { dt: a.dt, t_end: a.t_end, sample_stride: a.stride, edge_guard: a.edge_guard, ..Default::default() };
    cfg.validate().map_err(|e| CliError::input("integrator", e))?;
    Ok(cfg)
}

fn shooting(a: &ShootingArgs) -> Result<ShootingConfig, CliError> {
    let integrator = IntegratorConfig { dt: a.dt, edge_guard: a.edge_guard, ..Default::default() };
    integrator.validate().map_err(|e| CliError::input("integrator", e))?;
    if a.tol.is_nan() || a.tol <= 0.0 || a.max_iter == 0 {
        return Err(CliError::Validation("shooting needs tol > 0 and max_iter >= 1".into()));
    }
    Ok(ShootingConfig { integrator, tol: a.tol, max_iter: a.max_iter })
}

fn load_polygon(ctx: &mut Context, path: &Path) -> Result<Polygon, CliError> {
    ctx.load(path)?.to_polygon().map_err(|e| CliError::document(path, e))
}

fn same_grid(a: Grid, b: Grid, what: &str) -> Result<(), CliError> {
    if a != b {
        return Err(CliError::Validation(format!(
            "{what}: grid n = {}, d = {} does not match n = {}, d = {}",
            b.n(),
            b.d(),
            a.n(),
            a.d()
        )));
    }
    Ok(())
}

/// Writes the CSV and turns an early stop into a numerical error.
fn finish_trajectory(ctx: &mut Context, out: &Path, traj: &Trajectory) -> Result<(), CliError> {
    let path = ctx.output(out)?;
    write_trajectory(&path, traj)?;
    let first = &traj.samples[0].diagnostics;
    let last = &traj.last().diagnostics;
    ctx.result = Some(json!({
        "samples": traj.samples.len(),
        "t_final": traj.last().t,
        "energy_initial": first.energy,
        "energy_final": last.energy,
        "min_edge_final": last.min_edge,
    }));
    if let Some(abort) = &traj.abort {
        ctx.abort = Some(AbortInfo { time: abort.time, reason: abort.error.to_string() });
        return Err(CliError::Numerical(format!("integration stopped at t = {}: {}", abort.time, abort.error)));
    }
    Ok(())
}

fn exp(a: &ExpArgs, ctx: &mut Context) -> Result<(), CliError> {
    let cfg = integrator(&a.integration)?;
    let c = load_polygon(ctx, &a.input)?;
    let v = ctx.load(&a.vel)?.to_tangent().map_err(|e| CliError::document(&a.vel, e))?;
    same_grid(c.grid(), v.grid(), "velocity")?;
    let traj = integrate_lagrangian(&GeodesicState::Lagrangian { c, v }, &cfg).map_err(CliError::compute)?;
    if let (Some(end), None) = (&a.end, &traj.abort) {
        if let GeodesicState::Lagrangian { c, .. } = &traj.last().state {
            ctx.save(end, &CurveDocument::from_polygon(c))?;
        }
    }
    finish_trajectory(ctx, &a.out, &traj)
}

fn endpoints(ctx: &mut Context, from: &Path, to: &Path) -> Result<(Polygon, Polygon), CliError> {
    let c0 = load_polygon(ctx, from)?;
    let c1 = load_polygon(ctx, to)?;
    same_grid(c0.grid(), c1.grid(), "target polygon")?;
    Ok((c0, c1))
}

fn log(a: &LogArgs, ctx: &mut Context) -> Result<(), CliError> {
    let cfg = shooting(&a.shooting)?;
    let (c0, c1) = endpoints(ctx, &a.from, &a.to)?;
    let res = log_map(&c0, &c1, &cfg).map_err(CliError::compute)?;
    let distance = metric(&c0, &res.velocity, &res.velocity).sqrt();
    ctx.result = Some(json!({
        "iterations": res.iterations,
        "residual": res.residual,
        "history": res.history,
        "distance": distance,
    }));
    let doc = CurveDocument::from_tangent(&res.velocity)
        .with_metadata("iterations", res.iterations)
        .with_metadata("residual", res.residual);
    ctx.save(&a.out, &doc)
}

fn dist(a: &DistArgs, ctx: &mut Context) -> Result<(), CliError> {
    let cfg = shooting(&a.shooting)?;
    let (c0, c1) = endpoints(ctx, &a.from, &a.to)?;
    let res = log_map(&c0, &c1, &cfg).map_err(CliError::compute)?;
    let distance = metric(&c0, &res.velocity, &res.velocity).sqrt();
    let result = json!({ "distance": distance, "iterations": res.iterations, "residual": res.residual });
    println!("{distance}");
    if let Some(out) = &a.out {
        let path = ctx.output(out)?;
        let mut text = serde_json::to_string_pretty(&result).expect("finite values");
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    }
    ctx.result = Some(result);
    Ok(())
}

fn flow_hamiltonian(a: &FlowHamiltonianArgs, ctx: &mut Context) -> Result<(), CliError> {
    let cfg = integrator(&a.integration)?;
    let c = load_polygon(ctx, &a.input)?;
    let alpha = match (&a.momentum, &a.vel) {
        (Some(p), _) => ctx.load(p)?.to_covector().map_err(|e| CliError::document(p, e))?,
        (None, Some(v)) => {
            let h = ctx.load(v)?.to_tangent().map_err(|e| CliError::document(v, e))?;
            same_grid(c.grid(), h.grid(), "velocity")?;
            momentum(&c, &h)
        }
        (None, None) => unreachable!("clap requires one of --momentum and --vel"),
    };
    same_grid(c.grid(), alpha.grid(), "momentum")?;
    let traj = integrate_hamiltonian(&GeodesicState::Hamiltonian { c, a: alpha }, &cfg).map_err(CliError::compute)?;
    finish_trajectory(ctx, &a.out, &traj)
}

fn landmarks(ctx: &mut Context, path: &Path, sigma: f64) -> Result<LandmarkConfig, CliError> {
    let points = ctx.load(path)?.to_points().map_err(|e| CliError::document(path, e))?;
    LandmarkConfig::new(points.grid(), points.into_values(), sigma).map_err(|e| CliError::input("landmarks", e))
}

fn flow_lddmm(a: &FlowLddmmArgs, ctx: &mut Context) -> Result<(), CliError> {
    let cfg = integrator(&a.integration)?;
    let q = landmarks(ctx, &a.input, a.sigma)?;
    let p = ctx.load(&a.momentum)?.to_covector().map_err(|e| CliError::document(&a.momentum, e))?;
    same_grid(q.grid(), p.grid(), "momentum")?;
    let traj = lddmm_hamiltonian_flow(&q, &p, &cfg).map_err(CliError::compute)?;
    finish_trajectory(ctx, &a.out, &traj)
}

/// `<dir>/<stem>.<tag>.<ext>` for `--kind both`.
fn tagged(out: &Path, tag: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = out.extension().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "csv".into());
    out.with_file_name(format!("{stem}.{tag}.{ext}"))
}

fn kernel(a: &KernelArgs, ctx: &mut Context) -> Result<(), CliError> {
    let sigma = match (a.kind, a.sigma) {
        (KernelKind::Elastic, s) => s.unwrap_or(1.0),
        (_, Some(s)) => s,
        (_, None) => return Err(CliError::Validation("--sigma is required for the Gaussian kernel".into())),
    };
    let q = landmarks(ctx, &a.input, sigma)?;
    let elastic = || elastic_kernel_weights(&q).map_err(|e| CliError::input("elastic kernel needs an immersed polygon", e));
    let gaussian = || lddmm_kernel_matrix(&q).weights().clone();
    match a.kind {
        KernelKind::Elastic => write_grid(&ctx.output(&a.out)?, &elastic()?),
        KernelKind::Gaussian => write_grid(&ctx.output(&a.out)?, &gaussian()),
        KernelKind::Both => {
            let e = elastic()?;
            write_grid(&ctx.output(&tagged(&a.out, "elastic"))?, &e)?;
            write_grid(&ctx.output(&tagged(&a.out, "gaussian"))?, &gaussian())
        }
    }
}

fn srvt(a: &SrvtArgs, ctx: &mut Context) -> Result<(), CliError> {
    let doc = ctx.load(&a.input)?;
    let s = if a.stiefel {
        if doc.role != Role::SrvPair {
            return Err(CliError::Validation(format!("{}: expected an srv_pair document", a.input.display())));
        }
        let e: Vec<f64> = doc.values.iter().map(|r| r[0]).collect();
        let f: Vec<f64> = doc.values.iter().map(|r| r[1]).collect();
        SqrtVelocityPair::stiefel(&e, &f).map_err(|e| CliError::input("srv pair", e))?
    } else {
        doc.to_srv_pair().map_err(|e| CliError::document(&a.input, e))?
    };
    let c = phi(&s).map_err(CliError::compute)?;
    let mut result = json!({ "length": c.total_length() });
    if let Some(t) = &a.tangent {
        let tdoc = ctx.load(t)?;
        if tdoc.role != Role::Tangent || tdoc.grid.d != 2 || tdoc.grid.n != s.grid().n() {
            return Err(CliError::Validation(format!(
                "{}: expected a tangent document with {} rows [de, df]",
                t.display(),
                s.grid().n()
            )));
        }
        let mut de: Vec<f64> = tdoc.values.iter().map(|r| r[0]).collect();
        let mut df: Vec<f64> = tdoc.values.iter().map(|r| r[1]).collect();
        if a.project {
            (de, df) = s.project_tangent(&de, &df);
        }
        let rep = pullback_isometry_defect(&s, &de, &df).map_err(|e| CliError::input("srv tangent", e))?;
        result["pullback"] = json!(rep.pullback);
        result["flat"] = json!(rep.flat);
        result["ratio"] = json!(rep.ratio());
        println!("pullback {} flat {} ratio {:?} length {}", rep.pullback, rep.flat, rep.ratio(), rep.length);
    }
    ctx.result = Some(result);
    ctx.save(&a.out, &CurveDocument::from_polygon(&c).with_metadata("source", "srvt"))
}

fn validate(a: &ValidateArgs, ctx: &mut Context) -> Result<(), CliError> {
    let doc = ctx.load(&a.input)?;
    doc.validate().map_err(|e| CliError::document(&a.input, e))?;
    let mut result = json!({
        "role": doc.role,
        "n": doc.grid.n,
        "d": doc.grid.d,
        "flags": doc.flags,
    });
    if doc.role == Role::Polygon {
        let c = doc.to_polygon().map_err(|e| CliError::document(&a.input, e))?;
        result["length"] = json!(c.total_length());
        result["min_edge"] = json!(c.min_edge_length());
        if c.grid().d() == 2 {
            result["turning_number"] = json!(turning_number(&c).map_err(CliError::compute)?);
            result["self_intersections"] = json!(self_intersections(&c).map_err(CliError::compute)?);
        }
    }
    println!("{}: ok", a.input.display());
    println!("{}", serde_json::to_string_pretty(&result).expect("finite values"));
    ctx.result = Some(result);
    Ok(())
}

fn gen(a: &GenArgs, ctx: &mut Context) -> Result<(), CliError> {
    match &a.what {
        Fixture::Diamond { t, out, velocity, acceleration } => {
            let (c, v, acc) = gen_diamond(*t);
            ctx.save(out, &CurveDocument::from_polygon(&c).with_metadata("generator", "diamond").with_metadata("t", *t))?;
            if let Some(p) = velocity {
                ctx.save(p, &CurveDocument::from_tangent(&v).with_metadata("generator", "diamond-velocity"))?;
            }
            if let Some(p) = acceleration {
                ctx.save(p, &CurveDocument::from_tangent(&acc).with_metadata("generator", "diamond-acceleration"))?;
            }
            Ok(())
        }
        Fixture::Regular { n, radius, out } => {
            let c = gen_regular_polygon(*n, *radius).map_err(|e| CliError::input("regular polygon", e))?;
            ctx.save(out, &CurveDocument::from_polygon(&c).with_metadata("generator", "regular").with_metadata("radius", *radius))
        }
        Fixture::Fourier { coefficients, n, role, out } => {
            let bytes = ctx.read(coefficients)?;
            let series: FourierSeries = serde_json::from_slice(&bytes)
                .map_err(|e| CliError::Validation(format!("{}: {e}", coefficients.display())))?;
            let doc = match role {
                SampleRole::Polygon => {
                    let c = gen_fourier_curve(&series, *n).map_err(|e| CliError::input("Fourier curve", e))?;
                    CurveDocument::from_polygon(&c)
                }
                SampleRole::Tangent => {
                    let h = series.sample(*n).map_err(|e| CliError::input("Fourier field", e))?;
                    CurveDocument::from_tangent(&h)
                }
            };
            ctx.save(out, &doc.with_metadata("generator", "fourier"))
        }
        Fixture::SrvCircle { n, out } => {
            let grid = Grid::new(*n, 2).map_err(|e| CliError::input("grid", e))?;
            let h = grid.spacing();
            let mid = |i: usize| grid.theta(i) + h / 2.0;
            let e = (0..*n).map(|i| 2f64.sqrt() * (mid(i) / 2.0).cos()).collect();
            let f = (0..*n).map(|i| 2f64.sqrt() * (mid(i) / 2.0).sin()).collect();
            let s = SqrtVelocityPair::new(e, f).map_err(|e| CliError::input("srv pair", e))?;
            ctx.save(out, &CurveDocument::from_srv_pair(&s).with_metadata("generator", "srv-circle"))
        }
    }
}

fn render(a: &RenderArgs, ctx: &mut Context) -> Result<(), CliError> {
    let bytes = ctx.read(&a.traj)?;
    let frames = read_frames(&a.traj, &bytes)?;
    if a.size == 0 {
        return Err(CliError::Validation("--size must be positive".into()));
    }
    for (k, svg) in render_svgs(&frames, a.size).iter().enumerate() {
        let path = ctx.output(&a.out.join(format!("frame_{k:05}.svg")))?;
        fs::write(&path, svg).map_err(|e| CliError::io(&path, e))?;
    }
    ctx.result = Some(json!({ "frames": frames.times.len() }));
    Ok(())
}
