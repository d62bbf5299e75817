//! `elastic`: command-line driver for geodesics of the elastic metric on
//! polygons, LDDMM landmark flows, kernel exports and the basic mapping.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input, 3 numerical abort.
//! A run manifest (JSON) is written for every run that gets past argument
//! parsing, including failed ones.

mod commands;
mod error;
mod manifest;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::manifest::{Context, RunManifest};

const CSV_HELP: &str = "Trajectory CSV columns: t, x{i}_{k} for vertex i and coordinate k, \
energy, length, min_edge, vertex_sum, momentum_{k} (and min_pair_distance for flow-lddmm). \
One row per stored sample: the initial state, every stride-th step and the final step.";

#[derive(Parser)]
#[command(name = "elastic", version, about = "Geodesics of the elastic metric on closed polygons")]
struct Cli {
    /// Where to write the run manifest (default: next to the main output).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Integrate the geodesic equation from a polygon and an initial velocity.
    #[command(after_help = CSV_HELP)]
    Exp(ExpArgs),
    /// Shoot for the initial velocity of the geodesic between two polygons.
    Log(LogArgs),
    /// Geodesic distance between two polygons (by shooting).
    Dist(DistArgs),
    /// Integrate Hamilton's equations for the extended cometric.
    #[command(after_help = CSV_HELP)]
    FlowHamiltonian(FlowHamiltonianArgs),
    /// Integrate the Gaussian-kernel LDDMM landmark flow.
    #[command(after_help = CSV_HELP)]
    FlowLddmm(FlowLddmmArgs),
    /// Export n x n kernel weights (the cometric is weights (x) identity).
    Kernel(KernelArgs),
    /// Apply the basic mapping to a square-root velocity pair.
    Srvt(SrvtArgs),
    /// Re-check the invariants of a curve document.
    Validate(ValidateArgs),
    /// Generate fixture documents.
    Gen(GenArgs),
    /// Write one SVG frame per stored sample of a trajectory CSV.
    #[command(after_help = CSV_HELP)]
    Render(RenderArgs),
}

#[derive(Args, Serialize)]
struct IntegrationArgs {
    /// Time step.
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    /// Final time.
    #[arg(long, default_value_t = 1.0)]
    t_end: f64,
    /// Store every stride-th step.
    #[arg(long, default_value_t = 1)]
    stride: usize,
    /// Multiplier on the degenerate-edge threshold 1e-8 * max(1, length).
    #[arg(long, default_value_t = 1.0)]
    edge_guard: f64,
}

#[derive(Args, Serialize)]
struct ShootingArgs {
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 1.0)]
    edge_guard: f64,
    /// Target sup-norm mismatch of the shot endpoint.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
}

#[derive(Args, Serialize)]
struct ExpArgs {
    /// Mean-zero polygon document.
    #[arg(long = "in")]
    input: PathBuf,
    /// Mean-zero tangent document.
    #[arg(long)]
    vel: PathBuf,
    #[command(flatten)]
    integration: IntegrationArgs,
    /// Trajectory CSV.
    #[arg(long)]
    out: PathBuf,
    /// Also write the final polygon as a document.
    #[arg(long)]
    end: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct LogArgs {
    #[arg(long)]
    from: PathBuf,
    #[arg(long)]
    to: PathBuf,
    #[command(flatten)]
    shooting: ShootingArgs,
    /// Tangent document with the initial velocity.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct DistArgs {
    #[arg(long)]
    from: PathBuf,
    #[arg(long)]
    to: PathBuf,
    #[command(flatten)]
    shooting: ShootingArgs,
    /// Optional JSON file with the distance.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct FlowHamiltonianArgs {
    /// Mean-zero polygon document.
    #[arg(long = "in")]
    input: PathBuf,
    /// Covector document with the initial momentum.
    #[arg(long, conflicts_with = "vel", required_unless_present = "vel")]
    momentum: Option<PathBuf>,
    /// Tangent document; its momentum is used as initial momentum.
    #[arg(long)]
    vel: Option<PathBuf>,
    #[command(flatten)]
    integration: IntegrationArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct FlowLddmmArgs {
    /// Polygon-role document holding the landmarks.
    #[arg(long = "in")]
    input: PathBuf,
    /// Covector document with the initial momenta.
    #[arg(long)]
    momentum: PathBuf,
    /// Gaussian kernel width.
    #[arg(long)]
    sigma: f64,
    #[command(flatten)]
    integration: IntegrationArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum KernelKind {
    Elastic,
    Gaussian,
    Both,
}

#[derive(Args, Serialize)]
struct KernelArgs {
    /// Polygon-role document holding the landmarks.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = KernelKind::Both)]
    kind: KernelKind,
    /// Gaussian kernel width (required unless --kind elastic).
    #[arg(long)]
    sigma: Option<f64>,
    /// Output CSV; with --kind both, `<stem>.elastic.csv` and `<stem>.gaussian.csv` are written instead.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct SrvtArgs {
    /// srv_pair document.
    #[arg(long = "in")]
    input: PathBuf,
    /// Gram-Schmidt the pair onto the discrete Stiefel manifold first (unit-length image).
    #[arg(long)]
    stiefel: bool,
    /// Tangent-role document (n x 2 rows of [de, df]) for an isometry report.
    #[arg(long)]
    tangent: Option<PathBuf>,
    /// Project the tangent onto the constraint tangent space first.
    #[arg(long)]
    project: bool,
    /// Polygon document with the image.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct ValidateArgs {
    #[arg(long = "in")]
    input: PathBuf,
}

#[derive(Args, Serialize)]
struct GenArgs {
    #[command(subcommand)]
    what: Fixture,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SampleRole {
    Polygon,
    Tangent,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Fixture {
    /// Four-vertex analytic geodesic family at time t.
    Diamond {
        #[arg(long)]
        t: f64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the velocity c_t(t).
        #[arg(long)]
        velocity: Option<PathBuf>,
        /// Also write the acceleration c_tt(t).
        #[arg(long)]
        acceleration: Option<PathBuf>,
    },
    /// Regular n-gon around the origin.
    Regular {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Samples of a Fourier series `{"cos": [[..d..], ...], "sin": [...]}` (harmonics from 1).
    Fourier {
        #[arg(long)]
        coefficients: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = SampleRole::Polygon)]
        role: SampleRole,
        #[arg(long)]
        out: PathBuf,
    },
    /// Square-root velocity pair of the unit circle traversed once (regular n-gon image).
    SrvCircle {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Serialize)]
struct RenderArgs {
    /// Trajectory CSV.
    #[arg(long)]
    traj: PathBuf,
    /// Output directory for frame_NNNNN.svg.
    #[arg(long)]
    out: PathBuf,
    /// Frame width and height in pixels.
    #[arg(long, default_value_t = 512)]
    size: u32,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Exp(_) => "exp",
            Command::Log(_) => "log",
            Command::Dist(_) => "dist",
            Command::FlowHamiltonian(_) => "flow-hamiltonian",
            Command::FlowLddmm(_) => "flow-lddmm",
            Command::Kernel(_) => "kernel",
            Command::Srvt(_) => "srvt",
            Command::Validate(_) => "validate",
            Command::Gen(_) => "gen",
            Command::Render(_) => "render",
        }
    }

    /// Main output, next to which the manifest goes by default.
    fn manifest_path(&self) -> PathBuf {
        let beside = |p: &PathBuf| {
            let mut s = p.clone().into_os_string();
            s.push(".manifest.json");
            PathBuf::from(s)
        };
        match self {
            Command::Exp(a) => beside(&a.out),
            Command::Log(a) => beside(&a.out),
            Command::Dist(DistArgs { out: Some(out), .. }) => beside(out),
            Command::FlowHamiltonian(a) => beside(&a.out),
            Command::FlowLddmm(a) => beside(&a.out),
            Command::Kernel(a) => beside(&a.out),
            Command::Srvt(a) => beside(&a.out),
            Command::Gen(GenArgs { what }) => match what {
                Fixture::Diamond { out, .. }
                | Fixture::Regular { out, .. }
                | Fixture::Fourier { out, .. }
                | Fixture::SrvCircle { out, .. } => beside(out),
            },
            Command::Render(a) => a.out.join("manifest.json"),
            Command::Dist(_) | Command::Validate(_) => PathBuf::from(format!("{}.manifest.json", self.name())),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let mut ctx = Context::from_env();
    let outcome = commands::run(&cli.command, &mut ctx);
    let manifest = RunManifest::new(
        cli.command.name(),
        std::env::args().collect(),
        serde_json::to_value(&cli.command).unwrap_or_default(),
        &ctx,
        start.elapsed(),
        outcome.as_ref().err(),
    );
    let manifest_path = ctx.resolve(cli.manifest.as_ref().unwrap_or(&cli.command.manifest_path()));
    if let Err(e) = manifest.write(&manifest_path) {
        eprintln!("error: {}", e.message());
        return ExitCode::from(e.exit_code());
    }
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error ({}): {}", e.kind(), e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
