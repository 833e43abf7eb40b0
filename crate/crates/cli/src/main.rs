//! `revflow`: parametrize constant-curvature surfaces of revolution, run the Ricci flow
//! on their profiles, compare discrete and smooth curves, and run the invariant suites.
//!
//! Relative output paths are resolved against `REVFLOW_OUT_DIR` when it is set.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use revflow::cgc::{CgcFamily, Sign};
use revflow::check::run_check_with;
use revflow::compare::{run_compare, write_compare_csv};
use revflow::flow::{
    fit_cgc, fixtures, integrate, negative_fit, BoundaryCondition, FlowState, IntegrateOptions, Snapshots,
    StopRule, DEFAULT_DT,
};
use revflow::grid::parse_grid;
use revflow::io::{save_obj, write_mesh_snapshots, write_profile_csv, write_trace_csv, ProfileFile};
use revflow::surface::RevolutionSurface;
use revflow::tolerances::Tolerances;
use revflow::{Error, Result};

const OUT_DIR_ENV: &str = "REVFLOW_OUT_DIR";

#[derive(Parser)]
#[command(name = "revflow", version, about = "Discrete surfaces of revolution and their Ricci flow")]
struct Cli {
    /// JSON tolerance overrides: {"version": 1, "tolerances": {"steiner": 1e-9}}
    #[arg(long, global = true, value_name = "FILE")]
    tolerances: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a discrete constant-curvature (or catenoid / Delaunay) surface on a grid
    Parametrize(ParametrizeArgs),
    /// Integrate the flow from a profile and write its trace
    Flow(FlowArgs),
    /// Compare discrete and smooth profiles under grid refinement
    Compare(CompareArgs),
    /// Run the randomized invariant suites; exit code 0 iff all pass
    Check(CheckArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyName {
    /// K = c > 0, f = p cos(√c u): needs --p and --c
    Positive,
    /// K = -1, f = 1/cosh u
    Pseudosphere,
    /// K = -1, f = p cosh u: needs --p
    CoshNegative,
    /// K = -1, f = q sinh u on a decreasing grid: needs --q
    SinhNegative,
    /// H = 0, f = cosh u
    Catenoid,
    /// Constant mean curvature parallel surface: needs --p, --c and --eps
    Delaunay,
}

#[derive(Args)]
struct FamilyArgs {
    /// Parametrized family
    #[arg(long, value_enum)]
    family: FamilyName,
    /// Radius parameter p
    #[arg(long)]
    p: Option<f64>,
    /// Radius parameter q of the sinh family
    #[arg(long)]
    q: Option<f64>,
    /// Gaussian curvature c of the positive and Delaunay families
    #[arg(long)]
    c: Option<f64>,
    /// Side of the Delaunay parallel surface, +1 or -1
    #[arg(long, allow_hyphen_values = true)]
    eps: Option<i32>,
}

impl FamilyArgs {
    fn family(&self) -> Result<CgcFamily> {
        let need = |v: Option<f64>, flag: &str| v.ok_or_else(|| Error::Config(format!("--{flag} is required for this family")));
        let family = match self.family {
            FamilyName::Positive => CgcFamily::SpherePositive { p: need(self.p, "p")?, c: need(self.c, "c")? },
            FamilyName::Pseudosphere => CgcFamily::Pseudosphere,
            FamilyName::CoshNegative => CgcFamily::CoshNegative { p: need(self.p, "p")? },
            FamilyName::SinhNegative => CgcFamily::SinhNegative { q: need(self.q, "q")? },
            FamilyName::Catenoid => CgcFamily::Catenoid,
            FamilyName::Delaunay => {
                let eps = match self.eps {
                    Some(1) => Sign::Plus,
                    Some(-1) => Sign::Minus,
                    Some(e) => return Err(Error::Config(format!("--eps must be 1 or -1, got {e}"))),
                    None => return Err(Error::Config("--eps is required for this family".into())),
                };
                CgcFamily::Delaunay { p: need(self.p, "p")?, c: need(self.c, "c")?, eps }
            }
        };
        family.validate()?;
        Ok(family)
    }
}

#[derive(Args)]
struct ParametrizeArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Sample grid: "[u0, u1, ...]", "linspace(a, b, M)" or "expr(<expr in n>; n=k1..k2)"
    #[arg(long)]
    grid: String,
    /// Rotational resolution
    #[arg(long, default_value_t = 24)]
    l: usize,
    /// OBJ mesh output
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Profile CSV output (n, u_n, f, h, a, b)
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
    /// Profile JSON output, usable as `flow --init`
    #[arg(long, value_name = "FILE")]
    json: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BcName {
    PosCone,
    NegCone,
    PosCusp,
    NegCusp,
}

impl BcName {
    fn bc(self) -> BoundaryCondition {
        match self {
            BcName::PosCone => BoundaryCondition::PosCone,
            BcName::NegCone => BoundaryCondition::NegCone,
            BcName::PosCusp => BoundaryCondition::PosCusp,
            BcName::NegCusp => BoundaryCondition::NegCusp,
        }
    }
}

#[derive(Args)]
struct FlowArgs {
    /// Boundary condition
    #[arg(long, value_enum)]
    bc: BcName,
    /// Run the unnormalized flow (pos-cone and pos-cusp only)
    #[arg(long)]
    unnormalized: bool,
    /// Initial profile JSON; defaults to a built-in dumbbell (positive), a
    /// negative-curvature fixture, or the round sphere (unnormalized pos-cone)
    #[arg(long, value_name = "FILE")]
    init: Option<PathBuf>,
    /// Number of bands of the built-in initial profile
    #[arg(long, default_value_t = 6)]
    k: usize,
    /// Rotational resolution of the built-in initial profile
    #[arg(long, default_value_t = 24)]
    l: usize,
    /// RK4 step. Shrinking or small profiles are stiffer and may need a smaller step
    #[arg(long, default_value_t = DEFAULT_DT)]
    dt: f64,
    /// Final time
    #[arg(long, default_value_t = 10.0)]
    t_end: f64,
    /// Steps between recorded snapshots
    #[arg(long, default_value_t = 100)]
    stride: usize,
    /// Trace CSV output (t, n, f, h, a, b, K, H, A, r)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Simulated time between OBJ snapshots
    #[arg(long, value_name = "T", requires = "mesh_dir")]
    mesh_every: Option<f64>,
    /// Directory for OBJ snapshots
    #[arg(long, value_name = "DIR", requires = "mesh_every")]
    mesh_dir: Option<PathBuf>,
    /// Integrate to --t-end even after the curvature has become constant
    #[arg(long)]
    no_stop: bool,
    /// Print a constant-curvature fit of the final profile as JSON
    #[arg(long)]
    fit: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// First parameter value (an expression)
    #[arg(long, allow_hyphen_values = true)]
    u_start: String,
    /// Last parameter value (an expression)
    #[arg(long, allow_hyphen_values = true)]
    u_end: String,
    /// Refinement levels M; level M samples M + 1 points
    #[arg(long, value_delimiter = ',', default_values_t = [8, 16, 32, 64])]
    levels: Vec<usize>,
    /// CSV output (M, n, u, f_smooth, h_smooth, f_discrete, h_discrete, gap)
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    /// Random seed
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Number of randomized trials per suite
    #[arg(long, default_value_t = 100)]
    trials: usize,
}

fn output_path(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let path = output_path(path);
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let file = File::create(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(BufWriter::new(file))
}

fn expression(text: &str) -> Result<f64> {
    // a one-point list reuses the grid expression evaluator
    let grid = parse_grid(&format!("[{text}]"))?;
    Ok(grid.values()[0])
}

fn parametrize(args: &ParametrizeArgs) -> Result<()> {
    let family = args.family.family()?;
    let grid = parse_grid(&args.grid)?;
    let (profile, normal) = family.discretize(&grid)?;
    let surface = RevolutionSurface::new(profile.clone(), args.l)?;
    let faces = surface.faces(&normal)?;
    let (kmin, kmax) = faces.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), g| (lo.min(g.gauss), hi.max(g.gauss)));
    let (hmin, hmax) = faces.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), g| (lo.min(g.mean), hi.max(g.mean)));
    println!("layers {} faces {} l {}", profile.f().len(), faces.len(), args.l);
    println!("K in [{kmin:.12e}, {kmax:.12e}]");
    println!("H in [{hmin:.12e}, {hmax:.12e}]");
    if let Some(path) = &args.out {
        save_obj(&surface, &output_path(path))?;
    }
    if let Some(path) = &args.csv {
        let mut out = create(path)?;
        write_profile_csv(grid.first_index(), grid.values(), &profile, &normal, &mut out)?;
        out.flush()?;
    }
    if let Some(path) = &args.json {
        let mut out = create(path)?;
        writeln!(out, "{}", ProfileFile::new(&profile, args.l, Some(&normal)).to_json()?)?;
    }
    Ok(())
}

fn initial_state(args: &FlowArgs, bc: BoundaryCondition) -> Result<FlowState> {
    if let Some(path) = &args.init {
        return ProfileFile::load(path)?.flow_state(bc);
    }
    let (k, l) = (args.k, args.l);
    match bc {
        BoundaryCondition::PosCone => fixtures::dumbbell(k, l),
        BoundaryCondition::PosCusp => fixtures::dumbbell_cusp(k, l),
        BoundaryCondition::NegCone => fixtures::neg_cone(k, l, 0.1),
        BoundaryCondition::NegCusp => fixtures::neg_cusp(k, l, 0.1),
        BoundaryCondition::UnnormalizedPosCone => fixtures::round_sphere(k, l, bc),
        BoundaryCondition::UnnormalizedPosCusp => fixtures::dumbbell_cusp(k, l)?.with_bc(bc),
    }
}

fn flow(args: &FlowArgs) -> Result<()> {
    if args.stride == 0 {
        return Err(Error::Config("--stride must be positive".into()));
    }
    let bc = args.bc.bc().with_normalized(!args.unnormalized)?;
    let initial = initial_state(args, bc)?;
    let opts = IntegrateOptions {
        snapshots: Snapshots::Every(args.stride),
        stop: (!args.no_stop).then(StopRule::default),
        ..IntegrateOptions::default()
    };
    let area0 = initial.total_area()?;
    let trace = integrate(&initial, args.t_end, args.dt, &opts)?;
    let last = trace.states.last().ok_or_else(|| Error::Config("empty trace".into()))?;
    let area1 = last.total_area()?;
    println!("bc {} k {} l {} dt {}", bc.name(), last.k(), last.l(), args.dt);
    println!(
        "t {:.6} steps {} stopped_early {}",
        last.time(),
        trace.steps,
        trace.stopped_early
    );
    println!("curvature spread {:.6e}", last.curvature_spread()?);
    println!("area {:.12e} -> {:.12e} (relative change {:.3e})", area0, area1, (area1 - area0) / area0);
    if let Some(path) = &args.out {
        let mut out = create(path)?;
        write_trace_csv(&trace, &mut out)?;
        out.flush()?;
    }
    if let (Some(every), Some(dir)) = (args.mesh_every, &args.mesh_dir) {
        let written = write_mesh_snapshots(&trace, every, &output_path(dir))?;
        println!("wrote {} mesh snapshots", written.len());
    }
    if args.fit {
        let fit = match bc {
            BoundaryCondition::NegCone | BoundaryCondition::NegCusp => negative_fit(last)?,
            _ => fit_cgc(last)?,
        };
        println!("{}", serde_json::to_string(&fit).map_err(Error::from)?);
    }
    Ok(())
}

fn compare(args: &CompareArgs) -> Result<()> {
    let family = args.family.family()?;
    let report = run_compare(&family, expression(&args.u_start)?, expression(&args.u_end)?, &args.levels)?;
    for s in &report.levels {
        println!("M {:>5} max_gap {:.6e} end_gap {:.6e}", s.level, s.max_gap, s.end_gap);
    }
    match report.order {
        Some(order) => println!("order {order:.4}"),
        None => println!("order n/a"),
    }
    if let Some(path) = &args.csv {
        let mut out = create(path)?;
        write_compare_csv(&report, &mut out)?;
        out.flush()?;
    }
    Ok(())
}

fn tolerances(path: Option<&Path>) -> Result<Tolerances> {
    match path {
        Some(p) => Tolerances::from_json(&fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?),
        None => Ok(Tolerances::default()),
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let tol = tolerances(cli.tolerances.as_deref())?;
    match &cli.command {
        Command::Parametrize(a) => parametrize(a).map(|_| true),
        Command::Flow(a) => flow(a).map(|_| true),
        Command::Compare(a) => compare(a).map(|_| true),
        Command::Check(a) => {
            let report = run_check_with(a.seed, a.trials, &tol)?;
            println!("{}", report.summary());
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
