//! Command-line front end: parse inputs, dispatch to the library, emit
//! machine-readable JSON/CSV. All numbers are printed in shortest
//! round-trip form, so identical inputs produce byte-identical outputs.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::branched::{
    branched_optimize, centralized_cost, classify_regime, hierarchical_cost_closed_form,
    hierarchical_cost_recurrence, irrigability_sweep, ArraySpec, CostExponent,
};
use crate::degree::{detect_singularities, p_energy, GridMap};
use crate::duality::{duality_gap, kantorovich_dual, LipschitzField};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::geometry::{ChargeConfig, Point, RawCharge};
use crate::relaxed::relaxed_energy;
use crate::transport::min_cost_transport;

#[derive(Parser)]
#[command(
    name = "topoflow",
    about = "Topological degrees, charge transport, and branched irrigation costs",
    version,
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect singularities of a grid map (CSV in, JSON out).
    Degree(DegreeArgs),
    /// Discrete p-Dirichlet energy of a grid map.
    Energy(EnergyArgs),
    /// Minimum-cost transport plan for a charge configuration.
    Transport(IoArgs),
    /// Kantorovich dual value, potential, and duality gap.
    Dual(IoArgs),
    /// Sample the extended dual potential on a grid (CSV out).
    Dualfield(DualFieldArgs),
    /// Relaxed energy report for a grid map.
    Relaxed(IoArgs),
    /// Optimal branched transport plan under cost |d|^alpha.
    Branched(BranchedArgs),
    /// Dyadic-array cost sweep: centralized vs hierarchical (CSV out).
    Sweep(SweepArgs),
    /// Write an analytic fixture to disk.
    Fixture(FixtureArgs),
    /// Run the embedded fixture suite.
    Selftest,
}

#[derive(Args)]
struct IoArgs {
    /// Input path.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DegreeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct EnergyArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Integrability exponent, >= 1.
    #[arg(long, default_value_t = 1.0)]
    p: f64,
}

#[derive(Args)]
struct DualFieldArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Nodes per side of the sampling grid.
    #[arg(long, default_value_t = 64)]
    grid: usize,
    /// Padding around the charge bounding box.
    #[arg(long, default_value_t = 1.0)]
    pad: f64,
}

#[derive(Args)]
struct BranchedArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Cost exponent alpha in (0, 1]; rationals like 3/4 are kept exact.
    #[arg(long)]
    alpha: CostExponent,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    /// Ambient dimension.
    #[arg(long, default_value_t = 2)]
    m: u32,
    /// Cost exponent alpha in (0, 1].
    #[arg(long)]
    alpha: CostExponent,
    /// Largest dyadic depth.
    #[arg(long, default_value_t = 10)]
    n: u32,
    /// Lattice spacing (fixed-h sweep).
    #[arg(long, default_value_t = 1.0)]
    h: f64,
    /// Source intensity (fixed-d sweep).
    #[arg(long, default_value_t = 1.0)]
    d: f64,
    /// Rescale h = 2^-n, d = 2^-mn per row (the irrigation regime).
    #[arg(long)]
    irrigation: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum FixtureKind {
    SingleVortex,
    VortexPair,
    VortexSquare,
    Constant,
    DyadicArray,
}

#[derive(Args)]
struct FixtureArgs {
    /// Which analytic fixture to generate.
    #[arg(long, value_enum)]
    kind: FixtureKind,
    #[arg(long)]
    out: PathBuf,
    /// Nodes per side for grid fixtures.
    #[arg(long, default_value_t = 256)]
    grid: usize,
    /// Core hole radius for the single vortex.
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    /// Dimension of the dyadic array.
    #[arg(long, default_value_t = 2)]
    m: u32,
    /// Depth of the dyadic array.
    #[arg(long, default_value_t = 3)]
    n: u32,
    /// Spacing of the dyadic array.
    #[arg(long, default_value_t = 1.0)]
    h: f64,
}

/// Entry point used by the binary and by tests. Returns the process exit
/// code: 0 success, 1 input validation failure, 2 solver/domain failure.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version through "errors" that exit 0.
            if e.use_stderr() {
                let msg = e.to_string();
                let line = msg.lines().next().unwrap_or("bad arguments");
                eprintln!(
                    "{}",
                    serde_json::json!({ "error": "Usage", "detail": line })
                );
                return 1;
            }
            print!("{e}");
            return 0;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!(
                "{}",
                serde_json::json!({ "error": err.code_name(), "detail": err.to_string() })
            );
            exit_code(&err)
        }
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) | Error::Parse(_) | Error::InvalidParameter(_) => 1,
        _ => 2,
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Degree(a) => cmd_degree(a),
        Command::Energy(a) => cmd_energy(a),
        Command::Transport(a) => cmd_transport(a),
        Command::Dual(a) => cmd_dual(a),
        Command::Dualfield(a) => cmd_dualfield(a),
        Command::Relaxed(a) => cmd_relaxed(a),
        Command::Branched(a) => cmd_branched(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Fixture(a) => cmd_fixture(a),
        Command::Selftest => selftest(),
    }
}

fn read_grid(path: &Path) -> Result<GridMap> {
    GridMap::from_csv(&fs::read_to_string(path)?)
}

fn read_config(path: &Path) -> Result<ChargeConfig> {
    ChargeConfig::from_json(&fs::read_to_string(path)?)
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct DegreeReport {
    entries: Vec<RawCharge>,
    total_degree: i64,
}

fn cmd_degree(a: DegreeArgs) -> Result<()> {
    let map = read_grid(&a.input)?;
    let set = detect_singularities(&map)?;
    let content = match a.format {
        Format::Json => to_pretty_json(&DegreeReport {
            entries: set.to_raw(),
            total_degree: set.total_degree(),
        }),
        Format::Csv => {
            let mut s = String::from("x,y,deg\n");
            for e in &set.entries {
                let c = e.position.coords();
                let _ = writeln!(s, "{},{},{}", c[0], c[1], e.degree);
            }
            s
        }
    };
    emit(&a.out, &content)
}

fn cmd_energy(a: EnergyArgs) -> Result<()> {
    let map = read_grid(&a.input)?;
    let energy = p_energy(&map, a.p)?;
    emit(
        &a.out,
        &to_pretty_json(&serde_json::json!({ "p": a.p, "energy": energy })),
    )
}

fn cmd_transport(a: IoArgs) -> Result<()> {
    let config = read_config(&a.input)?;
    let plan = min_cost_transport(&config)?;
    plan.verify(&config)?;
    let mut s = plan.to_json();
    s.push('\n');
    emit(&a.out, &s)
}

fn cmd_dual(a: IoArgs) -> Result<()> {
    let config = read_config(&a.input)?;
    let (value, potential) = kantorovich_dual(&config)?;
    let gap = duality_gap(&config)?;
    emit(
        &a.out,
        &to_pretty_json(&serde_json::json!({
            "value": value,
            "potential": potential.values(),
            "gap": gap,
        })),
    )
}

fn cmd_dualfield(a: DualFieldArgs) -> Result<()> {
    if a.grid < 2 {
        return Err(Error::InvalidParameter("grid must be at least 2".into()));
    }
    if !(a.pad.is_finite() && a.pad >= 0.0) {
        return Err(Error::InvalidParameter(format!("bad padding {}", a.pad)));
    }
    let config = read_config(&a.input)?;
    if config.dimension() != 2 {
        return Err(Error::Unsupported(
            "dualfield sampling is planar only".into(),
        ));
    }
    if config.is_empty() {
        return Err(Error::InvalidParameter(
            "cannot bound a grid around an empty configuration".into(),
        ));
    }
    let (_, potential) = kantorovich_dual(&config)?;
    let field = LipschitzField::new(config.clone(), potential)?;
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for c in config.charges() {
        for k in 0..2 {
            lo[k] = lo[k].min(c.position.coords()[k]);
            hi[k] = hi[k].max(c.position.coords()[k]);
        }
    }
    let mut s = String::from("x,y,phi\n");
    for j in 0..a.grid {
        for i in 0..a.grid {
            let fx = i as f64 / (a.grid - 1) as f64;
            let fy = j as f64 / (a.grid - 1) as f64;
            let x = lo[0] - a.pad + fx * (hi[0] - lo[0] + 2.0 * a.pad);
            let y = lo[1] - a.pad + fy * (hi[1] - lo[1] + 2.0 * a.pad);
            let phi = field.eval(&Point::xy(x, y))?;
            let _ = writeln!(s, "{x},{y},{phi}");
        }
    }
    emit(&a.out, &s)
}

#[derive(Serialize)]
struct RelaxedReportDto {
    dirichlet: f64,
    transport: f64,
    total: f64,
    singularities: Vec<RawCharge>,
    plan: crate::transport::FlowPlan,
}

fn cmd_relaxed(a: IoArgs) -> Result<()> {
    let map = read_grid(&a.input)?;
    let report = relaxed_energy(&map)?;
    emit(
        &a.out,
        &to_pretty_json(&RelaxedReportDto {
            dirichlet: report.dirichlet,
            transport: report.transport,
            total: report.total,
            singularities: report.singularities.to_raw(),
            plan: report.plan,
        }),
    )
}

fn cmd_branched(a: BranchedArgs) -> Result<()> {
    let config = read_config(&a.input)?;
    let tree = branched_optimize(&config, a.alpha.value())?;
    let mut s = tree.to_json();
    s.push('\n');
    emit(&a.out, &s)
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    let regime = classify_regime(a.m, &a.alpha)?.regime;
    let mut s = String::from("n,centralized,hierarchical_recurrence,hierarchical_closed,regime\n");
    if a.irrigation {
        // Validates the depth bound; rows are recomputed below with the
        // per-row spec so the centralized column comes along.
        irrigability_sweep(a.m, &a.alpha, a.n)?;
    }
    for n in 0..=a.n {
        let (h, d) = if a.irrigation {
            ((-(n as f64)).exp2(), (-((a.m * n) as f64)).exp2())
        } else {
            (a.h, a.d)
        };
        let spec = ArraySpec::new(a.m, n, h, d, a.alpha)?;
        let central = centralized_cost(&spec).value();
        let rec = hierarchical_cost_recurrence(&spec);
        let closed = hierarchical_cost_closed_form(&spec);
        let _ = writeln!(s, "{n},{central},{rec},{closed},{regime}");
    }
    emit(&a.out, &s)
}

fn cmd_fixture(a: FixtureArgs) -> Result<()> {
    generate_fixture(a.kind, &a)
}

fn generate_fixture(kind: FixtureKind, a: &FixtureArgs) -> Result<()> {
    if a.grid < 2 || !a.grid.is_multiple_of(16) {
        return Err(Error::InvalidParameter(format!(
            "grid {} must be a positive multiple of 16",
            a.grid
        )));
    }
    let content = match kind {
        FixtureKind::SingleVortex => {
            if !(a.eps.is_finite() && a.eps > 0.0 && a.eps < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "hole radius eps = {} outside (0, 1)",
                    a.eps
                )));
            }
            fixtures::single_vortex(a.grid, a.eps).to_csv()
        }
        FixtureKind::VortexPair => fixtures::vortex_pair(a.grid).to_csv(),
        FixtureKind::VortexSquare => fixtures::vortex_square(a.grid).to_csv(),
        FixtureKind::Constant => fixtures::constant_map(a.grid).to_csv(),
        FixtureKind::DyadicArray => {
            let mut json = fixtures::dyadic_array_config(a.m, a.n, a.h)?.to_json();
            json.push('\n');
            json
        }
    };
    fs::write(&a.out, content)?;
    Ok(())
}

/// Embedded fixture suite: quick end-to-end checks over every module,
/// printing one line per check.
fn selftest() -> Result<()> {
    use crate::geometry::config_from_parts;
    use std::f64::consts::TAU;

    let mut failures = 0usize;
    let mut check = |name: &str, outcome: Result<bool>| match outcome {
        Ok(true) => println!("ok {name}"),
        Ok(false) => {
            println!("FAIL {name}");
            failures += 1;
        }
        Err(e) => {
            println!("FAIL {name}: {e}");
            failures += 1;
        }
    };

    check("winding unit circle", {
        let samples: Vec<[f64; 2]> = (0..256)
            .map(|k| {
                let t = TAU * k as f64 / 256.0;
                [t.cos(), t.sin()]
            })
            .collect();
        crate::degree::LoopSamples::new(samples)
            .and_then(|l| crate::degree::winding_number(&l))
            .map(|w| w == 1)
    });

    let pair = config_from_parts(&[(vec![0.0, 0.0], 1), (vec![3.0, 0.0], -1)]);
    check("transport pair", {
        pair.as_ref()
            .map_err(|e| Error::InvalidParameter(e.to_string()))
            .and_then(min_cost_transport)
            .map(|plan| (plan.cost - 3.0).abs() < 1e-9)
    });

    let square = config_from_parts(&[
        (vec![0.0, 0.0], 1),
        (vec![1.0, 1.0], 1),
        (vec![1.0, 0.0], -1),
        (vec![0.0, 1.0], -1),
    ])
    .expect("square config");
    check("transport square vs brute force", {
        let ssp = min_cost_transport(&square)?.cost;
        let brute = crate::transport::brute_force_transport(&square)?;
        Ok((ssp - brute).abs() < 1e-9)
    });
    check("lp relaxation integrality", {
        let lp = crate::transport::lp_relaxation_optimum(&square)?;
        Ok((lp - 2.0).abs() < 1e-8)
    });
    check("duality gap", {
        duality_gap(&square).map(|g| g.abs() <= 1e-8 * 3.0)
    });
    check("radial vortex energy", {
        let e = p_energy(&fixtures::single_vortex(128, 0.05), 1.0)?;
        let expected = TAU * 0.95;
        Ok((e - expected).abs() <= 0.05 * expected)
    });
    check("vortex pair detection", {
        let set = detect_singularities(&fixtures::vortex_pair(128))?;
        Ok(set.entries.len() == 2 && set.total_degree() == 0)
    });
    check("relaxed energy pair", {
        let report = relaxed_energy(&fixtures::vortex_pair(128))?;
        Ok((report.transport - 1.0).abs() <= 0.02)
    });
    check("hierarchical closed form", {
        let alpha = CostExponent::rational(3, 4)?;
        let spec = ArraySpec::new(4, 8, 1.0, 1.0, alpha)?;
        let rec = hierarchical_cost_recurrence(&spec);
        let closed = hierarchical_cost_closed_form(&spec);
        Ok((rec - closed).abs() <= 1e-12 * (1.0 + rec))
    });
    check("critical regime", {
        classify_regime(4, &CostExponent::rational(3, 4)?)
            .map(|r| r.regime == crate::branched::Regime::Critical)
    });
    check("branched straight edge", {
        let cfg =
            config_from_parts(&[(vec![0.0, 0.0], 1), (vec![2.0, 0.0], -1)]).expect("pair config");
        let tree = branched_optimize(&cfg, 0.5)?;
        Ok((tree.cost - 2.0).abs() < 1e-9)
    });
    check("branched no gain at alpha one", {
        let tree = branched_optimize(&square, 1.0)?;
        let plan = min_cost_transport(&square)?;
        Ok(tree.cost >= plan.cost - 1e-8)
    });

    if failures > 0 {
        return Err(Error::Numerical(format!(
            "{failures} selftest checks failed"
        )));
    }
    Ok(())
}
