//! `multifold`: command-line driver for return maps, periodic orbits,
//! Melnikov sweeps, zero counts and orbit continuation.

mod literal;
mod settings;

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use multifold::continuation::{
    continue_orbit_family, rapid_evolution_report, ContinuationStatus, Escape, ParameterPath, RapidEvolutionReport,
};
use multifold::geometry::PathSpec;
use multifold::holonomy::poincare_map;
use multifold::melnikov::{melnikov_sweep, sweep_grid};
use multifold::orbits::{
    count_fixed_points_argument_principle, find_multifold_orbits, recertify, search_orbit, PeriodicOrbit,
    ZeroCountReport,
};
use multifold::{Complex, Coupling, EngineConfig, FamilyParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use literal::parse_complex;

#[derive(Parser)]
#[command(name = "multifold", version, about = "Holonomy and multi-fold periodic orbits of a perturbed foliation")]
struct Cli {
    /// Flat TOML file of engine settings; command flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate P^m(u) and its derivative.
    Poincare(PoincareArgs),
    /// Find m-periodic orbits, by default at the first-order resonant parameter.
    FindOrbits(FindOrbitsArgs),
    /// Compare quadrature and closed-form Melnikov integrals on a disc grid.
    MelnikovSweep(SweepArgs),
    /// Continue an m-orbit family along a straight ε-path and detect escape.
    Continue(ContinueArgs),
    /// Count zeros of P^m(u) - u in a disc by the argument principle.
    CountZeros(CountArgs),
    /// Re-certify an orbit stored as JSON.
    Certify(CertifyArgs),
}

#[derive(Args)]
struct Family {
    /// Perturbation amplitude a.
    #[arg(long, default_value = "0", value_parser = parse_complex, allow_hyphen_values = true)]
    a: Complex,
    /// How a enters the chart equation: direct or epsilon-scaled.
    #[arg(long, default_value = "direct")]
    coupling: Coupling,
}

#[derive(Args)]
struct Output {
    /// Write the result here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PoincareArgs {
    #[command(flatten)]
    family: Family,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    eps: Complex,
    #[arg(long, default_value_t = 1)]
    m: u32,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    u: Complex,
    /// Sets both the absolute and the relative integrator tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct FindOrbitsArgs {
    #[command(flatten)]
    family: Family,
    #[arg(long)]
    m: u32,
    /// Target orbit radius for the constructed parameter.
    #[arg(long, default_value_t = 0.1)]
    rho: f64,
    /// Search at this ε from random seeds instead of constructing ε.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    eps: Option<Complex>,
    /// Number of random seeds in |u| < r1 when --eps is given.
    #[arg(long, default_value_t = 64)]
    seeds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    m: u32,
    /// Number of grid points.
    #[arg(long, default_value_t = 50)]
    grid: usize,
    #[arg(long, default_value_t = 0.3)]
    radius: f64,
    /// Absolute quadrature tolerance (default: quad_tol).
    #[arg(long)]
    tol: Option<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct ContinueArgs {
    #[command(flatten)]
    family: Family,
    #[arg(long)]
    m: u32,
    #[arg(long, default_value_t = 0.1)]
    rho: f64,
    /// End of the straight path ε(s) = (1 - s) ε₀ + s·to.
    #[arg(long, default_value = "0", value_parser = parse_complex, allow_hyphen_values = true)]
    to: Complex,
    /// Escape radius (default: r1); `inf` disables the radius test.
    #[arg(long)]
    escape_radius: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    step_init: f64,
    #[arg(long, default_value_t = 1e-10)]
    step_min: f64,
    #[arg(long, default_value_t = 1e-2)]
    step_max: f64,
    /// Write the trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct CountArgs {
    #[command(flatten)]
    family: Family,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    eps: Complex,
    #[arg(long, default_value_t = 1)]
    m: u32,
    #[arg(long, default_value = "0", value_parser = parse_complex, allow_hyphen_values = true)]
    center: Complex,
    #[arg(long)]
    radius: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct CertifyArgs {
    /// JSON orbit as written by find-orbits (one element of `orbits`).
    #[arg(long)]
    orbit: PathBuf,
    /// Largest allowed drift of the recomputed points.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[command(flatten)]
    output: Output,
}

/// Exit codes: 1 usage or configuration, 2 numerical failure, 3 indeterminate.
enum Failure {
    Usage(String),
    Numerical(String),
    Indeterminate(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Numerical(_) => 2,
            Failure::Indeterminate(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Numerical(m) | Failure::Indeterminate(m) => m,
        }
    }
}

impl From<multifold::Error> for Failure {
    fn from(e: multifold::Error) -> Self {
        match e {
            multifold::Error::InvalidArgument(_) | multifold::Error::NonFinite { .. } => Failure::Usage(e.to_string()),
            multifold::Error::Indeterminate(_) => Failure::Indeterminate(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    match out {
        Some(path) => File::create(path)
            .map(|f| Box::new(io::BufWriter::new(f)) as Box<dyn Write>)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display()))),
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn io_failure(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(format!("write failed: {e}"))
}

fn emit_json<T: Serialize>(value: &T, out: &Option<PathBuf>) -> Outcome {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(io_failure)?;
    writeln!(w).map_err(io_failure)?;
    w.flush().map_err(io_failure)
}

fn emit_csv<T: Serialize>(rows: &[T], out: &Option<PathBuf>) -> Outcome {
    let mut w = csv::Writer::from_writer(sink(out)?);
    for row in rows {
        w.serialize(row).map_err(io_failure)?;
    }
    w.flush().map_err(io_failure)
}

fn params(family: &Family, eps: Complex, cfg: &EngineConfig) -> Result<FamilyParams, Failure> {
    let p = FamilyParams::new(family.a, eps).with_coupling(family.coupling);
    p.validate(cfg)?;
    Ok(p)
}

#[derive(Serialize)]
struct PoincareReport {
    value: Complex,
    derivative: Complex,
    u: Complex,
    m: u32,
    #[serde(flatten)]
    params: FamilyParams,
}

fn cmd_poincare(args: PoincareArgs, mut cfg: EngineConfig) -> Outcome {
    if let Some(tol) = args.tol {
        cfg.integrator.abs_tol = tol;
        cfg.integrator.rel_tol = tol;
        cfg = settings::check(cfg).map_err(Failure::Usage)?;
    }
    let p = params(&args.family, args.eps, &cfg)?;
    let v = poincare_map(args.u, &p, args.m, &cfg)?;
    emit_json(
        &PoincareReport { value: v.value, derivative: v.derivative, u: args.u, m: args.m, params: p },
        &args.output.out,
    )
}

#[derive(Serialize)]
struct OrbitReport {
    m: u32,
    #[serde(flatten)]
    params: FamilyParams,
    /// Present when ε was constructed from the first-order balance.
    #[serde(skip_serializing_if = "Option::is_none")]
    rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eps_uncorrected: Option<Complex>,
    #[serde(skip_serializing_if = "Option::is_none")]
    collapsed_to_trivial: Option<bool>,
    /// Present when seeds were random.
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    seeds: Vec<Complex>,
    orbits: Vec<PeriodicOrbit>,
}

fn cmd_find_orbits(args: FindOrbitsArgs, cfg: EngineConfig) -> Outcome {
    let report = match args.eps {
        None => {
            let found = search_orbit(args.m, args.family.a, args.rho, args.family.coupling, &cfg)?;
            OrbitReport {
                m: args.m,
                params: params(&args.family, found.seed.eps, &cfg)?,
                rho: Some(args.rho),
                eps_uncorrected: Some(found.seed.eps_uncorrected),
                collapsed_to_trivial: Some(found.collapsed_to_trivial),
                seed: None,
                seeds: found.seed.seeds,
                orbits: found.orbits,
            }
        }
        Some(eps) => {
            if args.m == 0 {
                return Err(Failure::Usage("m must be positive".into()));
            }
            let p = params(&args.family, eps, &cfg)?;
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            let seeds: Vec<Complex> = (0..args.seeds)
                .map(|_| {
                    let r = cfg.r1 * rng.gen::<f64>().sqrt();
                    Complex::from_polar(r, std::f64::consts::TAU * rng.gen::<f64>())
                })
                .collect();
            let orbits = find_multifold_orbits(args.m, &p, &seeds, &cfg);
            OrbitReport {
                m: args.m,
                params: p,
                rho: None,
                eps_uncorrected: None,
                collapsed_to_trivial: None,
                seed: Some(args.seed),
                seeds,
                orbits,
            }
        }
    };
    emit_json(&report, &args.output.out)
}

#[derive(Serialize)]
struct SweepCsvRow {
    m: u32,
    u_re: f64,
    u_im: f64,
    numeric_re: f64,
    numeric_im: f64,
    closed_re: f64,
    closed_im: f64,
    abs_error: f64,
}

fn cmd_melnikov_sweep(args: SweepArgs, cfg: EngineConfig) -> Outcome {
    if !(args.radius > 0.0 && args.radius < 1.0) || args.grid == 0 {
        return Err(Failure::Usage("need --grid ≥ 1 and 0 < --radius < 1".into()));
    }
    let tol = args.tol.unwrap_or(cfg.quad_tol);
    let rows = melnikov_sweep(args.m, &sweep_grid(args.grid, args.radius), tol)?;
    let csv_rows: Vec<SweepCsvRow> = rows
        .iter()
        .map(|r| SweepCsvRow {
            m: r.m,
            u_re: r.u.re,
            u_im: r.u.im,
            numeric_re: r.numeric.re,
            numeric_im: r.numeric.im,
            closed_re: r.closed_form.re,
            closed_im: r.closed_form.im,
            abs_error: r.abs_error,
        })
        .collect();
    emit_csv(&csv_rows, &args.output.out)
}

#[derive(Serialize)]
struct ContinuationSummary {
    m: u32,
    #[serde(flatten)]
    start_params: FamilyParams,
    eps_end: Complex,
    escape_radius: f64,
    status: ContinuationStatus,
    escape: Option<Escape>,
    failure: Option<String>,
    samples: usize,
    report: RapidEvolutionReport,
}

fn cmd_continue(args: ContinueArgs, cfg: EngineConfig) -> Outcome {
    let found = search_orbit(args.m, args.family.a, args.rho, args.family.coupling, &cfg)?;
    let start = found
        .orbits
        .into_iter()
        .find(|o| o.minimal)
        .ok_or_else(|| Failure::Numerical(format!("no minimal {}-orbit at the constructed parameter", args.m)))?;
    let eps0 = start.params.eps;
    let vertices = if args.to == eps0 { vec![eps0] } else { vec![eps0, args.to] };
    let path = ParameterPath {
        eps_path: PathSpec::open(vertices)?,
        a: start.params.a,
        step_init: args.step_init,
        step_min: args.step_min,
        step_max: args.step_max,
    };
    let escape_radius = args.escape_radius.unwrap_or(cfg.r1);
    let trace = continue_orbit_family(&start, &path, escape_radius, &cfg)?;
    let report = rapid_evolution_report(&trace, &[Complex::new(0.0, 0.0)], &cfg);
    if args.trace.is_some() {
        emit_csv(&trace.rows(), &args.trace)?;
    }
    let summary = ContinuationSummary {
        m: args.m,
        start_params: start.params,
        eps_end: args.to,
        escape_radius,
        status: trace.status,
        escape: trace.escape,
        failure: trace.failure.clone(),
        samples: trace.samples.len(),
        report,
    };
    emit_json(&summary, &args.output.out)
}

#[derive(Serialize)]
struct CountReport {
    m: u32,
    #[serde(flatten)]
    params: FamilyParams,
    #[serde(flatten)]
    report: ZeroCountReport,
}

fn cmd_count_zeros(args: CountArgs, cfg: EngineConfig) -> Outcome {
    let p = params(&args.family, args.eps, &cfg)?;
    let report = count_fixed_points_argument_principle(&p, args.m, args.center, args.radius, &cfg)?;
    emit_json(&CountReport { m: args.m, params: p, report }, &args.output.out)
}

fn cmd_certify(args: CertifyArgs, cfg: EngineConfig) -> Outcome {
    let text = std::fs::read_to_string(&args.orbit)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", args.orbit.display())))?;
    let orbit: PeriodicOrbit =
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("not an orbit document: {e}")))?;
    if orbit.points.len() != orbit.m as usize || orbit.m == 0 {
        return Err(Failure::Usage(format!("orbit lists {} points for m = {}", orbit.points.len(), orbit.m)));
    }
    orbit.params.validate(&cfg)?;
    let fresh = recertify(&orbit, args.tol, &cfg)?;
    emit_json(&fresh, &args.output.out)
}

fn config(path: Option<&Path>) -> Result<EngineConfig, Failure> {
    match path {
        Some(p) => settings::load(p).map_err(Failure::Usage),
        None => Ok(EngineConfig::default()),
    }
}

fn run(cli: Cli) -> Outcome {
    let cfg = config(cli.config.as_deref())?;
    match cli.command {
        Command::Poincare(a) => cmd_poincare(a, cfg),
        Command::FindOrbits(a) => cmd_find_orbits(a, cfg),
        Command::MelnikovSweep(a) => cmd_melnikov_sweep(a, cfg),
        Command::Continue(a) => cmd_continue(a, cfg),
        Command::CountZeros(a) => cmd_count_zeros(a, cfg),
        Command::Certify(a) => cmd_certify(a, cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
