//! Batch front end: fixture construction, experiment orchestration, and
//! report emission.
//!
//! Subcommands: `oracle`, `solve`, `sweep`, `usc`, `barrier`, `blowup`,
//! `dirichlet`, `report`. The experiment subcommands read a JSON run
//! configuration (schema `acflab-run/v1`) and write one report per selected
//! experiment into the configured output directory. Exit code 0 means every
//! verdict was `pass` or an expected hypothesis finding; 2 means a claimed
//! inequality failed; 64 is a usage or configuration error.

use crate::experiment::{
    asymptotic_development_experiment, barrier_lipschitz_experiment, dirichlet_boundary_experiment,
    directional_usc_check, usc_interior_experiment, BarrierConfig, BlowupConfig, DirichletConfig,
    ExperimentReport, UscConfig, Verdict,
};
use crate::geometry::{DiniModulus, ModulusFamily, TouchingCone};
use crate::grid::{BasePoint, DomainMask, GridSpec, ScalarField};
use crate::oracle::{oracle_sample, AltCaffarelliProfile, OracleField};
use crate::report::{sweep_to_csv, to_json_string, write_json};
use crate::solve::{solve_dirichlet, DirichletProblem};
use crate::{functional, sfld, vec3, Error, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const RUN_SCHEMA: &str = "acflab-run/v1";
pub const SOLVE_SCHEMA: &str = "acflab-solve/v1";

/// Exit code for verdict failures.
pub const EXIT_FAIL: i32 = 2;
/// Exit code for usage and configuration errors.
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(
    name = "acflab",
    about = "Numerical lab for monotonicity-formula gradient estimates",
    disable_help_subcommand = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Materialize a closed-form oracle field (plus analytic gradients).
    Oracle(OracleArgs),
    /// Run a masked Dirichlet solve described by a JSON config.
    Solve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Radius sweep of the weighted energy and the gradient estimate.
    Sweep(SweepArgs),
    /// Interior (or directional) upper semi-continuity experiments.
    Usc {
        #[arg(long)]
        config: PathBuf,
    },
    /// Barrier comparison and Lipschitz fit experiments.
    Barrier {
        #[arg(long)]
        config: PathBuf,
    },
    /// Blow-up development experiments.
    Blowup {
        #[arg(long)]
        config: PathBuf,
    },
    /// Dirichlet boundary upper semi-continuity experiments.
    Dirichlet {
        #[arg(long)]
        config: PathBuf,
    },
    /// Summarize the experiment reports in a directory.
    Report {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// One of: half-plane, alt-caffarelli, annulus, cone2d.
    pub name: String,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 1.0)]
    pub half_extent: f64,
    #[arg(long, default_value_t = 1.0 / 128.0)]
    pub spacing: f64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    /// Comma-separated axis, e.g. 1,0,0.
    #[arg(long, default_value = "1,0,0")]
    pub axis: String,
    #[arg(long, default_value_t = 0.0)]
    pub offset: f64,
    #[arg(long, default_value_t = 0.25)]
    pub rin: f64,
    #[arg(long, default_value_t = 1.0)]
    pub rout: f64,
    /// Sector opening in radians (cone2d).
    #[arg(long, default_value_t = 1.5 * std::f64::consts::PI)]
    pub opening: f64,
    #[arg(long, default_value_t = 0.0)]
    pub start_angle: f64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub field: PathBuf,
    /// Comma-separated base point, e.g. 0.1,0.2.
    #[arg(long)]
    pub y: String,
    /// Level through the base point; interpolated from the field if omitted.
    #[arg(long)]
    pub level: Option<f64>,
    /// Comma-separated decreasing radii.
    #[arg(long, default_value = "0.32,0.16,0.08,0.04")]
    pub radii: String,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    /// Also extract the level boundary through the base point as a CSV
    /// point list.
    #[arg(long, default_value_t = false)]
    pub boundary_csv: bool,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_vector(text: &str) -> Result<[f64; 3]> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Config(format!("vector {text:?}: {e}"))))
        .collect::<Result<_>>()?;
    if parts.is_empty() || parts.len() > 3 {
        return Err(Error::Config(format!("vector {text:?} must have 1..=3 components")));
    }
    let mut v = [0.0; 3];
    v[..parts.len()].copy_from_slice(&parts);
    Ok(v)
}

fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Config(format!("list {text:?}: {e}"))))
        .collect()
}

// ---------------------------------------------------------------------------
// Run configuration schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridConfig {
    pub dim: usize,
    pub half_extent: f64,
    pub spacing: f64,
}

impl GridConfig {
    pub fn build(&self) -> Result<GridSpec> {
        GridSpec::symmetric(self.dim, self.half_extent, self.spacing)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FixtureConfig {
    HalfPlane { a: f64, axis: [f64; 3], offset: f64 },
    AltCaffarelli,
    Annulus { r_in: f64, r_out: f64 },
    Cone2d { opening: f64, start_angle: f64 },
}

impl FixtureConfig {
    pub fn oracle(&self) -> Result<OracleField> {
        Ok(match *self {
            FixtureConfig::HalfPlane { a, axis, offset } => OracleField::half_plane(a, axis, offset)?,
            FixtureConfig::AltCaffarelli => OracleField::AltCaffarelli,
            FixtureConfig::Annulus { r_in, r_out } => OracleField::AnnulusCapacitor { r_in, r_out },
            FixtureConfig::Cone2d { opening, start_angle } => {
                OracleField::HomogeneousCone2d { opening, start_angle }
            }
        })
    }
}

/// A triangular tooth on the floor of a zig-zag domain.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Tooth {
    pub center: f64,
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DomainConfig {
    HalfSpace { axis: [f64; 3], offset: f64 },
    Ring { r_in: f64, r_out: f64 },
    /// `{x₂ > s(x₁)}` where `s` is the upper envelope of triangular teeth
    /// over the floor `x₂ = 0`.
    Zigzag { teeth: Vec<Tooth> },
}

impl DomainConfig {
    pub fn build(&self, grid: &GridSpec) -> Result<DomainMask> {
        match self {
            DomainConfig::HalfSpace { axis, offset } => {
                let axis = vec3::normalize(*axis)
                    .ok_or_else(|| Error::Config("domain axis must be nonzero".into()))?;
                Ok(DomainMask::from_fn(*grid, |p| vec3::dot(p, axis) > *offset))
            }
            DomainConfig::Ring { r_in, r_out } => {
                let (r_in, r_out) = (*r_in, *r_out);
                Ok(DomainMask::from_fn(*grid, |p| {
                    let r = vec3::norm(p);
                    r > r_in && r < r_out
                }))
            }
            DomainConfig::Zigzag { teeth } => {
                let teeth = teeth.clone();
                Ok(DomainMask::from_fn(*grid, |p| p[1] > zigzag_profile(&teeth, p[0])))
            }
        }
    }
}

/// Upper envelope of the triangular teeth at abscissa `x`.
pub fn zigzag_profile(teeth: &[Tooth], x: f64) -> f64 {
    teeth
        .iter()
        .map(|t| (t.height * (1.0 - (x - t.center).abs() / (0.5 * t.width))).max(0.0))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BoundaryDataConfig {
    /// `g = coeff · |x|² / (2n)`, so `Δg = coeff`.
    Quadratic { coeff: f64 },
    /// `g = (|x|² - r_in²) / (r_out² - r_in²)`: 0 on the inner circle, 1 on
    /// the outer.
    RadialRamp { r_in: f64, r_out: f64 },
    Linear { a: f64, axis: [f64; 3] },
    /// Read the data from an SFLD v1 file (grid must match the run grid).
    Sfld { path: PathBuf },
}

impl BoundaryDataConfig {
    pub fn build(&self, grid: &GridSpec) -> Result<ScalarField> {
        let dim = grid.dim() as f64;
        Ok(match self {
            &BoundaryDataConfig::Quadratic { coeff } => {
                ScalarField::from_fn(*grid, |p| coeff * vec3::dot(p, p) / (2.0 * dim))
            }
            &BoundaryDataConfig::RadialRamp { r_in, r_out } => ScalarField::from_fn(*grid, |p| {
                (vec3::dot(p, p) - r_in * r_in) / (r_out * r_out - r_in * r_in)
            }),
            &BoundaryDataConfig::Linear { a, axis } => {
                let axis = vec3::normalize(axis)
                    .ok_or_else(|| Error::Config("boundary data axis must be nonzero".into()))?;
                ScalarField::from_fn(*grid, |p| a * vec3::dot(p, axis))
            }
            BoundaryDataConfig::Sfld { path } => {
                let f = crate::sfld::read_field(path)?;
                if f.grid() != grid {
                    return Err(Error::GridMismatch(format!(
                        "field {} does not match the run grid",
                        path.display()
                    )));
                }
                f
            }
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConeConfig {
    pub axis: [f64; 3],
    pub modulus: ModulusFamily,
    pub reach: f64,
}

impl ConeConfig {
    pub fn build(&self, apex: [f64; 3]) -> Result<TouchingCone> {
        TouchingCone::new(apex, self.axis, DiniModulus::from_family(self.modulus.clone())?, self.reach)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExperimentEntry {
    Usc {
        name: String,
        y0: [f64; 3],
        #[serde(default)]
        level: Option<f64>,
        /// When set, runs the directional variant along this direction.
        #[serde(default)]
        direction: Option<[f64; 3]>,
        usc: UscConfig,
    },
    Barrier {
        name: String,
        y0: [f64; 3],
        #[serde(default)]
        level: Option<f64>,
        cone: ConeConfig,
        #[serde(default = "BarrierConfig::default")]
        barrier: BarrierConfig,
    },
    Blowup {
        name: String,
        y0: [f64; 3],
        #[serde(default)]
        level: Option<f64>,
        blowup: BlowupConfig,
    },
    Dirichlet {
        name: String,
        y0: [f64; 3],
        domain: DomainConfig,
        boundary: BoundaryDataConfig,
        dirichlet: DirichletConfig,
    },
}

impl ExperimentEntry {
    pub fn name(&self) -> &str {
        match self {
            ExperimentEntry::Usc { name, .. }
            | ExperimentEntry::Barrier { name, .. }
            | ExperimentEntry::Blowup { name, .. }
            | ExperimentEntry::Dirichlet { name, .. } => name,
        }
    }

    fn matches(&self, kind: RunKind) -> bool {
        matches!(
            (self, kind),
            (ExperimentEntry::Usc { .. }, RunKind::Usc)
                | (ExperimentEntry::Barrier { .. }, RunKind::Barrier)
                | (ExperimentEntry::Blowup { .. }, RunKind::Blowup)
                | (ExperimentEntry::Dirichlet { .. }, RunKind::Dirichlet)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunKind {
    Usc,
    Barrier,
    Blowup,
    Dirichlet,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub schema: String,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
    pub grid: GridConfig,
    pub fixture: FixtureConfig,
    pub experiments: Vec<ExperimentEntry>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if cfg.schema != RUN_SCHEMA {
            return Err(Error::Config(format!(
                "schema {:?} is not {RUN_SCHEMA:?}",
                cfg.schema
            )));
        }
        Ok(cfg)
    }
}

// ---------------------------------------------------------------------------
// Subcommand drivers
// ---------------------------------------------------------------------------

fn base_point(
    field: &ScalarField,
    pos: [f64; 3],
    level: Option<f64>,
) -> Result<BasePoint> {
    match level {
        Some(l) => BasePoint::with_level(field.grid(), pos, l),
        None => BasePoint::in_field(field, pos),
    }
}

pub fn cmd_oracle(args: &OracleArgs) -> Result<i32> {
    let axis = parse_vector(&args.axis)?;
    let (oracle, dim) = match args.name.as_str() {
        "half-plane" => (OracleField::half_plane(args.a, axis, args.offset)?, args.dim),
        "alt-caffarelli" => (OracleField::AltCaffarelli, 3),
        "annulus" => (OracleField::AnnulusCapacitor { r_in: args.rin, r_out: args.rout }, args.dim),
        "cone2d" => {
            (OracleField::HomogeneousCone2d { opening: args.opening, start_angle: args.start_angle }, 2)
        }
        other => {
            return Err(Error::Config(format!(
                "unknown oracle {other:?}; expected half-plane | alt-caffarelli | annulus | cone2d"
            )))
        }
    };
    let grid = GridSpec::symmetric(dim, args.half_extent, args.spacing)?;
    let sample = oracle_sample(&oracle, &grid)?;
    std::fs::create_dir_all(&args.out)?;
    sfld::write_field(&sample.field, args.out.join("field.sfld"))?;
    let magnitude = ScalarField::from_values(
        grid,
        sample.gradient.iter().map(|g| vec3::norm(*g)).collect(),
    )?;
    sfld::write_field(&magnitude, args.out.join("grad_magnitude.sfld"))?;
    for a in 0..dim {
        let comp = ScalarField::from_values(grid, sample.gradient.iter().map(|g| g[a]).collect())?;
        sfld::write_field(&comp, args.out.join(format!("grad_{a}.sfld")))?;
    }
    let mut meta = json!({
        "oracle": oracle,
        "dim": dim,
        "spacing": args.spacing,
        "half_extent": args.half_extent,
    });
    if matches!(oracle, OracleField::AltCaffarelli) {
        let p: &AltCaffarelliProfile = &sample.profile;
        meta["theta0_radians"] = json!(p.theta0());
        meta["theta0_degrees"] = json!(p.theta0().to_degrees());
        meta["fprime_theta0"] = json!(p.fprime_theta0());
    }
    write_json(&meta, args.out.join("metadata.json"))?;
    println!("oracle {} -> {}", args.name, args.out.display());
    Ok(0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveConfig {
    pub schema: String,
    pub grid: GridConfig,
    pub domain: DomainConfig,
    pub boundary: BoundaryDataConfig,
    #[serde(default)]
    pub rhs: f64,
    #[serde(default = "SolveConfig::default_tol")]
    pub residual_tol: f64,
    #[serde(default = "SolveConfig::default_iters")]
    pub max_iters: usize,
    pub output_dir: PathBuf,
}

impl SolveConfig {
    fn default_tol() -> f64 {
        1e-9
    }
    fn default_iters() -> usize {
        60_000
    }
}

pub fn cmd_solve(path: &Path) -> Result<i32> {
    let text = std::fs::read_to_string(path)?;
    let cfg: SolveConfig =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    if cfg.schema != SOLVE_SCHEMA {
        return Err(Error::Config(format!("schema {:?} is not {SOLVE_SCHEMA:?}", cfg.schema)));
    }
    let grid = cfg.grid.build()?;
    let mask = cfg.domain.build(&grid)?;
    let boundary = cfg.boundary.build(&grid)?;
    let (solution, report) = solve_dirichlet(
        &DirichletProblem { mask: &mask, boundary_values: &boundary, rhs: cfg.rhs },
        cfg.residual_tol,
        cfg.max_iters,
    )?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    sfld::write_field(&solution, cfg.output_dir.join("solution.sfld"))?;
    sfld::write_mask(&mask, cfg.output_dir.join("mask.sfld"))?;
    write_json(&report, cfg.output_dir.join("solve_report.json"))?;
    println!(
        "solve: {} iterations, residual {:.3e}, converged {}",
        report.iterations, report.final_residual, report.converged
    );
    Ok(if report.converged { 0 } else { EXIT_FAIL })
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<i32> {
    let field = sfld::read_field(&args.field)?;
    let pos = parse_vector(&args.y)?;
    let radii = parse_list(&args.radii)?;
    let y = base_point(&field, pos, args.level)?;
    let h = field.grid().spacing();
    let max_admissible = field.grid().boundary_distance(pos);
    for &r in &radii {
        if r < 3.0 * h || r > max_admissible {
            return Err(Error::Config(format!(
                "radius {r} outside the admissible range [{:.6}, {:.6}] for this grid and point",
                3.0 * h,
                max_admissible
            )));
        }
    }
    let est = functional::gradient_estimate(&field, &y, &radii, args.delta)?;
    std::fs::create_dir_all(&args.out)?;
    std::fs::write(args.out.join("sweep.csv"), sweep_to_csv(&est.sweep))?;
    let c0 = functional::c0_closed_form(field.grid().dim())?;
    let summary = json!({
        "y": y.pos(),
        "level": y.level(),
        "radii": radii,
        "delta": args.delta,
        "c0": c0,
        "fit": est.fit,
        "gradient_estimate": est.value,
    });
    write_json(&summary, args.out.join("sweep.json"))?;
    if args.boundary_csv {
        let boundary = crate::geometry::extract_level_boundary(&field, y.level());
        crate::report::write_boundary_csv(&boundary, field.grid().dim(), args.out.join("boundary.csv"))?;
    }
    println!("gradient estimate at {:?}: {}", y.pos(), est.value);
    Ok(0)
}

fn run_experiments(path: &Path, kind: RunKind) -> Result<i32> {
    let cfg = RunConfig::load(path)?;
    let grid = cfg.grid.build()?;
    let selected: Vec<&ExperimentEntry> =
        cfg.experiments.iter().filter(|e| e.matches(kind)).collect();
    if selected.is_empty() {
        return Err(Error::Config("no experiment of the requested kind in the config".into()));
    }
    std::fs::create_dir_all(&cfg.output_dir)?;

    // The fixture field is shared by the non-Dirichlet experiments.
    let needs_field = selected
        .iter()
        .any(|e| !matches!(e, ExperimentEntry::Dirichlet { .. }));
    let field = if needs_field {
        Some(oracle_sample(&cfg.fixture.oracle()?, &grid)?.field)
    } else {
        None
    };

    let mut exit = 0;
    for entry in selected {
        let report = run_entry(entry, &cfg, field.as_ref(), &grid)?;
        let out = cfg.output_dir.join(format!("{}.json", entry.name()));
        write_json(&report, &out)?;
        if !report.margins.is_empty() {
            let mut csv = String::from("eps,shell_max,margin,tau,passed\n");
            for m in &report.margins {
                writeln!(csv, "{},{},{},{},{}", m.eps, m.shell_max, m.margin, m.tau, m.passed)
                    .unwrap();
            }
            std::fs::write(cfg.output_dir.join(format!("{}_margins.csv", entry.name())), csv)?;
        }
        eprintln!(
            "{}: {} ({:.2}s)",
            entry.name(),
            verdict_str(report.verdict),
            report.runtime_seconds
        );
        if report.verdict == Verdict::Fail {
            exit = EXIT_FAIL;
        }
    }
    Ok(exit)
}

fn run_entry(
    entry: &ExperimentEntry,
    cfg: &RunConfig,
    field: Option<&ScalarField>,
    grid: &GridSpec,
) -> Result<ExperimentReport> {
    let field_for = || -> Result<&ScalarField> {
        field.ok_or_else(|| Error::Config("experiment requires a fixture field".into()))
    };
    match entry {
        ExperimentEntry::Usc { y0, level, direction, usc, .. } => {
            let u = field_for()?;
            let mut usc = usc.clone();
            usc.seed = usc.seed.wrapping_add(cfg.seed);
            let y = base_point(u, *y0, *level)?;
            match direction {
                Some(d) => directional_usc_check(u, &y, *d, &usc),
                None => usc_interior_experiment(u, &y, &usc),
            }
        }
        ExperimentEntry::Barrier { y0, level, cone, barrier, .. } => {
            let u = field_for()?;
            let y = base_point(u, *y0, *level)?;
            let cone = cone.build(y.pos())?;
            barrier_lipschitz_experiment(u, &y, &cone, barrier)
        }
        ExperimentEntry::Blowup { y0, level, blowup, .. } => {
            let u = field_for()?;
            let y = base_point(u, *y0, *level)?;
            asymptotic_development_experiment(u, &y, blowup)
        }
        ExperimentEntry::Dirichlet { y0, domain, boundary, dirichlet, .. } => {
            let mask = domain.build(grid)?;
            let data = boundary.build(grid)?;
            let mut dirichlet = dirichlet.clone();
            dirichlet.usc.seed = dirichlet.usc.seed.wrapping_add(cfg.seed);
            dirichlet_boundary_experiment(&mask, &data, *y0, &dirichlet)
        }
    }
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
        Verdict::HypothesisViolated => "hypothesis-violated",
        Verdict::HypothesisNotMet => "hypothesis-not-met",
    }
}

pub fn cmd_report(dir: &Path, out: Option<&Path>) -> Result<i32> {
    let mut rows = Vec::new();
    let mut entries: Vec<_> = std::fs::read_dir(dir)?.collect::<std::io::Result<_>>()?;
    entries.sort_by_key(|e| e.path());
    for entry in entries {
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let Ok(text) = std::fs::read_to_string(&path) else { continue };
        let Ok(value) = serde_json::from_str::<serde_json::Value>(&text) else { continue };
        let (Some(exp), Some(verdict)) = (value.get("experiment"), value.get("verdict")) else {
            continue;
        };
        rows.push((
            path.file_name().unwrap().to_string_lossy().into_owned(),
            exp.as_str().unwrap_or("?").to_string(),
            verdict.as_str().unwrap_or("?").to_string(),
        ));
    }
    if rows.is_empty() {
        return Err(Error::Config(format!("no experiment reports under {}", dir.display())));
    }
    let mut csv = String::from("file,experiment,verdict\n");
    let mut exit = 0;
    for (file, exp, verdict) in &rows {
        println!("{file}: {exp} {verdict}");
        writeln!(csv, "{file},{exp},{verdict}").unwrap();
        if verdict == "fail" {
            exit = EXIT_FAIL;
        }
    }
    if let Some(out) = out {
        std::fs::write(out, csv)?;
    }
    Ok(exit)
}

/// Dispatch a parsed command line; returns the process exit code.
pub fn run(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Oracle(args) => cmd_oracle(args),
        Command::Solve { config } => cmd_solve(config),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Usc { config } => run_experiments(config, RunKind::Usc),
        Command::Barrier { config } => run_experiments(config, RunKind::Barrier),
        Command::Blowup { config } => run_experiments(config, RunKind::Blowup),
        Command::Dirichlet { config } => run_experiments(config, RunKind::Dirichlet),
        Command::Report { dir, out } => cmd_report(dir, out.as_deref()),
    }
}

/// Initialize the global thread pool from `ACFLAB_THREADS` when set.
pub fn init_threads() {
    if let Ok(text) = std::env::var("ACFLAB_THREADS") {
        if let Ok(n) = text.trim().parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
}

/// Render any report as a JSON string (re-exported for integration tests).
pub fn report_json(report: &ExperimentReport) -> Result<String> {
    to_json_string(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_and_list_parsing() {
        assert_eq!(parse_vector("1,0,0").unwrap(), [1.0, 0.0, 0.0]);
        assert_eq!(parse_vector("0.5,-0.25").unwrap(), [0.5, -0.25, 0.0]);
        assert!(parse_vector("a,b").is_err());
        assert_eq!(parse_list("0.4,0.2").unwrap(), vec![0.4, 0.2]);
    }

    #[test]
    fn zigzag_profile_is_an_upper_envelope() {
        let teeth = vec![
            Tooth { center: 0.2, width: 0.1, height: 0.1 },
            Tooth { center: 0.1, width: 0.05, height: 0.05 },
        ];
        assert_eq!(zigzag_profile(&teeth, 0.2), 0.1);
        assert_eq!(zigzag_profile(&teeth, 0.1), 0.05);
        assert_eq!(zigzag_profile(&teeth, -0.3), 0.0);
        // Flanks interpolate linearly.
        let mid = zigzag_profile(&teeth, 0.2 + 0.025);
        assert!((mid - 0.05).abs() < 1e-12);
    }

    #[test]
    fn run_config_schema_is_enforced() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, r#"{"schema":"other","seed":0,"output_dir":"o","grid":{"dim":2,"half_extent":1.0,"spacing":0.1},"fixture":{"kind":"alt-caffarelli"},"experiments":[]}"#).unwrap();
        assert!(RunConfig::load(&path).is_err());
    }
}
