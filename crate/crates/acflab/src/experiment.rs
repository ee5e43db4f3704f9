//! End-to-end experiments: interior and boundary upper semi-continuity of
//! the monotonicity-based gradient, the barrier Lipschitz bound, and the
//! first-order blow-up development.
//!
//! Every experiment emits an [`ExperimentReport`] with per-sample records,
//! fitted constants, per-shell margins and a verdict. A verdict of
//! `hypothesis-violated` means the geometric touching hypothesis failed at a
//! sampled point (the expected finding on negative fixtures), which is
//! distinct from `fail` (a claimed inequality was violated on a fixture that
//! satisfies the hypotheses).

use crate::functional::gradient_estimate;
use crate::geometry::{verify_exterior_touch, DiniModulus, TouchingCone};
use crate::grid::{check_subsolution, BasePoint, DomainMask, GridSpec, ScalarField};
use crate::oracle::{blowup_rescale_into, blowup_window};
use crate::solve::{ball_mask, build_barrier, solve_dirichlet, DirichletProblem};
use crate::{vec3, Error, Result};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

/// How the touching-cone coefficient adapts to the sample position.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum CoeffRule {
    Fixed { value: f64 },
    /// `scale / max(|y - point|, floor)`: curvature-adapted cones for level
    /// sets bending around `point`.
    InverseDistance { point: [f64; 3], scale: f64, floor: f64 },
}

impl CoeffRule {
    fn at(&self, y: [f64; 3]) -> f64 {
        match *self {
            CoeffRule::Fixed { value } => value,
            CoeffRule::InverseDistance { point, scale, floor } => {
                scale / vec3::dist(y, point).max(floor)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ModulusRule {
    Zero,
    Hoelder { alpha: f64, coeff: CoeffRule },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum ReachRule {
    Fixed { value: f64 },
    /// `clamp(fraction·|y - point|, floor, cap)`.
    DistanceFraction { point: [f64; 3], fraction: f64, cap: f64, floor: f64 },
}

impl ReachRule {
    fn at(&self, y: [f64; 3]) -> f64 {
        match *self {
            ReachRule::Fixed { value } => value,
            ReachRule::DistanceFraction { point, fraction, cap, floor } => {
                (fraction * vec3::dist(y, point)).clamp(floor, cap)
            }
        }
    }
}

/// How the cone axis is oriented at a sample.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum AxisRule {
    /// Opposite the interpolated gradient (out of the super-level set).
    #[default]
    FromGradient,
    /// Toward a fixed point (robust at staircase boundaries of solved
    /// fields whose interpolated gradients are noisy).
    TowardPoint { point: [f64; 3] },
}

/// Recipe for the exterior touching cones checked at every sampled point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TouchSpec {
    pub modulus: ModulusRule,
    pub reach: ReachRule,
    #[serde(default)]
    pub axis: AxisRule,
    /// Interface tolerance in cells (overlap deeper than this many mesh
    /// widths into the cone counts as a violation).
    pub tol_cells: f64,
}

impl TouchSpec {
    /// Build the cone at a sample, or `None` when the axis cannot be
    /// oriented (degenerate gradient).
    pub fn cone_at(&self, u: &ScalarField, y: &BasePoint) -> Result<Option<TouchingCone>> {
        let g = u.grid();
        let h = g.spacing();
        let p = y.pos();
        let axis = match self.axis {
            AxisRule::TowardPoint { point } => match vec3::normalize(vec3::sub(point, p)) {
                Some(a) => a,
                None => return Ok(None),
            },
            AxisRule::FromGradient => {
                let mut grad = [0.0; 3];
                for a in 0..g.dim() {
                    let mut hi = p;
                    let mut lo = p;
                    hi[a] += h;
                    lo[a] -= h;
                    if !(g.contains(hi) && g.contains(lo)) {
                        return Ok(None);
                    }
                    grad[a] = (u.interpolate(hi) - u.interpolate(lo)) / (2.0 * h);
                }
                let scale = u.max_value() - u.min_value();
                let norm = vec3::norm(grad);
                if norm <= 1e-8 * scale.max(1.0) {
                    return Ok(None);
                }
                vec3::scale(grad, -1.0 / norm)
            }
        };
        let modulus = match &self.modulus {
            ModulusRule::Zero => DiniModulus::zero(),
            ModulusRule::Hoelder { alpha, coeff } => DiniModulus::hoelder(*alpha, coeff.at(p))?,
        };
        Ok(Some(TouchingCone::new(p, axis, modulus, self.reach.at(p))?))
    }
}

fn default_eps_schedule() -> Vec<f64> {
    vec![0.2, 0.1, 0.05]
}
fn default_shell_samples() -> usize {
    32
}
fn default_radii() -> Vec<f64> {
    vec![0.32, 0.16, 0.08, 0.04]
}
fn default_one() -> f64 {
    1.0
}
fn default_lower_bound() -> f64 {
    -1.0
}
fn default_subsolution_tol() -> f64 {
    1e-6
}
fn default_residual_tol() -> f64 {
    1e-9
}
fn default_max_iters() -> usize {
    60_000
}
fn default_tol_cells() -> f64 {
    1.5
}

/// Shared knobs of the shell-sampling experiments.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UscConfig {
    /// Decreasing list of ε values; each shell samples `|y - y⁰| < ε²`.
    #[serde(default = "default_eps_schedule")]
    pub eps_schedule: Vec<f64>,
    /// Samples per shell (axis-aligned probes plus uniform random fill).
    #[serde(default = "default_shell_samples")]
    pub shell_samples: usize,
    /// Decreasing radii for the gradient estimates.
    #[serde(default = "default_radii")]
    pub radii: Vec<f64>,
    /// Scale `K` of the tolerance envelope `τ(ε) = K·(ε + h/ε)`.
    #[serde(default = "default_one")]
    pub tau_scale: f64,
    /// Extrapolation exponent (1 in the Lipschitz case).
    #[serde(default = "default_one")]
    pub delta: f64,
    #[serde(default)]
    pub seed: u64,
    /// Subsolution lower bound required of the field (`Δu ≥ lower_bound`).
    #[serde(default = "default_lower_bound")]
    pub lower_bound: f64,
    #[serde(default = "default_subsolution_tol")]
    pub subsolution_tol: f64,
    #[serde(default)]
    pub touch: Option<TouchSpec>,
    /// Ball excluded from the subsolution gate. The nodewise Laplacian of a
    /// Lipschitz field does not converge at a conical vertex (truncation
    /// grows like h²/dist³), so fixtures with a genuine homogeneity vertex
    /// exclude a fixed ball around it.
    #[serde(default)]
    pub subsolution_exclude: Option<ExclusionBall>,
    /// Keep going past touch failures and record them (negative fixtures).
    #[serde(default)]
    pub force: bool,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ExclusionBall {
    pub center: [f64; 3],
    pub radius: f64,
}

impl UscConfig {
    pub fn defaults(seed: u64) -> Self {
        UscConfig {
            eps_schedule: vec![0.2, 0.1, 0.05],
            shell_samples: 32,
            radii: vec![0.32, 0.16, 0.08, 0.04],
            tau_scale: 1.0,
            delta: 1.0,
            seed,
            lower_bound: -1.0,
            subsolution_tol: 1e-6,
            touch: None,
            subsolution_exclude: None,
            force: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    /// The geometric touching hypothesis failed at a sampled point.
    HypothesisViolated,
    /// A lemma hypothesis (nonvanishing gradient) does not hold; the
    /// experiment is skipped rather than failed.
    HypothesisNotMet,
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleRecord {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    pub y: [f64; 3],
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub touch_passed: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// One shell of the USC comparison `M(ε) ≤ |∇u(y⁰)| + τ(ε)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ShellMargin {
    pub eps: f64,
    pub shell_max: f64,
    pub margin: f64,
    pub tau: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config: serde_json::Value,
    pub samples: Vec<SampleRecord>,
    pub fits: serde_json::Value,
    pub verdict: Verdict,
    pub margins: Vec<ShellMargin>,
    /// Wall-clock seconds; excluded from serialized reports so fixed seeds
    /// give byte-identical files.
    #[serde(skip)]
    pub runtime_seconds: f64,
}

impl ExperimentReport {
    /// Pass, or a finding that counts as the expected outcome.
    pub fn passed_or_expected(&self) -> bool {
        matches!(
            self.verdict,
            Verdict::Pass | Verdict::HypothesisViolated | Verdict::HypothesisNotMet
        )
    }
}

/// Uniform points in the ball `|y - center| < radius` plus axis-aligned
/// probes, all kept `headroom` away from the grid boundary.
fn shell_points(
    center: [f64; 3],
    radius: f64,
    count: usize,
    grid: &GridSpec,
    headroom: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<[f64; 3]> {
    let dim = grid.dim();
    let ok = |p: [f64; 3]| grid.contains(p) && grid.boundary_distance(p) >= headroom;
    let mut points = Vec::with_capacity(count);
    for a in 0..dim {
        for sign in [1.0, -1.0] {
            if points.len() >= count {
                break;
            }
            let mut p = center;
            p[a] += sign * 0.75 * radius;
            if ok(p) {
                points.push(p);
            }
        }
    }
    let mut attempts = 0;
    while points.len() < count && attempts < 200 * count {
        attempts += 1;
        let mut x = [0.0; 3];
        let mut n2 = 0.0;
        for xa in x.iter_mut().take(dim) {
            *xa = rng.gen_range(-1.0..1.0);
            n2 += *xa * *xa;
        }
        if n2 > 1.0 {
            continue;
        }
        let p = vec3::add(center, vec3::scale(x, radius));
        if ok(p) {
            points.push(p);
        }
    }
    points
}

/// τ(ε) = K·(ε + h/ε): the first term tracks the genuine limit, the second
/// the discretization floor of shells thinner than the mesh.
fn tau_envelope(tau_scale: f64, eps: f64, h: f64) -> f64 {
    tau_scale * (eps + h / eps)
}

/// Nodewise subsolution check skipping a ball around a singular vertex.
fn excluded_subsolution_check(
    u: &ScalarField,
    lower_bound: f64,
    tol: f64,
    ball: ExclusionBall,
) -> Result<crate::grid::SubsolutionCheck> {
    let (lap, defined) = crate::grid::discrete_laplacian(u);
    let g = u.grid();
    let mut worst_value = f64::INFINITY;
    let mut worst_node = [0usize; 3];
    for (lin, idx) in g.nodes() {
        if !defined.is_inside(lin) || vec3::dist(g.pos(idx), ball.center) < ball.radius {
            continue;
        }
        if lap.get(lin) < worst_value {
            worst_value = lap.get(lin);
            worst_node = idx;
        }
    }
    if tol < 0.0 {
        return Err(Error::Contract("subsolution tolerance must be nonnegative".into()));
    }
    Ok(crate::grid::SubsolutionCheck {
        passed: worst_value >= lower_bound - tol,
        worst_value,
        worst_node,
    })
}

struct TouchOutcome {
    passed: Option<bool>,
    note: Option<String>,
    hard_failure: bool,
}

fn run_touch_check(u: &ScalarField, y: &BasePoint, cfg: &UscConfig) -> Result<TouchOutcome> {
    let Some(spec) = &cfg.touch else {
        return Ok(TouchOutcome { passed: None, note: None, hard_failure: false });
    };
    let h = u.grid().spacing();
    match spec.cone_at(u, y)? {
        None => Ok(TouchOutcome {
            passed: None,
            note: Some("degenerate gradient; touching not orientable".into()),
            hard_failure: false,
        }),
        Some(cone) => {
            let tol = spec.tol_cells * h;
            if cone.reach() <= tol {
                // Every point of the reach ball is within the interface
                // layer; the lattice cannot resolve this cone.
                return Ok(TouchOutcome {
                    passed: None,
                    note: Some("reach below interface tolerance; touching unresolved".into()),
                    hard_failure: false,
                });
            }
            let report = verify_exterior_touch(u, y, &cone, tol)?;
            if report.detached {
                // A plateau point is not on its level boundary; the touching
                // condition is vacuous there.
                Ok(TouchOutcome {
                    passed: None,
                    note: Some("level plateau; touching vacuous".into()),
                    hard_failure: false,
                })
            } else if report.passed {
                Ok(TouchOutcome { passed: Some(true), note: None, hard_failure: false })
            } else {
                Ok(TouchOutcome {
                    passed: Some(false),
                    note: Some(format!(
                        "exterior touch failed: {} overlap nodes, worst margin {:.3e}",
                        report.overlap_nodes, report.worst_margin
                    )),
                    hard_failure: true,
                })
            }
        }
    }
}

/// Shared USC shell loop. `measure` maps a sample base point to the scalar
/// compared against the base estimate (a gradient estimate or a directional
/// difference quotient).
fn usc_shell_loop(
    u: &ScalarField,
    y0: &BasePoint,
    cfg: &UscConfig,
    experiment: &str,
    config_echo: serde_json::Value,
    measure: &(dyn Fn(&BasePoint) -> Result<f64> + Sync),
) -> Result<ExperimentReport> {
    let start = std::time::Instant::now();
    let g = u.grid();
    let h = g.spacing();
    let mut samples = Vec::new();
    let mut margins = Vec::new();

    let sub = match cfg.subsolution_exclude {
        None => check_subsolution(u, cfg.lower_bound, cfg.subsolution_tol)?,
        Some(ball) => excluded_subsolution_check(u, cfg.lower_bound, cfg.subsolution_tol, ball)?,
    };
    if !sub.passed {
        return Ok(ExperimentReport {
            experiment: experiment.into(),
            config: config_echo,
            samples,
            fits: json!({
                "subsolution_worst_value": sub.worst_value,
                "subsolution_worst_node": sub.worst_node,
            }),
            verdict: Verdict::Fail,
            margins,
            runtime_seconds: start.elapsed().as_secs_f64(),
        });
    }

    let est0 = gradient_estimate(u, y0, &cfg.radii, cfg.delta)?;
    samples.push(SampleRecord {
        kind: "base".into(),
        eps: None,
        y: y0.pos(),
        value: est0.value,
        touch_passed: None,
        note: None,
    });

    let r_max = cfg.radii[0];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut verdict = Verdict::Pass;

    'shells: for &eps in &cfg.eps_schedule {
        let pts = shell_points(y0.pos(), eps * eps, cfg.shell_samples, g, r_max, &mut rng);
        let mut shell_records = Vec::with_capacity(pts.len());
        for p in &pts {
            let y = BasePoint::in_field(u, *p)?;
            let touch = run_touch_check(u, &y, cfg)?;
            shell_records.push((y, touch));
        }
        let values: Vec<f64> = shell_records
            .par_iter()
            .map(|(y, _)| measure(y))
            .collect::<Result<_>>()?;
        let mut shell_max = f64::NEG_INFINITY;
        let mut aborted = false;
        for ((y, touch), value) in shell_records.iter().zip(&values) {
            samples.push(SampleRecord {
                kind: "shell".into(),
                eps: Some(eps),
                y: y.pos(),
                value: *value,
                touch_passed: touch.passed,
                note: touch.note.clone(),
            });
            shell_max = shell_max.max(*value);
            if touch.hard_failure && !cfg.force {
                verdict = Verdict::HypothesisViolated;
                aborted = true;
                break;
            }
        }
        if aborted {
            break 'shells;
        }
        let tau = tau_envelope(cfg.tau_scale, eps, h);
        let margin = shell_max - est0.value;
        let passed = margin <= tau;
        margins.push(ShellMargin { eps, shell_max, margin, tau, passed });
        if !passed {
            verdict = Verdict::Fail;
        }
    }

    Ok(ExperimentReport {
        experiment: experiment.into(),
        config: config_echo,
        samples,
        fits: json!({
            "estimate_y0": est0.value,
            "fit_limit_y0": est0.fit.limit,
            "fit_residual_rel_y0": est0.fit.residual_rel,
            "fit_low_confidence_y0": est0.fit.low_confidence,
            "tau_scale": cfg.tau_scale,
        }),
        verdict,
        margins,
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Interior upper semi-continuity: for each ε, the max gradient estimate
/// over the shell `|y - y⁰| < ε²` may exceed the estimate at `y⁰` by at
/// most `τ(ε)`.
pub fn usc_interior_experiment(
    u: &ScalarField,
    y0: &BasePoint,
    cfg: &UscConfig,
) -> Result<ExperimentReport> {
    let echo = serde_json::to_value(cfg).map_err(|e| Error::Config(e.to_string()))?;
    let measure = |y: &BasePoint| gradient_estimate(u, y, &cfg.radii, cfg.delta).map(|e| e.value);
    usc_shell_loop(u, y0, cfg, "usc-interior", echo, &measure)
}

/// Directional upper semi-continuity: one-sided difference quotients along
/// `direction` compared against the full gradient estimate at `y⁰`.
pub fn directional_usc_check(
    u: &ScalarField,
    y0: &BasePoint,
    direction: [f64; 3],
    cfg: &UscConfig,
) -> Result<ExperimentReport> {
    let dir = vec3::normalize(direction)
        .ok_or_else(|| Error::Contract("direction must be a nonzero vector".into()))?;
    let echo = serde_json::to_value(cfg).map_err(|e| Error::Config(e.to_string()))?;
    let step = 3.0 * u.grid().spacing();
    let measure = move |y: &BasePoint| -> Result<f64> {
        let p = y.pos();
        let q = vec3::add(p, vec3::scale(dir, step));
        if !u.grid().contains(q) {
            return Err(Error::Contract("directional probe exits the grid".into()));
        }
        Ok(((u.interpolate(q) - u.interpolate(p)) / step).abs())
    };
    usc_shell_loop(u, y0, cfg, "usc-directional", echo, &measure)
}

/// Configuration of the barrier comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BarrierConfig {
    /// Right-hand side constant of the barrier problem `Δh = -c`.
    #[serde(default)]
    pub c: f64,
    #[serde(default = "default_residual_tol")]
    pub residual_tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_tol_cells")]
    pub tol_cells: f64,
}

impl Default for BarrierConfig {
    fn default() -> Self {
        BarrierConfig { c: 0.0, residual_tol: 1e-9, max_iters: 60_000, tol_cells: 1.5 }
    }
}

/// Barrier comparison and Lipschitz fit: solve the barrier on the cone
/// complement clipped to the reach ball, assert `u ≤ h + 2·residual_tol`
/// nodewise, then fit the smallest `L` with `u(x) - u(y⁰) ≤ L·|x - y⁰|`
/// over the super-level side of the ball.
pub fn barrier_lipschitz_experiment(
    u: &ScalarField,
    y0: &BasePoint,
    cone: &TouchingCone,
    cfg: &BarrierConfig,
) -> Result<ExperimentReport> {
    let start = std::time::Instant::now();
    let g = *u.grid();
    let h = g.spacing();
    let echo = serde_json::to_value(cfg).map_err(|e| Error::Config(e.to_string()))?;

    // Overlap is a genuine violation of the exterior hypothesis; a detached
    // base point (level plateau, e.g. a constant field) leaves the touching
    // condition vacuous and the barrier comparison still well posed.
    let touch = verify_exterior_touch(u, y0, cone, cfg.tol_cells * h)?;
    if touch.overlap_nodes > 0 {
        return Ok(ExperimentReport {
            experiment: "barrier-lipschitz".into(),
            config: echo,
            samples: vec![],
            fits: json!({
                "touch_overlap_nodes": touch.overlap_nodes,
                "touch_detached": touch.detached,
            }),
            verdict: Verdict::HypothesisViolated,
            margins: vec![],
            runtime_seconds: start.elapsed().as_secs_f64(),
        });
    }

    let mask = crate::geometry::cone_mask(cone, &g)
        .not()
        .and(&ball_mask(&g, y0.pos(), cone.reach()))?;
    let (barrier, solve_rep) =
        build_barrier(&mask, cone, y0, u, cfg.c, cfg.residual_tol, cfg.max_iters)?;

    let mut worst_violation = f64::NEG_INFINITY;
    let mut worst_node = [0usize; 3];
    for (lin, idx) in g.nodes() {
        if mask.is_inside(lin) {
            let v = u.get(lin) - barrier.get(lin);
            if v > worst_violation {
                worst_violation = v;
                worst_node = idx;
            }
        }
    }
    let comparison_ok = worst_violation <= 2.0 * cfg.residual_tol;

    // Lipschitz constant over the super-level side of the reach ball.
    let level = y0.level();
    let mut lipschitz = 0.0f64;
    for (lin, idx) in g.nodes() {
        let p = g.pos(idx);
        let d = vec3::dist(p, y0.pos());
        if d < 0.5 * h || d >= cone.reach() {
            continue;
        }
        if u.get(lin) > level {
            lipschitz = lipschitz.max((u.get(lin) - level) / d);
        }
    }

    Ok(ExperimentReport {
        experiment: "barrier-lipschitz".into(),
        config: echo,
        samples: vec![],
        fits: json!({
            "lipschitz_l": lipschitz,
            "comparison_worst_violation": worst_violation,
            "comparison_worst_node": worst_node,
            "solver_iterations": solve_rep.iterations,
            "solver_residual": solve_rep.final_residual,
            "touch_detached": touch.detached,
        }),
        verdict: if comparison_ok && solve_rep.converged { Verdict::Pass } else { Verdict::Fail },
        margins: vec![],
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Least-squares fit of `c₁·⟨x, e⟩⁺` against nonnegative window data for a
/// fixed direction; returns `(c₁, relative L² residual)`.
pub(crate) fn fit_half_profile(data: &ScalarField, direction: [f64; 3]) -> (f64, f64) {
    let g = data.grid();
    let mut num = 0.0;
    let mut den = 0.0;
    let mut norm = 0.0;
    for (lin, idx) in g.nodes() {
        let m = vec3::dot(g.pos(idx), direction).max(0.0);
        let w = data.get(lin).max(0.0);
        num += w * m;
        den += m * m;
        norm += w * w;
    }
    if den <= 0.0 || norm <= 0.0 {
        return (0.0, if norm > 0.0 { 1.0 } else { 0.0 });
    }
    let c1 = (num / den).max(0.0);
    let mut ss = 0.0;
    for (lin, idx) in g.nodes() {
        let m = vec3::dot(g.pos(idx), direction).max(0.0);
        let e = data.get(lin).max(0.0) - c1 * m;
        ss += e * e;
    }
    (c1, (ss / norm).sqrt())
}

fn unit_from_angles(theta: f64, phi: f64, dim: usize) -> [f64; 3] {
    if dim == 2 {
        [phi.cos(), phi.sin(), 0.0]
    } else {
        [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
    }
}

/// Coarse direction scan plus local refinement of the half-profile fit.
/// Returns `(residual, axis, c₁)`.
fn best_half_profile(data: &ScalarField) -> (f64, [f64; 3], f64) {
    let dim = data.grid().dim();
    let mut best = (f64::INFINITY, [1.0, 0.0, 0.0], 0.0);
    let consider = |e: [f64; 3], best: &mut (f64, [f64; 3], f64)| {
        let (c1, res) = fit_half_profile(data, e);
        if res < best.0 {
            *best = (res, e, c1);
        }
    };
    if dim == 2 {
        let n = 96;
        for k in 0..n {
            let phi = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            consider(unit_from_angles(0.0, phi, 2), &mut best);
        }
        let mut step = 2.0 * std::f64::consts::PI / n as f64;
        for _ in 0..24 {
            step *= 0.6;
            let phi0 = best.1[1].atan2(best.1[0]);
            for s in [-1.0, 1.0] {
                consider(unit_from_angles(0.0, phi0 + s * step, 2), &mut best);
            }
        }
    } else {
        let n = 192;
        let golden = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
        for k in 0..n {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
            let theta = z.acos();
            let phi = golden * k as f64;
            consider(unit_from_angles(theta, phi, 3), &mut best);
        }
        let mut step = 0.2;
        for _ in 0..24 {
            step *= 0.7;
            let e = best.1;
            let theta0 = e[2].clamp(-1.0, 1.0).acos();
            let phi0 = e[1].atan2(e[0]);
            for (dt, dp) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
                consider(unit_from_angles(theta0 + dt * step, phi0 + dp * step, 3), &mut best);
            }
        }
    }
    best
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlowupConfig {
    /// Decreasing rescale radii.
    pub fit_radii: Vec<f64>,
    /// Radii for the reference gradient estimate at `y⁰`.
    #[serde(default = "default_radii")]
    pub estimate_radii: Vec<f64>,
    #[serde(default = "default_one")]
    pub delta: f64,
}

/// Blow-up development: rescale `(u - u(y⁰))/r` around `y⁰`, fit a
/// half-space profile `c₁⟨x, e⟩⁺`, and require the fit residual to decrease
/// along the radii with `c₁` converging to the gradient estimate within 10%.
pub fn asymptotic_development_experiment(
    u: &ScalarField,
    y0: &BasePoint,
    cfg: &BlowupConfig,
) -> Result<ExperimentReport> {
    let start = std::time::Instant::now();
    let echo = serde_json::to_value(cfg).map_err(|e| Error::Config(e.to_string()))?;
    let est0 = gradient_estimate(u, y0, &cfg.estimate_radii, cfg.delta)?;

    // Case-split threshold: ten times the discretization floor measured on
    // the zero field, with an absolute guard for exact zeros.
    let zero = ScalarField::constant(*u.grid(), 0.0);
    let zero_y = BasePoint::with_level(u.grid(), y0.pos(), 0.0)?;
    let floor = gradient_estimate(&zero, &zero_y, &cfg.estimate_radii, cfg.delta)?.value;
    let threshold = (10.0 * floor).max(1e-9 * (u.max_value() - u.min_value()).max(1e-12));
    if est0.value <= threshold {
        return Ok(ExperimentReport {
            experiment: "asymptotic-development".into(),
            config: echo,
            samples: vec![],
            fits: json!({ "estimate_y0": est0.value, "threshold": threshold }),
            verdict: Verdict::HypothesisNotMet,
            margins: vec![],
            runtime_seconds: start.elapsed().as_secs_f64(),
        });
    }

    let window = blowup_window(u.grid().dim());
    let level = y0.level();
    let shifted = u.map(|t| t - level);
    let mut rows = Vec::new();
    let mut samples = Vec::new();
    for &r in &cfg.fit_radii {
        let blow = blowup_rescale_into(&shifted, y0, r, &window)?;
        let (res, axis, c1) = best_half_profile(&blow.field);
        samples.push(SampleRecord {
            kind: "blowup-fit".into(),
            eps: Some(r),
            y: axis,
            value: c1,
            touch_passed: None,
            note: Some(format!("relative residual {res:.4e}")),
        });
        rows.push((r, c1, axis, res));
    }

    let mut residual_decreasing = true;
    for w in rows.windows(2) {
        // Radii are decreasing; residuals must follow within a small slack.
        if w[1].3 > w[0].3 * 1.02 + 1e-9 {
            residual_decreasing = false;
        }
    }
    let last = rows.last().ok_or_else(|| Error::Contract("no blow-up radii".into()))?;
    let (c1_final, axis_final, res_final) = (last.1, last.2, last.3);
    let c1_ok = (c1_final - est0.value).abs() <= 0.10 * est0.value;

    Ok(ExperimentReport {
        experiment: "asymptotic-development".into(),
        config: echo,
        samples,
        fits: json!({
            "estimate_y0": est0.value,
            "c1": c1_final,
            "axis": axis_final,
            "final_residual": res_final,
            "residual_decreasing": residual_decreasing,
        }),
        verdict: if residual_decreasing && c1_ok { Verdict::Pass } else { Verdict::Fail },
        margins: vec![],
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DirichletConfig {
    pub usc: UscConfig,
    #[serde(default = "default_residual_tol")]
    pub residual_tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
}

/// Boundary upper semi-continuity for the Dirichlet problem: solve
/// `Δu = 0` on the domain with data `g`, form `v = u - g` (zero outside the
/// domain), and run the USC protocol at a boundary point with both
/// boundary-along and interior-approach shells.
pub fn dirichlet_boundary_experiment(
    domain: &DomainMask,
    boundary_data: &ScalarField,
    y0_pos: [f64; 3],
    cfg: &DirichletConfig,
) -> Result<ExperimentReport> {
    let start = std::time::Instant::now();
    let g = *domain.grid();
    let h = g.spacing();
    let echo = serde_json::to_value(cfg).map_err(|e| Error::Config(e.to_string()))?;

    let (u, solve_rep) = solve_dirichlet(
        &DirichletProblem { mask: domain, boundary_values: boundary_data, rhs: 0.0 },
        cfg.residual_tol,
        cfg.max_iters,
    )?;
    let mut v = u.clone();
    for (lin, _) in g.nodes() {
        v.set(lin, u.get(lin) - boundary_data.get(lin));
    }
    let y0 = BasePoint::with_level(&g, y0_pos, 0.0)?;
    let est0 = gradient_estimate(&v, &y0, &cfg.usc.radii, cfg.usc.delta)?;

    // Candidate boundary points: midpoints of inside/outside lattice edges.
    let strides = g.strides();
    let mut boundary_pts = Vec::new();
    for (lin, idx) in g.nodes() {
        for a in 0..g.dim() {
            if idx[a] + 1 >= g.shape()[a] {
                continue;
            }
            let nb = lin + strides[a];
            if domain.is_inside(lin) != domain.is_inside(nb) {
                let mut p = g.pos(idx);
                p[a] += 0.5 * h;
                boundary_pts.push(p);
            }
        }
    }

    let r_max = cfg.usc.radii[0];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.usc.seed);
    let mut samples = vec![SampleRecord {
        kind: "base".into(),
        eps: None,
        y: y0.pos(),
        value: est0.value,
        touch_passed: None,
        note: None,
    }];
    let mut margins = Vec::new();
    let mut verdict = Verdict::Pass;

    'shells: for &eps in &cfg.usc.eps_schedule {
        let shell_radius = eps * eps;
        // Boundary-along samples: nearest boundary midpoints in the shell.
        let mut along: Vec<[f64; 3]> = boundary_pts
            .iter()
            .copied()
            .filter(|p| {
                let d = vec3::dist(*p, y0.pos());
                d > 0.25 * h && d < shell_radius && g.boundary_distance(*p) >= r_max
            })
            .collect();
        along.sort_by(|a, b| {
            vec3::dist(*a, y0.pos()).partial_cmp(&vec3::dist(*b, y0.pos())).unwrap()
        });
        along.truncate(cfg.usc.shell_samples);
        // Interior-approach samples.
        let interior: Vec<[f64; 3]> =
            shell_points(y0.pos(), shell_radius, 3 * cfg.usc.shell_samples, &g, r_max, &mut rng)
                .into_iter()
                .filter(|p| domain.is_inside(g.index(g.nearest_node(*p))))
                .take(cfg.usc.shell_samples)
                .collect();

        let mut shell_max = f64::NEG_INFINITY;
        let mut aborted = false;
        for (kind, pts) in [("boundary", &along), ("interior", &interior)] {
            let mut bases = Vec::with_capacity(pts.len());
            for p in pts.iter() {
                // Boundary points carry the exact level 0 (v vanishes on the
                // domain boundary); interior samples shift by their own
                // level so the energy sees the half ball, as in the interior
                // protocol.
                let y = if kind == "boundary" {
                    BasePoint::with_level(&g, *p, 0.0)?
                } else {
                    BasePoint::in_field(&v, *p)?
                };
                let touch = run_touch_check(&v, &y, &cfg.usc)?;
                bases.push((y, touch));
            }
            let values: Vec<f64> = bases
                .par_iter()
                .map(|(y, _)| {
                    gradient_estimate(&v, y, &cfg.usc.radii, cfg.usc.delta).map(|e| e.value)
                })
                .collect::<Result<_>>()?;
            for ((y, touch), value) in bases.iter().zip(&values) {
                samples.push(SampleRecord {
                    kind: kind.to_string(),
                    eps: Some(eps),
                    y: y.pos(),
                    value: *value,
                    touch_passed: touch.passed,
                    note: touch.note.clone(),
                });
                shell_max = shell_max.max(*value);
                if touch.hard_failure && !cfg.usc.force {
                    verdict = Verdict::HypothesisViolated;
                    aborted = true;
                    break;
                }
            }
            if aborted {
                break;
            }
        }
        if aborted {
            break 'shells;
        }
        let tau = tau_envelope(cfg.usc.tau_scale, eps, h);
        let margin = shell_max - est0.value;
        let passed = margin <= tau;
        margins.push(ShellMargin { eps, shell_max, margin, tau, passed });
        if !passed {
            verdict = Verdict::Fail;
        }
    }

    Ok(ExperimentReport {
        experiment: "dirichlet-boundary".into(),
        config: echo,
        samples,
        fits: json!({
            "estimate_y0": est0.value,
            "solver_iterations": solve_rep.iterations,
            "solver_residual": solve_rep.final_residual,
        }),
        verdict,
        margins,
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}
