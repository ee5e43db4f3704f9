//! Dini moduli of continuity, exterior touching cones, level-boundary
//! extraction and the distance conditions used by the semicontinuity
//! experiments.

use crate::grid::{BasePoint, DomainMask, GridSpec, ScalarField};
use crate::{vec3, Error, Result};
use serde::{Deserialize, Serialize};

/// Modulus family. Every family satisfies ω(0) = 0 and ω nondecreasing on
/// [0, 1]; beyond 1 the modulus is extended by its value at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ModulusFamily {
    /// ω ≡ 0 (flat cones degenerate to half-spaces).
    Zero,
    /// ω(t) = coeff · t^alpha.
    Hoelder { alpha: f64, coeff: f64 },
    /// ω(t) = 1 / log²(e/t); borderline Dini with integral exactly 1.
    LogSquared,
    /// Piecewise-linear table on [0, 1].
    Tabulated { ts: Vec<f64>, ws: Vec<f64> },
}

/// A modulus of continuity with a certified finite Dini integral
/// `∫₀¹ ω(t)/t dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiniModulus {
    family: ModulusFamily,
    dini_integral: f64,
}

impl DiniModulus {
    pub fn zero() -> Self {
        DiniModulus { family: ModulusFamily::Zero, dini_integral: 0.0 }
    }

    pub fn hoelder(alpha: f64, coeff: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Contract(format!("hoelder exponent must be in (0,1], got {alpha}")));
        }
        if !(coeff >= 0.0) {
            return Err(Error::Contract("hoelder coefficient must be nonnegative".into()));
        }
        let family = ModulusFamily::Hoelder { alpha, coeff };
        // Closed form coeff/alpha, cross-checked by quadrature at construction.
        let closed = coeff / alpha;
        let quad = dini_quadrature_s(|s| s_integrand(&family, s), 1e-9)?;
        if coeff > 0.0 && (quad - closed).abs() > 1e-6 * closed.max(1.0) {
            return Err(Error::Contract(format!(
                "dini quadrature {quad} disagrees with closed form {closed}"
            )));
        }
        Ok(DiniModulus { family, dini_integral: closed })
    }

    pub fn log_squared() -> Self {
        let family = ModulusFamily::LogSquared;
        // ∫₀¹ dt / (t log²(e/t)) = ∫₁^∞ s⁻² ds = 1 via s = log(e/t).
        DiniModulus { family, dini_integral: 1.0 }
    }

    pub fn tabulated(ts: Vec<f64>, ws: Vec<f64>) -> Result<Self> {
        if ts.len() != ws.len() || ts.len() < 2 {
            return Err(Error::Contract("tabulated modulus needs matching lists of length >= 2".into()));
        }
        if ts[0] != 0.0 || ws[0] != 0.0 {
            return Err(Error::Contract("tabulated modulus must start at (0, 0)".into()));
        }
        for k in 1..ts.len() {
            if !(ts[k] > ts[k - 1]) || ws[k] < ws[k - 1] {
                return Err(Error::Contract("tabulated modulus must be increasing in t, nondecreasing in w".into()));
            }
        }
        let family = ModulusFamily::Tabulated { ts, ws };
        let integral = dini_quadrature_s(|s| s_integrand(&family, s), 1e-9)?;
        Ok(DiniModulus { family, dini_integral: integral })
    }

    pub fn from_family(family: ModulusFamily) -> Result<Self> {
        match family {
            ModulusFamily::Zero => Ok(Self::zero()),
            ModulusFamily::Hoelder { alpha, coeff } => Self::hoelder(alpha, coeff),
            ModulusFamily::LogSquared => Ok(Self::log_squared()),
            ModulusFamily::Tabulated { ts, ws } => Self::tabulated(ts, ws),
        }
    }

    pub fn family(&self) -> &ModulusFamily {
        &self.family
    }

    /// ω(t), extended constantly beyond t = 1.
    pub fn eval(&self, t: f64) -> f64 {
        eval_family(&self.family, t)
    }

    pub fn dini_integral(&self) -> f64 {
        self.dini_integral
    }
}

fn eval_family(family: &ModulusFamily, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let t = t.min(1.0);
    match family {
        ModulusFamily::Zero => 0.0,
        ModulusFamily::Hoelder { alpha, coeff } => coeff * t.powf(*alpha),
        ModulusFamily::LogSquared => {
            let l = (std::f64::consts::E / t).ln();
            1.0 / (l * l)
        }
        ModulusFamily::Tabulated { ts, ws } => {
            match ts.binary_search_by(|probe| probe.partial_cmp(&t).unwrap()) {
                Ok(k) => ws[k],
                Err(k) => {
                    if k == 0 {
                        ws[0]
                    } else if k >= ts.len() {
                        *ws.last().unwrap()
                    } else {
                        let s = (t - ts[k - 1]) / (ts[k] - ts[k - 1]);
                        ws[k - 1] + s * (ws[k] - ws[k - 1])
                    }
                }
            }
        }
    }
}

/// Adaptive quadrature of `∫₀¹ ω(t)/t dt` for a modulus given as a function
/// of `t`. The substitution `s = log(e/t)` removes the singularity; note
/// that `t = e^{1-s}` underflows for `s ≳ 745`, so extremely slowly decaying
/// moduli should go through [`dini_quadrature_s`] with their exact
/// `s`-space form instead.
pub fn dini_quadrature(omega: impl Fn(f64) -> f64, tol: f64) -> Result<f64> {
    dini_quadrature_s(|s| omega((1.0 - s).exp()), tol)
}

/// Adaptive quadrature of `∫₁^∞ g(s) ds` where `g(s) = ω(e^{1-s})`, over
/// geometrically growing bands `[2^k, 2^{k+1}]`, with the remaining tail
/// estimated from the band decay ratio and folded into the result. Errors
/// when the estimated tail never shrinks (non-Dini input).
pub fn dini_quadrature_s(integrand: impl Fn(f64) -> f64, tol: f64) -> Result<f64> {
    let mut total = 0.0;
    let mut prev_band = f64::INFINITY;
    let mut tail = f64::INFINITY;
    for k in 0..60 {
        let lo = 2.0f64.powi(k);
        let hi = 2.0 * lo;
        let band = simpson(&integrand, lo, hi, 256);
        total += band;
        // Geometric tail estimate Σ band·qʲ from the observed decay ratio.
        let q = band / prev_band;
        tail = if band == 0.0 {
            0.0
        } else if q < 1.0 {
            band * q / (1.0 - q)
        } else {
            f64::INFINITY
        };
        prev_band = band;
        if k > 2 && tail <= 0.5 * tol {
            return Ok(total + tail);
        }
    }
    Err(Error::Contract(format!(
        "dini integral does not converge (estimated tail {tail:.3e})"
    )))
}

/// Exact `s`-space integrand `ω(e^{1-s})` per family, avoiding the `t`
/// underflow floor for the borderline families.
fn s_integrand(family: &ModulusFamily, s: f64) -> f64 {
    match family {
        ModulusFamily::Zero => 0.0,
        ModulusFamily::Hoelder { alpha, coeff } => coeff * (alpha * (1.0 - s)).exp().min(1.0),
        ModulusFamily::LogSquared => 1.0 / (s * s),
        ModulusFamily::Tabulated { .. } => eval_family(family, (1.0 - s).exp()),
    }
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * i as f64);
    }
    acc * h / 3.0
}

/// An exterior touching cone `{x : ⟨x - apex, axis⟩ > |x⊥| ω(|x⊥|)}` with a
/// validity radius. With ω ≡ 0 this is the open half-space on the `axis`
/// side of the apex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TouchingCone {
    apex: [f64; 3],
    axis: [f64; 3],
    modulus: DiniModulus,
    reach: f64,
}

impl TouchingCone {
    pub fn new(apex: [f64; 3], axis: [f64; 3], modulus: DiniModulus, reach: f64) -> Result<Self> {
        let axis = vec3::normalize(axis)
            .ok_or_else(|| Error::Contract("cone axis must be a nonzero vector".into()))?;
        if !(reach > 0.0) {
            return Err(Error::Contract("cone reach must be positive".into()));
        }
        Ok(TouchingCone { apex, axis, modulus, reach })
    }

    pub fn apex(&self) -> [f64; 3] {
        self.apex
    }

    pub fn axis(&self) -> [f64; 3] {
        self.axis
    }

    pub fn modulus(&self) -> &DiniModulus {
        &self.modulus
    }

    pub fn reach(&self) -> f64 {
        self.reach
    }

    /// Signed margin `⟨x - apex, axis⟩ - |x⊥| ω(|x⊥|)`; positive strictly
    /// inside the cone, zero on its boundary (and at the apex).
    pub fn signed_margin(&self, x: [f64; 3]) -> f64 {
        let d = vec3::sub(x, self.apex);
        let s = vec3::dot(d, self.axis);
        let perp = vec3::sub(d, vec3::scale(self.axis, s));
        let t = vec3::norm(perp);
        s - t * self.modulus.eval(t)
    }

    pub fn contains(&self, x: [f64; 3]) -> bool {
        self.signed_margin(x) > 0.0
    }
}

/// Mark the grid nodes strictly inside the cone.
pub fn cone_mask(cone: &TouchingCone, grid: &GridSpec) -> DomainMask {
    DomainMask::from_fn(*grid, |p| cone.contains(p))
}

/// Edge crossings of the level set `{f = level}`, linearly interpolated.
#[derive(Debug, Clone)]
pub struct LevelBoundary {
    pub level: f64,
    pub points: Vec<[f64; 3]>,
}

impl LevelBoundary {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Extract every lattice-edge crossing of `{f = level}`. A node exactly on
/// the level is emitted once as its own crossing point.
pub fn extract_level_boundary(f: &ScalarField, level: f64) -> LevelBoundary {
    let g = *f.grid();
    let strides = g.strides();
    let mut points = Vec::new();
    let mut node_hit = vec![false; g.len()];
    for (lin, idx) in g.nodes() {
        let va = f.get(lin) - level;
        if va == 0.0 && !node_hit[lin] {
            node_hit[lin] = true;
            points.push(g.pos(idx));
        }
        for a in 0..g.dim() {
            if idx[a] + 1 >= g.shape()[a] {
                continue;
            }
            let nb = lin + strides[a];
            let vb = f.get(nb) - level;
            if va * vb < 0.0 {
                let t = va / (va - vb);
                let mut p = g.pos(idx);
                p[a] += t * g.spacing();
                points.push(p);
            } else if va != 0.0 && vb == 0.0 && !node_hit[nb] {
                node_hit[nb] = true;
                points.push(g.pos(g.multi_index(nb)));
            }
        }
    }
    LevelBoundary { level, points }
}

/// One-sided and symmetric Hausdorff distances between boundary point sets.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HausdorffDistance {
    /// sup over a of inf over b of |a - b|.
    pub a_to_b: f64,
    pub b_to_a: f64,
    pub symmetric: f64,
}

pub fn hausdorff_distance(a: &LevelBoundary, b: &LevelBoundary) -> Result<HausdorffDistance> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Contract("hausdorff distance of an empty boundary".into()));
    }
    let one_sided = |from: &[[f64; 3]], to: &[[f64; 3]]| -> f64 {
        from.iter()
            .map(|&p| to.iter().map(|&q| vec3::dist(p, q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    let a_to_b = one_sided(&a.points, &b.points);
    let b_to_a = one_sided(&b.points, &a.points);
    Ok(HausdorffDistance { a_to_b, b_to_a, symmetric: a_to_b.max(b_to_a) })
}

/// Outcome of an exterior-touch verification.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TouchReport {
    pub passed: bool,
    /// Nodes inside both the cone and the super-level set deeper than the
    /// interface tolerance allows.
    pub overlap_nodes: usize,
    /// Largest cone margin among overlapping super-level nodes.
    pub worst_margin: f64,
    /// Distance from `y` to the nearest level crossing (`None` when the level
    /// set has no crossing within one cell of `y`: the plateau case).
    pub boundary_gap: Option<f64>,
    /// True when `y` sits on a level plateau and condition (ii) is vacuous.
    pub detached: bool,
}

/// Verify that the cone touches the super-level set of `y` from the exterior:
/// (i) the open cone avoids `{f > f(y)}` inside `B_reach(y)` up to an
/// interface layer of thickness `tol`, and (ii) `y` lies on the level
/// boundary (nearest crossing within one mesh width).
pub fn verify_exterior_touch(
    f: &ScalarField,
    y: &BasePoint,
    cone: &TouchingCone,
    tol: f64,
) -> Result<TouchReport> {
    if f.grid().dim() != 2 && f.grid().dim() != 3 {
        return Err(Error::Contract("unsupported dimension".into()));
    }
    if vec3::dist(cone.apex(), y.pos()) > tol {
        return Err(Error::Contract("cone apex must coincide with the base point".into()));
    }
    let g = f.grid();
    let h = g.spacing();
    let level = y.level();
    let ypos = y.pos();
    let reach = cone.reach();

    let mut overlap_nodes = 0usize;
    let mut worst_margin = 0.0f64;
    for (lin, idx) in g.nodes() {
        let p = g.pos(idx);
        if vec3::dist(p, ypos) >= reach {
            continue;
        }
        if f.get(lin) > level {
            let m = cone.signed_margin(p);
            if m > tol {
                overlap_nodes += 1;
                worst_margin = worst_margin.max(m);
            }
        }
    }

    // Nearest level crossing in the cells around y.
    let near = g.nearest_node(ypos);
    let strides = g.strides();
    let mut gap = f64::INFINITY;
    let radius = 2isize;
    // A crossing of the super-level boundary requires a strictly positive
    // side: edges with both endpoints on or below the level do not count, so
    // a base point on a level plateau registers as detached.
    let mut scan = |idx: [usize; 3]| {
        let lin = g.index(idx);
        let va = f.get(lin) - level;
        for a in 0..g.dim() {
            if idx[a] + 1 >= g.shape()[a] {
                continue;
            }
            let vb = f.get(lin + strides[a]) - level;
            if (va > 0.0 && vb <= 0.0) || (va <= 0.0 && vb > 0.0) {
                let t = if va == vb { 0.0 } else { va / (va - vb) };
                let mut p = g.pos(idx);
                p[a] += t * h;
                gap = gap.min(vec3::dist(p, ypos));
            }
        }
    };
    let lo = |c: usize| c.saturating_sub(radius as usize);
    let hi = |c: usize, n: usize| (c + radius as usize + 1).min(n);
    let shape = g.shape();
    for i0 in lo(near[0])..hi(near[0], shape[0]) {
        for i1 in lo(near[1])..hi(near[1], shape[1]) {
            if g.dim() == 2 {
                scan([i0, i1, 0]);
            } else {
                for i2 in lo(near[2])..hi(near[2], shape[2]) {
                    scan([i0, i1, i2]);
                }
            }
        }
    }
    let detached = !gap.is_finite() || gap > h * 1.0001;
    let boundary_gap = gap.is_finite().then_some(gap);

    Ok(TouchReport {
        passed: overlap_nodes == 0 && !detached,
        overlap_nodes,
        worst_margin,
        boundary_gap,
        detached,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::superlevel_mask;
    use approx::assert_relative_eq;

    #[test]
    fn dini_integral_closed_forms() {
        assert_eq!(DiniModulus::zero().dini_integral(), 0.0);
        let m = DiniModulus::hoelder(0.5, 1.0).unwrap();
        assert_relative_eq!(m.dini_integral(), 2.0, epsilon = 1e-6);
        let m = DiniModulus::hoelder(1.0, 3.0).unwrap();
        assert_relative_eq!(m.dini_integral(), 3.0, epsilon = 1e-6);
    }

    #[test]
    fn log_squared_quadrature_converges_to_one() {
        // ω(e^{1-s}) = s⁻², with ∫₁^∞ s⁻² ds = 1.
        let q = dini_quadrature_s(|s| 1.0 / (s * s), 1e-4).unwrap();
        // Cauchy check against a tighter tolerance.
        let q2 = dini_quadrature_s(|s| 1.0 / (s * s), 1e-8).unwrap();
        assert!((q - q2).abs() < 1e-4);
        assert_relative_eq!(q2, 1.0, epsilon = 1e-6);
        assert_relative_eq!(DiniModulus::log_squared().dini_integral(), 1.0);
    }

    #[test]
    fn non_dini_modulus_is_rejected_by_quadrature() {
        // The single-log modulus ω(t) = 1/log(e/t) is the classic non-Dini
        // example; its s-space integrand 1/s has divergent tail.
        let r = dini_quadrature_s(|s| 1.0 / s, 1e-6);
        assert!(r.is_err());
    }

    #[test]
    fn tabulated_modulus_certifies_a_finite_integral() {
        // Piecewise-linear interpolation through (0,0) is slope-bounded near
        // zero, so the integral is finite even for a steep first segment.
        let m = DiniModulus::tabulated(vec![0.0, 0.01, 1.0], vec![0.0, 0.3, 0.5]).unwrap();
        assert!(m.dini_integral().is_finite() && m.dini_integral() > 0.0);
        // Monotonicity violations are rejected at construction.
        assert!(DiniModulus::tabulated(vec![0.0, 0.5, 1.0], vec![0.0, 0.4, 0.3]).is_err());
    }

    #[test]
    fn cone_mask_half_space_and_hoelder() {
        let g = GridSpec::symmetric(2, 1.5, 0.25).unwrap();
        let half = TouchingCone::new([0.0; 3], [1.0, 0.0, 0.0], DiniModulus::zero(), 1.0).unwrap();
        let m = cone_mask(&half, &g);
        for (lin, idx) in g.nodes() {
            assert_eq!(m.is_inside(lin), g.pos(idx)[0] > 0.0);
        }

        // ω(t) = t: 45° opening. (1, 0.5) inside, (0.5, 1) outside.
        let c = TouchingCone::new(
            [0.0; 3],
            [1.0, 0.0, 0.0],
            DiniModulus::hoelder(1.0, 1.0).unwrap(),
            1.0,
        )
        .unwrap();
        assert!(c.contains([1.0, 0.5, 0.0]));
        assert!(!c.contains([0.5, 1.0, 0.0]));

        let mirror = TouchingCone::new([0.0; 3], [-1.0, 0.0, 0.0], DiniModulus::zero(), 1.0).unwrap();
        let mm = cone_mask(&mirror, &g);
        for (lin, idx) in g.nodes() {
            assert_eq!(mm.is_inside(lin), g.pos(idx)[0] < 0.0);
        }
    }

    #[test]
    fn cone_mask_lattice_rotation_equivariance() {
        // Rotating axis and node coordinates together by 90° preserves the
        // classification exactly.
        let g = GridSpec::symmetric(2, 1.0, 0.125).unwrap();
        let m = DiniModulus::hoelder(0.5, 0.7).unwrap();
        let c1 = TouchingCone::new([0.0; 3], [1.0, 0.0, 0.0], m.clone(), 1.0).unwrap();
        let c2 = TouchingCone::new([0.0; 3], [0.0, 1.0, 0.0], m, 1.0).unwrap();
        for (_, idx) in g.nodes() {
            let p = g.pos(idx);
            let rotated = [-p[1], p[0], 0.0];
            assert_eq!(c1.contains(p), c2.contains(rotated));
        }
    }

    #[test]
    fn level_boundary_linear_and_constant() {
        let g = GridSpec::symmetric(2, 1.0, 0.1).unwrap();
        let f = ScalarField::from_fn(g, |p| p[0]);
        let b = extract_level_boundary(&f, 0.0);
        assert!(!b.is_empty());
        for p in &b.points {
            assert!(p[0].abs() < 1e-12);
        }

        let c = ScalarField::constant(g, 2.0);
        assert!(extract_level_boundary(&c, 0.5).is_empty());
    }

    #[test]
    fn level_boundary_circle_within_h() {
        let g = GridSpec::symmetric(2, 1.0, 0.05).unwrap();
        let f = ScalarField::from_fn(g, |p| vec3::norm(p));
        let b = extract_level_boundary(&f, 0.5);
        assert!(!b.is_empty());
        for p in &b.points {
            assert!((vec3::norm(*p) - 0.5).abs() < 0.05, "point {p:?}");
        }
    }

    #[test]
    fn hausdorff_examples() {
        let g = GridSpec::symmetric(2, 1.0, 0.05).unwrap();
        let f = ScalarField::from_fn(g, |p| p[0]);
        let b0 = extract_level_boundary(&f, 0.0);
        let d = hausdorff_distance(&b0, &b0).unwrap();
        assert_eq!(d.symmetric, 0.0);

        let b1 = extract_level_boundary(&f, 0.1);
        let d = hausdorff_distance(&b0, &b1).unwrap();
        assert_relative_eq!(d.symmetric, 0.1, epsilon = 1e-9);

        let rad = ScalarField::from_fn(g, |p| vec3::norm(p));
        let c5 = extract_level_boundary(&rad, 0.5);
        let c6 = extract_level_boundary(&rad, 0.6);
        let d = hausdorff_distance(&c5, &c6).unwrap();
        assert!((d.symmetric - 0.1).abs() < 2.0 * 0.05, "gap {}", d.symmetric);

        let empty = LevelBoundary { level: 0.0, points: vec![] };
        assert!(hausdorff_distance(&empty, &b0).is_err());
    }

    #[test]
    fn hausdorff_triangle_inequality_on_fixtures() {
        let g = GridSpec::symmetric(2, 1.0, 0.05).unwrap();
        let rad = ScalarField::from_fn(g, |p| vec3::norm(p));
        let a = extract_level_boundary(&rad, 0.4);
        let b = extract_level_boundary(&rad, 0.55);
        let c = extract_level_boundary(&rad, 0.7);
        let dab = hausdorff_distance(&a, &b).unwrap().symmetric;
        let dbc = hausdorff_distance(&b, &c).unwrap().symmetric;
        let dac = hausdorff_distance(&a, &c).unwrap().symmetric;
        assert!(dac <= dab + dbc + 2.0 * 0.05);
    }

    #[test]
    fn exterior_touch_orientation() {
        let g = GridSpec::symmetric(2, 1.0, 0.05).unwrap();
        let f = ScalarField::from_fn(g, |p| p[0]);
        let y = BasePoint::in_field(&f, [0.0, 0.0, 0.0]).unwrap();

        let away = TouchingCone::new([0.0; 3], [-1.0, 0.0, 0.0], DiniModulus::zero(), 0.5).unwrap();
        let r = verify_exterior_touch(&f, &y, &away, 0.05).unwrap();
        assert!(r.passed, "{r:?}");

        let into = TouchingCone::new([0.0; 3], [1.0, 0.0, 0.0], DiniModulus::zero(), 0.5).unwrap();
        let r = verify_exterior_touch(&f, &y, &into, 0.05).unwrap();
        assert!(!r.passed);
        assert!(r.overlap_nodes > 0);

        // Sanity: the masks do not intersect for the exterior orientation.
        let sl = superlevel_mask(&f, &y);
        let cm = cone_mask(&away, &g);
        assert_eq!(sl.and(&cm).unwrap().count_inside(), 0);
    }

    #[test]
    fn exterior_touch_detached_on_plateau() {
        let g = GridSpec::symmetric(2, 1.0, 0.05).unwrap();
        // Field vanishing on |x| < 0.5: a point near the origin sits on a
        // plateau, far from its level boundary.
        let f = ScalarField::from_fn(g, |p| (vec3::norm(p) - 0.5f64).max(0.0));
        let y = BasePoint::in_field(&f, [0.01, 0.0, 0.0]).unwrap();
        let cone = TouchingCone::new([0.01, 0.0, 0.0], [-1.0, 0.0, 0.0], DiniModulus::zero(), 0.2).unwrap();
        let r = verify_exterior_touch(&f, &y, &cone, 0.05).unwrap();
        assert!(r.detached);
        assert!(!r.passed);
    }
}
