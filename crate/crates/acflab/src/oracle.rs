//! Closed-form and semi-analytic reference fields that the functionals and
//! experiments are validated against.
//!
//! The centerpiece is the Alt–Caffarelli cone: the Lipschitz harmonic
//! function
//!
//! ```text
//! u(x) = r · max(f(θ) / f'(θ₀), 0),    f(θ) = 2 + cos θ · log((1 - cos θ)/(1 + cos θ)),
//! ```
//!
//! with θ the polar angle of `x = r (cos φ sin θ, sin φ sin θ, cos θ)`. Here
//! `f` solves `(sin θ · f')' + 2 sin θ · f = 0` with `f'(π/2) = 0`, and θ₀ is
//! its unique zero between 0 and π/2. The function is harmonic in its
//! support, `|∇u| = 1` on the free boundary away from the origin, yet
//! `|∇u| ≤ 1 - ε` on interior sectors — the model of a gradient that is only
//! upper semi-continuous at a singular support point.

use crate::grid::{BasePoint, GridSpec, ScalarField};
use crate::{vec3, Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

/// The angular profile of the Alt–Caffarelli cone, with its root θ₀ and the
/// normalization slope f'(θ₀) resolved at construction.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AltCaffarelliProfile {
    theta0: f64,
    fprime_theta0: f64,
}

/// f(θ) = 2 + cos θ · log((1 - cos θ)/(1 + cos θ)).
pub fn ac_f(theta: f64) -> f64 {
    let c = theta.cos();
    2.0 + c * ((1.0 - c) / (1.0 + c)).ln()
}

/// Hand-differentiated closed form
/// f'(θ) = -sin θ · log((1 - cos θ)/(1 + cos θ)) + 2 cos θ / sin θ,
/// which vanishes at θ = π/2.
pub fn ac_fprime(theta: f64) -> f64 {
    let c = theta.cos();
    let s = theta.sin();
    -s * ((1.0 - c) / (1.0 + c)).ln() + 2.0 * c / s
}

impl AltCaffarelliProfile {
    /// Locate θ₀ by bisection on (0.01, π/2 - 0.01) and freeze f'(θ₀).
    pub fn build(root_tol: f64) -> Result<Self> {
        if !(root_tol > 0.0) {
            return Err(Error::Contract("root tolerance must be positive".into()));
        }
        let mut lo = 0.01;
        let mut hi = FRAC_PI_2 - 0.01;
        let (flo, fhi) = (ac_f(lo), ac_f(hi));
        if flo * fhi >= 0.0 {
            return Err(Error::Oracle(format!(
                "no sign change in bracket: f({lo}) = {flo}, f({hi}) = {fhi}"
            )));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let fm = ac_f(mid);
            if fm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if fm * flo < 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        let theta0 = 0.5 * (lo + hi);
        if ac_f(theta0).abs() > root_tol.max(1e-10) {
            return Err(Error::Oracle(format!(
                "root residual {} above tolerance",
                ac_f(theta0).abs()
            )));
        }
        Ok(AltCaffarelliProfile { theta0, fprime_theta0: ac_fprime(theta0) })
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn fprime_theta0(&self) -> f64 {
        self.fprime_theta0
    }

    /// Normalized profile g(θ) = max(f(θ), 0) / f'(θ₀).
    pub fn g(&self, theta: f64) -> f64 {
        (ac_f(theta).max(0.0)) / self.fprime_theta0
    }

    /// |∇u| as a function of the polar angle: √(g² + g'²) on the support
    /// {f > 0}, zero outside. Equals 1 on the free boundary cone θ = θ₀ and
    /// dips to 2/f'(θ₀) at the equator.
    pub fn gradient_magnitude_at_angle(&self, theta: f64) -> f64 {
        if ac_f(theta) <= 0.0 {
            return 0.0;
        }
        let g = ac_f(theta) / self.fprime_theta0;
        let gp = ac_fprime(theta) / self.fprime_theta0;
        (g * g + gp * gp).sqrt()
    }
}

/// Max residual of the profile ODE `(sin θ f')' + 2 sin θ f` over samples,
/// with the outer derivative taken by a five-point central difference at
/// step 1e-4, so the residual measures only the closed form.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OdeResidual {
    pub max_residual: f64,
    /// True when the sample list was empty (residual 0 by convention).
    pub empty_input: bool,
}

pub fn ac_ode_residual(samples: &[f64]) -> OdeResidual {
    if samples.is_empty() {
        return OdeResidual { max_residual: 0.0, empty_input: true };
    }
    let step = 1e-4;
    let sf = |t: f64| t.sin() * ac_fprime(t);
    let max_residual = samples
        .iter()
        .map(|&t| {
            let outer = (-sf(t + 2.0 * step) + 8.0 * sf(t + step) - 8.0 * sf(t - step)
                + sf(t - 2.0 * step))
                / (12.0 * step);
            (outer + 2.0 * t.sin() * ac_f(t)).abs()
        })
        .fold(0.0, f64::max);
    OdeResidual { max_residual, empty_input: false }
}

/// Closed-form reference fields with analytic gradients.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OracleField {
    /// `a · max(⟨x, axis⟩ - offset, 0)`. With the offset pushed outside the
    /// grid this doubles as a globally linear field.
    HalfPlaneLinear { a: f64, axis: [f64; 3], offset: f64 },
    /// The Alt–Caffarelli cone (dimension 3 only).
    AltCaffarelli,
    /// Capacitor potential of the ring `r_in < |x| < r_out`, extended by 0
    /// inside the inner sphere and harmonically beyond the outer one, so the
    /// global field is a nonnegative subharmonic function vanishing on the
    /// inner ball.
    AnnulusCapacitor { r_in: f64, r_out: f64 },
    /// Homogeneous harmonic function `ρ^κ sin(κ φ̃)` on the sector of the
    /// given opening (κ = π/opening), zero outside; dimension 2 only.
    HomogeneousCone2d { opening: f64, start_angle: f64 },
}

impl OracleField {
    pub fn half_plane(a: f64, axis: [f64; 3], offset: f64) -> Result<Self> {
        vec3::normalize(axis).ok_or_else(|| Error::Oracle("zero axis".into()))?;
        Ok(OracleField::HalfPlaneLinear { a, axis, offset })
    }

    /// Checks dimension compatibility.
    pub fn validate_dim(&self, dim: usize) -> Result<()> {
        match self {
            OracleField::AltCaffarelli if dim != 3 => {
                Err(Error::Oracle("the Alt-Caffarelli cone is a 3D field".into()))
            }
            OracleField::HomogeneousCone2d { .. } if dim != 2 => {
                Err(Error::Oracle("the homogeneous cone profile is a 2D field".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn value(&self, p: [f64; 3], dim: usize, ac: &AltCaffarelliProfile) -> f64 {
        match *self {
            OracleField::HalfPlaneLinear { a, axis, offset } => {
                let axis = vec3::normalize(axis).unwrap();
                a * (vec3::dot(p, axis) - offset).max(0.0)
            }
            OracleField::AltCaffarelli => {
                let r = vec3::norm(p);
                if r < 1e-300 {
                    return 0.0;
                }
                let theta = (p[2] / r).clamp(-1.0, 1.0).acos();
                r * ac.g(theta)
            }
            OracleField::AnnulusCapacitor { r_in, r_out } => {
                let rho = vec3::norm(p);
                if rho <= r_in {
                    return 0.0;
                }
                if dim == 2 {
                    (rho / r_in).ln() / (r_out / r_in).ln()
                } else {
                    (1.0 / r_in - 1.0 / rho) / (1.0 / r_in - 1.0 / r_out)
                }
            }
            OracleField::HomogeneousCone2d { opening, start_angle } => {
                let rho = (p[0] * p[0] + p[1] * p[1]).sqrt();
                if rho < 1e-300 {
                    return 0.0;
                }
                let kappa = PI / opening;
                let phi = (p[1].atan2(p[0]) - start_angle).rem_euclid(2.0 * PI);
                if phi > opening {
                    return 0.0;
                }
                rho.powf(kappa) * (kappa * phi).sin().max(0.0)
            }
        }
    }

    pub fn gradient(&self, p: [f64; 3], dim: usize, ac: &AltCaffarelliProfile) -> [f64; 3] {
        match *self {
            OracleField::HalfPlaneLinear { a, axis, offset } => {
                let axis = vec3::normalize(axis).unwrap();
                if vec3::dot(p, axis) - offset > 0.0 {
                    vec3::scale(axis, a)
                } else {
                    [0.0; 3]
                }
            }
            OracleField::AltCaffarelli => {
                let r = vec3::norm(p);
                if r < 1e-12 {
                    return [0.0; 3];
                }
                let theta = (p[2] / r).clamp(-1.0, 1.0).acos();
                if ac_f(theta) <= 0.0 {
                    return [0.0; 3];
                }
                let g = ac_f(theta) / ac.fprime_theta0;
                let gp = ac_fprime(theta) / ac.fprime_theta0;
                let s = theta.sin();
                if s < 1e-12 {
                    return [0.0; 3];
                }
                let phi = p[1].atan2(p[0]);
                let er = vec3::scale(p, 1.0 / r);
                let etheta = [theta.cos() * phi.cos(), theta.cos() * phi.sin(), -s];
                vec3::add(vec3::scale(er, g), vec3::scale(etheta, gp))
            }
            OracleField::AnnulusCapacitor { r_in, r_out } => {
                let rho = vec3::norm(p);
                if rho <= r_in {
                    return [0.0; 3];
                }
                let slope = if dim == 2 {
                    1.0 / (rho * (r_out / r_in).ln())
                } else {
                    (1.0 / (rho * rho)) / (1.0 / r_in - 1.0 / r_out)
                };
                vec3::scale(p, slope / rho)
            }
            OracleField::HomogeneousCone2d { opening, start_angle } => {
                let rho = (p[0] * p[0] + p[1] * p[1]).sqrt();
                if rho < 1e-12 {
                    return [0.0; 3];
                }
                let kappa = PI / opening;
                let phi_abs = p[1].atan2(p[0]);
                let phi = (phi_abs - start_angle).rem_euclid(2.0 * PI);
                if phi > opening {
                    return [0.0; 3];
                }
                let amp = kappa * rho.powf(kappa - 1.0);
                let er = [phi_abs.cos(), phi_abs.sin(), 0.0];
                let ephi = [-phi_abs.sin(), phi_abs.cos(), 0.0];
                vec3::add(
                    vec3::scale(er, amp * (kappa * phi).sin()),
                    vec3::scale(ephi, amp * (kappa * phi).cos()),
                )
            }
        }
    }
}

/// A sampled oracle with its analytic gradient at every node.
pub struct OracleSample {
    pub field: ScalarField,
    pub gradient: Vec<[f64; 3]>,
    pub profile: AltCaffarelliProfile,
}

/// Sample the oracle and its analytic gradient on the grid.
pub fn oracle_sample(oracle: &OracleField, grid: &GridSpec) -> Result<OracleSample> {
    oracle.validate_dim(grid.dim())?;
    let profile = AltCaffarelliProfile::build(1e-10)?;
    let field = ScalarField::from_fn(*grid, |p| oracle.value(p, grid.dim(), &profile));
    let gradient = grid
        .nodes()
        .map(|(_, idx)| oracle.gradient(grid.pos(idx), grid.dim(), &profile))
        .collect();
    Ok(OracleSample { field, gradient, profile })
}

/// Reference window used by blow-up rescaling: `[-1.25, 1.25]^dim`.
pub fn blowup_window(dim: usize) -> GridSpec {
    let nodes = if dim == 2 { 101 } else { 51 };
    let shape = vec![nodes; dim];
    let origin = vec![-1.25; dim];
    GridSpec::new(dim, &shape, 2.5 / (nodes - 1) as f64, &origin).unwrap()
}

/// Result of a blow-up rescale `u_r(x) = u(y⁰ + r x) / r` on the reference
/// window, with multilinear interpolation of the source field.
pub struct BlowupField {
    pub field: ScalarField,
    /// False when `u(y⁰)` is not ≈ 0, i.e. the caller did not subtract the
    /// level first and the rescale diverges as 1/r.
    pub normalized: bool,
}

pub fn blowup_rescale(u: &ScalarField, y0: &BasePoint, r: f64) -> Result<BlowupField> {
    blowup_rescale_into(u, y0, r, &blowup_window(u.grid().dim()))
}

pub fn blowup_rescale_into(
    u: &ScalarField,
    y0: &BasePoint,
    r: f64,
    window: &GridSpec,
) -> Result<BlowupField> {
    if !(r > 0.0) {
        return Err(Error::Contract("blow-up radius must be positive".into()));
    }
    if window.dim() != u.grid().dim() {
        return Err(Error::GridMismatch("blow-up window dimension".into()));
    }
    let half = window.max_corner()[0];
    if u.grid().boundary_distance(y0.pos()) <= r * half {
        return Err(Error::Contract(format!(
            "blow-up window of radius {} exits the grid around {:?}",
            r * half,
            y0.pos()
        )));
    }
    let scale = u.interpolate(y0.pos());
    let center = y0.pos();
    let field = ScalarField::from_fn(*window, |x| {
        u.interpolate(vec3::add(center, vec3::scale(x, r))) / r
    });
    let span = u.max_value() - u.min_value();
    let normalized = scale.abs() <= 1e-12 * span.max(1.0);
    Ok(BlowupField { field, normalized })
}
