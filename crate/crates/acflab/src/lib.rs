//! acflab — a numerical laboratory for gradient estimates of subharmonic
//! functions built on the Alt–Caffarelli–Friedman (ACF) monotonicity formula.
//!
//! The lab works with grid-sampled scalar fields `u` satisfying a discrete
//! subsolution inequality `Δu ≥ -1` and studies the weighted energy
//!
//! ```text
//! I(r, y, v) = (1/r²) ∫_{B_r(y)} |∇v(x)|² / |x - y|^{n-2} dx
//! ```
//!
//! for `v = (u - u(y))⁺` and for admissible disjointly supported pairs, for
//! which the product `𝓘(r) = I(r, h₊)·I(r, h₋)` is monotone in `r`. The limit
//! `r → 0⁺` of `I` defines `|∇u(y)|²` up to the dimensional constant `c₀`
//! even where `u` is not differentiable, and the experiments in this crate
//! measure whether that gradient is upper semi-continuous when the
//! super-level sets of `u` are touched from outside by `C^{1,Dini}` cones.
//!
//! Module map:
//!
//! * [`grid`] — uniform lattices, scalar fields, masks, stencils.
//! * [`sfld`] — the `SFLD v1` text field format (exact round-trip).
//! * [`geometry`] — Dini moduli, touching cones, level boundaries.
//! * [`solve`] — masked SOR Dirichlet solver, capacitor/barrier fixtures.
//! * [`oracle`] — closed-form reference fields (Alt–Caffarelli cone, …).
//! * [`functional`] — the weighted energies, sweeps, fits, and the
//!   monotonicity-based gradient estimator.
//! * [`experiment`] — end-to-end upper-semicontinuity, barrier, blow-up and
//!   Dirichlet-boundary experiments with JSON reports.
//! * [`cli`] — the `acflab` batch front end.

pub mod cli;
pub mod experiment;
pub mod functional;
pub mod geometry;
pub mod grid;
pub mod oracle;
pub mod report;
pub mod sfld;
pub mod solve;

pub mod book;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Two lattice objects that must share a grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    /// An operation precondition does not hold.
    #[error("contract violation: {0}")]
    Contract(String),
    /// An ACF pair is not admissible (overlapping supports or nonzero center values).
    #[error("admissibility violation at node {node:?}: {detail}")]
    Admissibility { node: [usize; 3], detail: String },
    /// A closed-form oracle could not be constructed.
    #[error("oracle construction: {0}")]
    Oracle(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Small fixed-size vector helpers shared across modules. Coordinates are
/// always carried as `[f64; 3]`; in dimension 2 the third component is 0.
pub(crate) mod vec3 {
    pub fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    }

    pub fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
        [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
    }

    pub fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
        [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
    }

    pub fn scale(a: [f64; 3], s: f64) -> [f64; 3] {
        [a[0] * s, a[1] * s, a[2] * s]
    }

    pub fn norm(a: [f64; 3]) -> f64 {
        dot(a, a).sqrt()
    }

    pub fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
        norm(sub(a, b))
    }

    pub fn normalize(a: [f64; 3]) -> Option<[f64; 3]> {
        let n = norm(a);
        if n > 0.0 {
            Some(scale(a, 1.0 / n))
        } else {
            None
        }
    }
}
