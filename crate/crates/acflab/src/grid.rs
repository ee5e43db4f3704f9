//! Uniform Cartesian lattices, scalar fields, domain masks and the discrete
//! differential stencils used by every other module.
//!
//! Fields are node-centered: node `(i₀, i₁, i₂)` sits at
//! `origin + h·(i₀, i₁, i₂)` and owns a cell of volume `hⁿ`. Values are
//! stored row-major with the last axis fastest.

use crate::{vec3, Error, Result};
use serde::{Deserialize, Serialize};

/// Geometry of a uniform lattice in dimension 2 or 3.
///
/// The third axis is a placeholder (`shape[2] == 1`, `origin[2] == 0`) in
/// dimension 2 so that all index arithmetic is dimension-agnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    shape: [usize; 3],
    spacing: f64,
    origin: [f64; 3],
}

impl GridSpec {
    /// A grid with explicit per-axis node counts.
    pub fn new(dim: usize, shape_used: &[usize], spacing: f64, origin_used: &[f64]) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::Contract(format!("dimension must be 2 or 3, got {dim}")));
        }
        if shape_used.len() != dim || origin_used.len() != dim {
            return Err(Error::Contract("shape/origin length must equal dim".into()));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::Contract(format!("spacing must be positive, got {spacing}")));
        }
        let mut shape = [1usize; 3];
        let mut origin = [0.0f64; 3];
        for a in 0..dim {
            if shape_used[a] < 3 {
                return Err(Error::Contract(format!(
                    "shape[{a}] = {} but stencils need at least 3 nodes per axis",
                    shape_used[a]
                )));
            }
            shape[a] = shape_used[a];
            origin[a] = origin_used[a];
        }
        Ok(GridSpec { dim, shape, spacing, origin })
    }

    /// A symmetric box `[-half, half]^dim` with the given mesh width. The
    /// node count per axis is rounded so the box is covered exactly.
    pub fn symmetric(dim: usize, half_extent: f64, spacing: f64) -> Result<Self> {
        if !(half_extent > 0.0) {
            return Err(Error::Contract("half_extent must be positive".into()));
        }
        let n = (2.0 * half_extent / spacing).round() as usize + 1;
        let shape = vec![n; dim];
        let origin = vec![-half_extent; dim];
        GridSpec::new(dim, &shape, spacing, &origin)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    /// Total node count.
    pub fn len(&self) -> usize {
        self.shape[0] * self.shape[1] * self.shape[2]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major strides (last axis fastest).
    pub fn strides(&self) -> [usize; 3] {
        [self.shape[1] * self.shape[2], self.shape[2], 1]
    }

    pub fn index(&self, idx: [usize; 3]) -> usize {
        (idx[0] * self.shape[1] + idx[1]) * self.shape[2] + idx[2]
    }

    pub fn multi_index(&self, lin: usize) -> [usize; 3] {
        let i2 = lin % self.shape[2];
        let rest = lin / self.shape[2];
        let i1 = rest % self.shape[1];
        let i0 = rest / self.shape[1];
        [i0, i1, i2]
    }

    /// Physical position of a node.
    pub fn pos(&self, idx: [usize; 3]) -> [f64; 3] {
        let mut p = [0.0; 3];
        for a in 0..3 {
            p[a] = self.origin[a] + self.spacing * idx[a] as f64;
        }
        p
    }

    pub fn pos_lin(&self, lin: usize) -> [f64; 3] {
        self.pos(self.multi_index(lin))
    }

    /// Coordinates of the far corner (maximum along every axis).
    pub fn max_corner(&self) -> [f64; 3] {
        let mut c = self.origin;
        for a in 0..self.dim {
            c[a] += self.spacing * (self.shape[a] - 1) as f64;
        }
        c
    }

    /// Whether `p` lies strictly inside the physical extent.
    pub fn contains(&self, p: [f64; 3]) -> bool {
        let hi = self.max_corner();
        for a in 0..self.dim {
            if !(p[a] > self.origin[a] && p[a] < hi[a]) {
                return false;
            }
        }
        true
    }

    /// Distance from `p` to the boundary of the extent (negative outside).
    pub fn boundary_distance(&self, p: [f64; 3]) -> f64 {
        let hi = self.max_corner();
        let mut d = f64::INFINITY;
        for a in 0..self.dim {
            d = d.min(p[a] - self.origin[a]).min(hi[a] - p[a]);
        }
        d
    }

    /// Multi-index of the node nearest to `p` (clamped to the lattice).
    pub fn nearest_node(&self, p: [f64; 3]) -> [usize; 3] {
        let mut idx = [0usize; 3];
        for a in 0..self.dim {
            let t = ((p[a] - self.origin[a]) / self.spacing).round();
            idx[a] = t.clamp(0.0, (self.shape[a] - 1) as f64) as usize;
        }
        idx
    }

    /// Whether the node lies on the lattice boundary (any used axis extreme).
    pub fn on_lattice_boundary(&self, idx: [usize; 3]) -> bool {
        for a in 0..self.dim {
            if idx[a] == 0 || idx[a] + 1 == self.shape[a] {
                return true;
            }
        }
        false
    }

    /// Iterate all nodes as `(linear, multi)` pairs.
    pub fn nodes(&self) -> impl Iterator<Item = (usize, [usize; 3])> + '_ {
        let g = *self;
        (0..g.len()).map(move |lin| (lin, g.multi_index(lin)))
    }

    fn same_as(&self, other: &GridSpec) -> bool {
        self == other
    }
}

/// A real-valued function sampled on every lattice node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn constant(grid: GridSpec, value: f64) -> Self {
        ScalarField { values: vec![value; grid.len()], grid }
    }

    /// Sample `f` at every node position.
    pub fn from_fn(grid: GridSpec, mut f: impl FnMut([f64; 3]) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for (_, idx) in grid.nodes() {
            values.push(f(grid.pos(idx)));
        }
        ScalarField { grid, values }
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Contract(format!(
                "value count {} does not match grid node count {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Contract(format!("non-finite field value {v}")));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, lin: usize) -> f64 {
        self.values[lin]
    }

    pub fn set(&mut self, lin: usize, v: f64) {
        self.values[lin] = v;
    }

    /// Multilinear interpolation at a point inside the extent. Clamps the
    /// base cell to the lattice, so evaluation at the extent boundary is safe.
    pub fn interpolate(&self, p: [f64; 3]) -> f64 {
        let g = &self.grid;
        let h = g.spacing;
        let mut base = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for a in 0..g.dim {
            let t = (p[a] - g.origin[a]) / h;
            let mut i = t.floor() as isize;
            i = i.clamp(0, g.shape[a] as isize - 2);
            base[a] = i as usize;
            frac[a] = (t - i as f64).clamp(0.0, 1.0);
        }
        let corners = 1usize << g.dim;
        let mut acc = 0.0;
        for c in 0..corners {
            let mut idx = base;
            let mut w = 1.0;
            for a in 0..g.dim {
                if c >> a & 1 == 1 {
                    idx[a] += 1;
                    w *= frac[a];
                } else {
                    w *= 1.0 - frac[a];
                }
            }
            acc += w * self.values[g.index(idx)];
        }
        acc
    }

    /// Apply `f` nodewise, returning a new field.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// A boolean lattice marking a computational domain.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainMask {
    grid: GridSpec,
    inside: Vec<bool>,
}

impl DomainMask {
    pub fn full(grid: GridSpec) -> Self {
        DomainMask { inside: vec![true; grid.len()], grid }
    }

    pub fn empty(grid: GridSpec) -> Self {
        DomainMask { inside: vec![false; grid.len()], grid }
    }

    pub fn from_fn(grid: GridSpec, mut f: impl FnMut([f64; 3]) -> bool) -> Self {
        let mut inside = Vec::with_capacity(grid.len());
        for (_, idx) in grid.nodes() {
            inside.push(f(grid.pos(idx)));
        }
        DomainMask { grid, inside }
    }

    pub fn from_values(grid: GridSpec, inside: Vec<bool>) -> Result<Self> {
        if inside.len() != grid.len() {
            return Err(Error::Contract("mask length does not match grid".into()));
        }
        Ok(DomainMask { grid, inside })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn is_inside(&self, lin: usize) -> bool {
        self.inside[lin]
    }

    pub fn set(&mut self, lin: usize, v: bool) {
        self.inside[lin] = v;
    }

    pub fn inside(&self) -> &[bool] {
        &self.inside
    }

    pub fn count_inside(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    /// Nodewise intersection.
    pub fn and(&self, other: &DomainMask) -> Result<DomainMask> {
        check_same_grid(&self.grid, &other.grid)?;
        let inside = self.inside.iter().zip(&other.inside).map(|(&a, &b)| a && b).collect();
        Ok(DomainMask { grid: self.grid, inside })
    }

    /// Nodewise complement.
    pub fn not(&self) -> DomainMask {
        DomainMask { grid: self.grid, inside: self.inside.iter().map(|&b| !b).collect() }
    }
}

fn check_same_grid(a: &GridSpec, b: &GridSpec) -> Result<()> {
    if a.same_as(b) {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!("{a:?} vs {b:?}")))
    }
}

/// A distinguished point `y` together with the field level `u(y)` through it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasePoint {
    pos: [f64; 3],
    level: f64,
    nearest: [usize; 3],
}

impl BasePoint {
    /// Base point whose level is read off the field by multilinear
    /// interpolation. Errors if `pos` is not strictly inside the extent.
    pub fn in_field(f: &ScalarField, pos: [f64; 3]) -> Result<Self> {
        let level = f.interpolate(pos);
        Self::with_level(f.grid(), pos, level)
    }

    /// Base point with an explicitly prescribed level (used when the level
    /// is known exactly, e.g. 0 on a free boundary).
    pub fn with_level(grid: &GridSpec, pos: [f64; 3], level: f64) -> Result<Self> {
        if !grid.contains(pos) {
            return Err(Error::Contract(format!(
                "base point {pos:?} is not strictly inside the grid extent"
            )));
        }
        Ok(BasePoint { pos, level, nearest: grid.nearest_node(pos) })
    }

    pub fn pos(&self) -> [f64; 3] {
        self.pos
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn nearest_node(&self) -> [usize; 3] {
        self.nearest
    }
}

/// Per-node gradient vectors with validity flags.
///
/// A component is centered where both axis neighbors lie in the mask,
/// one-sided (first order) where only one does. A node is flagged undefined
/// if it is outside the mask or some axis has no inside neighbor at all.
#[derive(Debug, Clone)]
pub struct VectorField {
    grid: GridSpec,
    vectors: Vec<[f64; 3]>,
    defined: Vec<bool>,
}

impl VectorField {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn vector(&self, lin: usize) -> [f64; 3] {
        self.vectors[lin]
    }

    pub fn is_defined(&self, lin: usize) -> bool {
        self.defined[lin]
    }

    pub fn magnitude(&self, lin: usize) -> f64 {
        vec3::norm(self.vectors[lin])
    }
}

/// Centered/one-sided difference gradient of `f` restricted to `mask`.
pub fn discrete_gradient(f: &ScalarField, mask: &DomainMask) -> Result<VectorField> {
    check_same_grid(f.grid(), mask.grid())?;
    let g = *f.grid();
    let strides = g.strides();
    let h = g.spacing();
    let n = g.len();
    let mut vectors = vec![[0.0; 3]; n];
    let mut defined = vec![false; n];
    for (lin, idx) in g.nodes() {
        if !mask.is_inside(lin) {
            continue;
        }
        let mut ok = true;
        let mut v = [0.0; 3];
        for a in 0..g.dim() {
            let has_lo = idx[a] > 0 && mask.is_inside(lin - strides[a]);
            let has_hi = idx[a] + 1 < g.shape()[a] && mask.is_inside(lin + strides[a]);
            v[a] = match (has_lo, has_hi) {
                (true, true) => (f.get(lin + strides[a]) - f.get(lin - strides[a])) / (2.0 * h),
                (false, true) => (f.get(lin + strides[a]) - f.get(lin)) / h,
                (true, false) => (f.get(lin) - f.get(lin - strides[a])) / h,
                (false, false) => {
                    ok = false;
                    0.0
                }
            };
        }
        vectors[lin] = v;
        defined[lin] = ok;
    }
    Ok(VectorField { grid: g, vectors, defined })
}

/// Standard `2n+1`-point Laplacian at interior lattice nodes. The returned
/// mask flags where the value is defined (lattice boundary nodes are not).
pub fn discrete_laplacian(f: &ScalarField) -> (ScalarField, DomainMask) {
    let g = *f.grid();
    let strides = g.strides();
    let h2 = g.spacing() * g.spacing();
    let mut values = vec![0.0; g.len()];
    let mut defined = vec![false; g.len()];
    for (lin, idx) in g.nodes() {
        if g.on_lattice_boundary(idx) {
            continue;
        }
        let mut acc = 0.0;
        for a in 0..g.dim() {
            acc += f.get(lin + strides[a]) + f.get(lin - strides[a]);
        }
        values[lin] = (acc - 2.0 * g.dim() as f64 * f.get(lin)) / h2;
        defined[lin] = true;
    }
    (
        ScalarField { grid: g, values },
        DomainMask { grid: g, inside: defined },
    )
}

/// Strict super-level set `{x : f(x) > f(y)}` as a mask. Nodes exactly on the
/// level (including ties at `y` itself) are excluded.
pub fn superlevel_mask(f: &ScalarField, y: &BasePoint) -> DomainMask {
    let level = y.level();
    DomainMask {
        grid: *f.grid(),
        inside: f.values().iter().map(|&v| v > level).collect(),
    }
}

/// The shifted positive part `max(f - f(y), 0)`; vanishes outside the strict
/// super-level set of `y`.
pub fn positive_part_shift(f: &ScalarField, y: &BasePoint) -> ScalarField {
    let level = y.level();
    f.map(|v| (v - level).max(0.0))
}

/// Outcome of a discrete subsolution check `Δf ≥ lower_bound - tol`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SubsolutionCheck {
    pub passed: bool,
    /// Minimum of the discrete Laplacian over interior nodes.
    pub worst_value: f64,
    /// Multi-index of the minimizing node.
    pub worst_node: [usize; 3],
}

/// Verify `Δf ≥ lower_bound - tol` at every interior lattice node.
pub fn check_subsolution(f: &ScalarField, lower_bound: f64, tol: f64) -> Result<SubsolutionCheck> {
    if tol < 0.0 {
        return Err(Error::Contract("subsolution tolerance must be nonnegative".into()));
    }
    let (lap, defined) = discrete_laplacian(f);
    let mut worst_value = f64::INFINITY;
    let mut worst_node = [0usize; 3];
    for (lin, idx) in f.grid().nodes() {
        if defined.is_inside(lin) && lap.get(lin) < worst_value {
            worst_value = lap.get(lin);
            worst_node = idx;
        }
    }
    Ok(SubsolutionCheck {
        passed: worst_value >= lower_bound - tol,
        worst_value,
        worst_node,
    })
}
