//! CSV and JSON emission helpers for sweeps and experiment reports.

use crate::functional::RadiusSweep;
use crate::geometry::LevelBoundary;
use crate::Result;
use std::fmt::Write as _;
use std::path::Path;

/// Render a sweep as CSV with the fixed column set
/// `r, I, I_product, fit_residual`. Columns that were not computed stay
/// empty; the fit residual is attached to the first row only.
pub fn sweep_to_csv(sweep: &RadiusSweep) -> String {
    let mut s = String::from("r,I,I_product,fit_residual\n");
    for (k, &r) in sweep.radii.iter().enumerate() {
        let energy = sweep.energy.get(k).map(|v| v.to_string()).unwrap_or_default();
        let product = sweep.product.get(k).map(|v| v.to_string()).unwrap_or_default();
        let residual = if k == 0 {
            sweep.fit.map(|f| f.residual_rms.to_string()).unwrap_or_default()
        } else {
            String::new()
        };
        writeln!(s, "{r},{energy},{product},{residual}").unwrap();
    }
    s
}

pub fn write_sweep_csv(sweep: &RadiusSweep, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, sweep_to_csv(sweep))?;
    Ok(())
}

/// Level boundaries export as plain point lists.
pub fn boundary_to_csv(b: &LevelBoundary, dim: usize) -> String {
    let mut s = String::from(if dim == 2 { "x0,x1\n" } else { "x0,x1,x2\n" });
    for p in &b.points {
        if dim == 2 {
            writeln!(s, "{},{}", p[0], p[1]).unwrap();
        } else {
            writeln!(s, "{},{},{}", p[0], p[1], p[2]).unwrap();
        }
    }
    s
}

pub fn write_boundary_csv(b: &LevelBoundary, dim: usize, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, boundary_to_csv(b, dim))?;
    Ok(())
}

/// Serialize any report as pretty JSON with a trailing newline (the struct
/// field order is the schema; serde keeps it stable, so fixed inputs give
/// byte-identical files).
pub fn to_json_string<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| crate::Error::Parse(format!("json: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: serde::Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_json_string(value)?)?;
    Ok(())
}
