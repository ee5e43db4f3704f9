//! The `SFLD v1` text format for scalar fields and masks.
//!
//! Layout:
//!
//! ```text
//! SFLD v1
//! dim 2
//! shape 257 257
//! spacing 0.0078125
//! origin -1 -1
//! <one node value per line, row-major, last axis fastest>
//! ```
//!
//! Values are written with Rust's shortest round-trip `f64` formatting, so a
//! write/read cycle reproduces the field bit for bit. Masks use the same
//! layout with `0`/`1` values.

use crate::grid::{DomainMask, GridSpec, ScalarField};
use crate::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

const MAGIC: &str = "SFLD v1";

fn header(grid: &GridSpec) -> String {
    let mut s = String::new();
    let dim = grid.dim();
    writeln!(s, "{MAGIC}").unwrap();
    writeln!(s, "dim {dim}").unwrap();
    write!(s, "shape").unwrap();
    for a in 0..dim {
        write!(s, " {}", grid.shape()[a]).unwrap();
    }
    s.push('\n');
    writeln!(s, "spacing {}", grid.spacing()).unwrap();
    write!(s, "origin").unwrap();
    for a in 0..dim {
        write!(s, " {}", grid.origin()[a]).unwrap();
    }
    s.push('\n');
    s
}

/// Serialize a field to SFLD v1 text.
pub fn field_to_string(f: &ScalarField) -> String {
    let mut s = header(f.grid());
    for v in f.values() {
        writeln!(s, "{v}").unwrap();
    }
    s
}

/// Serialize a mask to SFLD v1 text (0/1 values).
pub fn mask_to_string(m: &DomainMask) -> String {
    let mut s = header(m.grid());
    for &b in m.inside() {
        s.push(if b { '1' } else { '0' });
        s.push('\n');
    }
    s
}

pub fn write_field(f: &ScalarField, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, field_to_string(f))?;
    Ok(())
}

pub fn write_mask(m: &DomainMask, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, mask_to_string(m))?;
    Ok(())
}

fn parse_header<'a>(lines: &mut impl Iterator<Item = &'a str>) -> Result<GridSpec> {
    let magic = lines.next().ok_or_else(|| Error::Parse("empty SFLD file".into()))?;
    if magic.trim() != MAGIC {
        return Err(Error::Parse(format!("bad magic line {magic:?}, expected {MAGIC:?}")));
    }
    let mut dim = None;
    let mut shape: Option<Vec<usize>> = None;
    let mut spacing = None;
    let mut origin: Option<Vec<f64>> = None;
    for _ in 0..4 {
        let line = lines.next().ok_or_else(|| Error::Parse("truncated SFLD header".into()))?;
        let mut parts = line.split_whitespace();
        let key = parts.next().unwrap_or("");
        match key {
            "dim" => {
                dim = Some(
                    parts
                        .next()
                        .and_then(|t| t.parse::<usize>().ok())
                        .ok_or_else(|| Error::Parse("bad dim line".into()))?,
                )
            }
            "shape" => {
                shape = Some(
                    parts
                        .map(|t| t.parse::<usize>().map_err(|e| Error::Parse(format!("shape: {e}"))))
                        .collect::<Result<_>>()?,
                )
            }
            "spacing" => {
                spacing = Some(
                    parts
                        .next()
                        .and_then(|t| t.parse::<f64>().ok())
                        .ok_or_else(|| Error::Parse("bad spacing line".into()))?,
                )
            }
            "origin" => {
                origin = Some(
                    parts
                        .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("origin: {e}"))))
                        .collect::<Result<_>>()?,
                )
            }
            other => return Err(Error::Parse(format!("unexpected header key {other:?}"))),
        }
    }
    let dim = dim.ok_or_else(|| Error::Parse("missing dim".into()))?;
    let shape = shape.ok_or_else(|| Error::Parse("missing shape".into()))?;
    let spacing = spacing.ok_or_else(|| Error::Parse("missing spacing".into()))?;
    let origin = origin.ok_or_else(|| Error::Parse("missing origin".into()))?;
    GridSpec::new(dim, &shape, spacing, &origin)
}

/// Parse a field from SFLD v1 text.
pub fn field_from_str(text: &str) -> Result<ScalarField> {
    let mut lines = text.lines();
    let grid = parse_header(&mut lines)?;
    let mut values = Vec::with_capacity(grid.len());
    for line in lines {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        values.push(t.parse::<f64>().map_err(|e| Error::Parse(format!("value {t:?}: {e}")))?);
    }
    ScalarField::from_values(grid, values)
}

/// Parse a mask from SFLD v1 text.
pub fn mask_from_str(text: &str) -> Result<DomainMask> {
    let mut lines = text.lines();
    let grid = parse_header(&mut lines)?;
    let mut inside = Vec::with_capacity(grid.len());
    for line in lines {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        match t {
            "0" => inside.push(false),
            "1" => inside.push(true),
            other => return Err(Error::Parse(format!("mask value {other:?} is not 0/1"))),
        }
    }
    DomainMask::from_values(grid, inside)
}

pub fn read_field(path: impl AsRef<Path>) -> Result<ScalarField> {
    field_from_str(&std::fs::read_to_string(path)?)
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<DomainMask> {
    mask_from_str(&std::fs::read_to_string(path)?)
}
