//! Field CSV files.
//!
//! ```text
//! # R=1 d=2 T=1 n_t=2 n_r=4 kind=control
//! v00,v01,v02,v03
//! v10,v11,v12,v13
//! v20,v21,v22,v23
//! ```
//!
//! Row `i` is time level `i` (there are `n_t + 1` rows), column `j` is radial
//! cell `j`. A single radial profile is written with `n_t=0` and one row.
//! Values are printed in shortest round-trip form, so save followed by load
//! reproduces every bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{FieldKind, RadialField, SpaceTimeField};
use crate::grid::{RadialGrid, TimeGrid};
use crate::scalar::Scalar;

/// Parsed first line of a field file.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldHeader {
    pub radius: f64,
    pub dim: usize,
    pub horizon: f64,
    pub n_steps: usize,
    pub n_cells: usize,
    pub kind: FieldKind,
}

impl FieldHeader {
    fn render(&self) -> String {
        format!(
            "# R={} d={} T={} n_t={} n_r={} kind={}",
            self.radius,
            self.dim,
            self.horizon,
            self.n_steps,
            self.n_cells,
            self.kind.as_str()
        )
    }

    fn parse(line: &str) -> Result<Self> {
        let err = |col: usize, msg: String| Error::Parse { row: 0, col, msg };
        let body = line
            .strip_prefix('#')
            .ok_or_else(|| err(0, "header must start with '#'".into()))?;
        let (mut radius, mut dim, mut horizon, mut n_steps, mut n_cells, mut kind) =
            (None, None, None, None, None, None);
        for (col, token) in body.split_whitespace().enumerate() {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| err(col, format!("expected key=value, got '{token}'")))?;
            let bad = |what: &str| err(col, format!("invalid {what} '{value}'"));
            match key {
                "R" => radius = Some(value.parse::<f64>().map_err(|_| bad("R"))?),
                "d" => dim = Some(value.parse::<usize>().map_err(|_| bad("d"))?),
                "T" => horizon = Some(value.parse::<f64>().map_err(|_| bad("T"))?),
                "n_t" => n_steps = Some(value.parse::<usize>().map_err(|_| bad("n_t"))?),
                "n_r" => n_cells = Some(value.parse::<usize>().map_err(|_| bad("n_r"))?),
                "kind" => kind = Some(FieldKind::parse(value).ok_or_else(|| bad("kind"))?),
                _ => return Err(err(col, format!("unknown header key '{key}'"))),
            }
        }
        let missing = |k: &str| err(0, format!("header lacks '{k}'"));
        Ok(Self {
            radius: radius.ok_or_else(|| missing("R"))?,
            dim: dim.ok_or_else(|| missing("d"))?,
            horizon: horizon.ok_or_else(|| missing("T"))?,
            n_steps: n_steps.ok_or_else(|| missing("n_t"))?,
            n_cells: n_cells.ok_or_else(|| missing("n_r"))?,
            kind: kind.ok_or_else(|| missing("kind"))?,
        })
    }
}

/// Parses a field file into its header and row-major values.
pub fn parse_field_text<T: Scalar>(text: &str) -> Result<(FieldHeader, Vec<T>)> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or(Error::Parse { row: 0, col: 0, msg: "empty file".into() })?;
    let header = FieldHeader::parse(first.trim())?;
    let n_rows = header.n_steps + 1;
    let mut values = Vec::with_capacity(n_rows * header.n_cells);
    let mut rows = 0;
    for (row, line) in lines {
        if rows == n_rows {
            return Err(Error::Parse {
                row,
                col: 0,
                msg: format!("more than n_t+1 = {n_rows} data rows"),
            });
        }
        let mut cols = 0;
        for (col, cell) in line.split(',').enumerate() {
            let x: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                row,
                col,
                msg: format!("non-numeric entry '{}'", cell.trim()),
            })?;
            if !x.is_finite() {
                return Err(Error::Parse { row, col, msg: format!("non-finite entry '{x}'") });
            }
            values.push(T::lit(x));
            cols += 1;
        }
        if cols != header.n_cells {
            return Err(Error::Parse {
                row,
                col: cols,
                msg: format!("expected n_r = {} columns, found {cols}", header.n_cells),
            });
        }
        rows += 1;
    }
    if rows != n_rows {
        return Err(Error::Parse {
            row: rows + 1,
            col: 0,
            msg: format!("expected n_t+1 = {n_rows} data rows, found {rows}"),
        });
    }
    Ok((header, values))
}

fn grid_of<T: Scalar>(h: &FieldHeader) -> Result<Arc<RadialGrid<T>>> {
    Ok(Arc::new(RadialGrid::new(T::lit(h.radius), h.dim, h.n_cells)?))
}

/// Reads a space-time field (`n_t >= 1`), validating kind invariants.
pub fn load_field<T: Scalar>(path: impl AsRef<Path>) -> Result<SpaceTimeField<T>> {
    let text = fs::read_to_string(path)?;
    field_from_text(&text)
}

pub fn field_from_text<T: Scalar>(text: &str) -> Result<SpaceTimeField<T>> {
    let (h, values) = parse_field_text::<T>(text)?;
    if h.n_steps == 0 {
        return Err(Error::Parse { row: 0, col: 0, msg: "space-time field needs n_t >= 1".into() });
    }
    let tgrid = Arc::new(TimeGrid::new(T::lit(h.horizon), h.n_steps)?);
    SpaceTimeField::new(grid_of(&h)?, tgrid, h.kind, values)
}

/// Reads a single radial profile (`n_t = 0`); returns it with its header.
pub fn load_radial<T: Scalar>(path: impl AsRef<Path>) -> Result<(RadialField<T>, FieldHeader)> {
    let text = fs::read_to_string(path)?;
    radial_from_text(&text)
}

pub fn radial_from_text<T: Scalar>(text: &str) -> Result<(RadialField<T>, FieldHeader)> {
    let (h, values) = parse_field_text::<T>(text)?;
    if h.n_steps != 0 {
        return Err(Error::Parse { row: 0, col: 0, msg: "radial profile needs n_t = 0".into() });
    }
    if h.kind == FieldKind::Control {
        if let Some(j) = values.iter().position(|&v| v < T::zero() || v > T::one()) {
            return Err(Error::Validation(format!("control value outside [0, 1] at cell {j}")));
        }
    }
    let field = RadialField::new(grid_of(&h)?, values)?;
    Ok((field, h))
}

fn push_row<T: Scalar>(out: &mut String, row: &[T]) {
    for (j, v) in row.iter().enumerate() {
        if j > 0 {
            out.push(',');
        }
        write!(out, "{}", v.as_f64()).unwrap();
    }
    out.push('\n');
}

pub fn field_to_text<T: Scalar>(field: &SpaceTimeField<T>) -> String {
    let grid = field.grid();
    let header = FieldHeader {
        radius: grid.radius().as_f64(),
        dim: grid.dim(),
        horizon: field.tgrid().horizon().as_f64(),
        n_steps: field.tgrid().n_steps(),
        n_cells: grid.n_cells(),
        kind: field.kind(),
    };
    let mut out = header.render();
    out.push('\n');
    for row in field.rows() {
        push_row(&mut out, row);
    }
    out
}

pub fn radial_to_text<T: Scalar>(field: &RadialField<T>, horizon: T, kind: FieldKind) -> String {
    let grid = field.grid();
    let header = FieldHeader {
        radius: grid.radius().as_f64(),
        dim: grid.dim(),
        horizon: horizon.as_f64(),
        n_steps: 0,
        n_cells: grid.n_cells(),
        kind,
    };
    let mut out = header.render();
    out.push('\n');
    push_row(&mut out, field.values());
    out
}

/// Writes `contents` to `path` through a sibling temporary file and a rename,
/// so a failed write never leaves a partial file at `path`.
pub fn write_atomic(path: impl AsRef<Path>, contents: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let name = path
        .file_name()
        .ok_or_else(|| Error::Domain(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    if let Err(e) = fs::write(&tmp, contents) {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::from(e)
    })
}

pub fn save_field<T: Scalar>(field: &SpaceTimeField<T>, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path, field_to_text(field).as_bytes())
}

pub fn save_radial<T: Scalar>(
    field: &RadialField<T>,
    horizon: T,
    kind: FieldKind,
    path: impl AsRef<Path>,
) -> Result<()> {
    write_atomic(path, radial_to_text(field, horizon, kind).as_bytes())
}
