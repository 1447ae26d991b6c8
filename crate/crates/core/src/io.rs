//! Plain-text formats for patterns, rasters and result tables.
//!
//! Pattern CSV:
//!
//! ```text
//! # window 0 1000 0 500
//! x,y
//! 12.5,301.25
//! ```
//!
//! Raster ASCII: a header line `ncols nrows x0 y0 dx dy` followed by `nrows`
//! lines of `ncols` whitespace-separated values. The first data line is row 0,
//! the southernmost row.
//!
//! Floats are written with Rust's shortest round-trip formatting, so reading
//! back a written file reproduces every value bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{CovariateField, Point, PointPattern, Window};

/// A CSV table with a header row.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn write_csv(table: &Table, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, table.to_csv()).map_err(|e| Error::io(path, e))
}

pub fn write_text(text: &str, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn pattern_to_string(pattern: &PointPattern, metadata: &[(String, String)]) -> String {
    let w = pattern.window();
    let mut out = String::new();
    let _ = writeln!(out, "# window {} {} {} {}", w.x_min(), w.x_max(), w.y_min(), w.y_max());
    for (k, v) in metadata {
        let _ = writeln!(out, "# {k} {v}");
    }
    out.push_str("x,y\n");
    for p in pattern.points() {
        let _ = writeln!(out, "{},{}", p.x, p.y);
    }
    out
}

pub fn write_pattern(pattern: &PointPattern, path: impl AsRef<Path>) -> Result<()> {
    write_pattern_with_metadata(pattern, &[], path)
}

/// Writes a pattern with extra `# key value` header lines (e.g. seed and
/// process parameters).
pub fn write_pattern_with_metadata(
    pattern: &PointPattern,
    metadata: &[(String, String)],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, pattern_to_string(pattern, metadata)).map_err(|e| Error::io(path, e))
}

pub fn parse_pattern(text: &str, path: &Path) -> Result<PointPattern> {
    let mut window = None;
    let mut header_seen = false;
    let mut points = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let mut it = comment.split_whitespace();
            if it.next() == Some("window") {
                let v: Vec<f64> = it
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::parse(path, format!("line {}: bad window", lineno + 1)))?;
                if v.len() != 4 {
                    return Err(Error::parse(
                        path,
                        format!("line {}: window needs 4 numbers", lineno + 1),
                    ));
                }
                window = Some(Window::new(v[0], v[1], v[2], v[3])?);
            }
            continue;
        }
        if !header_seen {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols != ["x", "y"] {
                return Err(Error::parse(path, format!("expected header `x,y`, found `{line}`")));
            }
            header_seen = true;
            continue;
        }
        let mut parts = line.split(',');
        let mut next = || -> Result<f64> {
            parts
                .next()
                .map(str::trim)
                .and_then(|t| t.parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(path, format!("line {}: non-numeric value", lineno + 1)))
        };
        let (x, y) = (next()?, next()?);
        if parts.next().is_some() {
            return Err(Error::parse(path, format!("line {}: expected 2 columns", lineno + 1)));
        }
        points.push(Point::new(x, y));
    }
    if !header_seen {
        return Err(Error::parse(path, "missing header `x,y`"));
    }
    let window = window.ok_or_else(|| Error::parse(path, "missing `# window` line"))?;
    PointPattern::new(points, window).map_err(|e| Error::parse(path, e.to_string()))
}

pub fn read_pattern(path: impl AsRef<Path>) -> Result<PointPattern> {
    let path = path.as_ref();
    parse_pattern(&read_text(path)?, path)
}

pub fn raster_to_string(field: &CovariateField) -> String {
    let (x0, y0) = field.origin();
    let (dx, dy) = field.cell_size();
    let mut out = String::new();
    let _ = writeln!(out, "{} {} {} {} {} {}", field.n_cols(), field.n_rows(), x0, y0, dx, dy);
    for r in 0..field.n_rows() {
        let line: Vec<String> = (0..field.n_cols()).map(|c| field.value(r, c).to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_raster(field: &CovariateField, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, raster_to_string(field)).map_err(|e| Error::io(path, e))
}

pub fn parse_raster(text: &str, name: &str, path: &Path) -> Result<CovariateField> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines.next().ok_or_else(|| Error::parse(path, "empty raster file"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 6 {
        return Err(Error::parse(path, "header must be `ncols nrows x0 y0 dx dy`"));
    }
    let int = |t: &str| t.parse::<usize>().map_err(|_| Error::parse(path, format!("bad integer `{t}`")));
    let num = |t: &str| t.parse::<f64>().map_err(|_| Error::parse(path, format!("bad number `{t}`")));
    let (n_cols, n_rows) = (int(h[0])?, int(h[1])?);
    let (x0, y0, dx, dy) = (num(h[2])?, num(h[3])?, num(h[4])?, num(h[5])?);
    let mut values = Vec::with_capacity(n_rows * n_cols);
    for r in 0..n_rows {
        let line = lines
            .next()
            .ok_or_else(|| Error::parse(path, format!("expected {n_rows} rows, found {r}")))?;
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|t| num(t))
            .collect::<Result<_>>()?;
        if row.len() != n_cols {
            return Err(Error::parse(
                path,
                format!("row {r}: expected {n_cols} values, found {}", row.len()),
            ));
        }
        values.extend(row);
    }
    if lines.next().is_some() {
        return Err(Error::parse(path, "trailing data after last row"));
    }
    CovariateField::new(name, n_rows, n_cols, (x0, y0), (dx, dy), values)
        .map_err(|e| Error::parse(path, e.to_string()))
}

/// Reads a raster; its covariate name is the file stem.
pub fn read_raster(path: impl AsRef<Path>) -> Result<CovariateField> {
    let path = path.as_ref();
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::parse(path, "cannot derive covariate name from file name"))?;
    parse_raster(&read_text(path)?, name, path)
}
