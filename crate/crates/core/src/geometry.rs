//! Planar domain types: observation windows, point patterns, covariate
//! rasters and the log-linear model specification that turns rasters into
//! design rows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack used when comparing raster extents with window edges.
const EDGE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist2(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

/// Closed axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Window {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let finite = [x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidWindow("non-finite coordinate".into()));
        }
        if !(x_max > x_min && y_max > y_min) {
            return Err(Error::InvalidWindow(format!(
                "[{x_min}, {x_max}] x [{y_min}, {y_max}] has no interior"
            )));
        }
        Ok(Window {
            x_min,
            x_max,
            y_min,
            y_max,
        })
    }

    pub fn unit() -> Self {
        Window::new(0.0, 1.0, 0.0, 1.0).expect("unit square")
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    pub fn y_min(&self) -> f64 {
        self.y_min
    }
    pub fn y_max(&self) -> f64 {
        self.y_max
    }
    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }
    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point {
        Point::new(
            0.5 * (self.x_min + self.x_max),
            0.5 * (self.y_min + self.y_max),
        )
    }

    /// Boundary points are inside.
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn dilate(&self, margin: f64) -> Result<Window> {
        Window::new(
            self.x_min - margin,
            self.x_max + margin,
            self.y_min - margin,
            self.y_max + margin,
        )
    }

    /// Whether `self` contains `other`, up to a relative slack on the edges.
    pub fn covers(&self, other: &Window) -> bool {
        let sx = EDGE_SLACK * self.width().max(other.width());
        let sy = EDGE_SLACK * self.height().max(other.height());
        self.x_min <= other.x_min + sx
            && self.x_max >= other.x_max - sx
            && self.y_min <= other.y_min + sy
            && self.y_max >= other.y_max - sy
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointPattern {
    points: Vec<Point>,
    window: Window,
}

impl PointPattern {
    pub fn new(points: Vec<Point>, window: Window) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| !window.contains(**p)) {
            return Err(Error::PointOutsideWindow { x: p.x, y: p.y });
        }
        Ok(PointPattern { points, window })
    }

    pub fn empty(window: Window) -> Self {
        PointPattern {
            points: Vec::new(),
            window,
        }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// A raster covariate, constant on each cell. Row 0 is the southernmost row;
/// values are stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariateField {
    name: String,
    n_rows: usize,
    n_cols: usize,
    x0: f64,
    y0: f64,
    dx: f64,
    dy: f64,
    values: Vec<f64>,
}

impl CovariateField {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        n_rows: usize,
        n_cols: usize,
        origin: (f64, f64),
        cell: (f64, f64),
        values: Vec<f64>,
    ) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::InvalidRaster("empty name".into()));
        }
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::InvalidRaster(format!("`{name}`: zero rows or columns")));
        }
        if !(cell.0 > 0.0 && cell.1 > 0.0 && cell.0.is_finite() && cell.1.is_finite()) {
            return Err(Error::InvalidRaster(format!("`{name}`: cell sizes must be positive")));
        }
        if !(origin.0.is_finite() && origin.1.is_finite()) {
            return Err(Error::InvalidRaster(format!("`{name}`: non-finite origin")));
        }
        if values.len() != n_rows * n_cols {
            return Err(Error::InvalidRaster(format!(
                "`{name}`: expected {} values, got {}",
                n_rows * n_cols,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidRaster(format!("`{name}`: non-finite cell value")));
        }
        Ok(CovariateField {
            name,
            n_rows,
            n_cols,
            x0: origin.0,
            y0: origin.1,
            dx: cell.0,
            dy: cell.1,
            values,
        })
    }

    /// Single-cell raster covering `window` with a constant value.
    pub fn constant(name: impl Into<String>, window: &Window, value: f64) -> Result<Self> {
        CovariateField::new(
            name,
            1,
            1,
            (window.x_min(), window.y_min()),
            (window.width(), window.height()),
            vec![value],
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }
    pub fn origin(&self) -> (f64, f64) {
        (self.x0, self.y0)
    }
    pub fn cell_size(&self) -> (f64, f64) {
        (self.dx, self.dy)
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols + col]
    }

    pub fn extent(&self) -> Window {
        Window::new(
            self.x0,
            self.x0 + self.n_cols as f64 * self.dx,
            self.y0,
            self.y0 + self.n_rows as f64 * self.dy,
        )
        .expect("positive cell sizes")
    }

    pub fn covers(&self, window: &Window) -> bool {
        self.extent().covers(window)
    }

    /// `(row, col)` of the cell containing `u`. The far edges of the raster
    /// belong to the last row/column.
    pub fn cell_of(&self, u: Point) -> Option<(usize, usize)> {
        let col = locate(u.x, self.x0, self.dx, self.n_cols)?;
        let row = locate(u.y, self.y0, self.dy, self.n_rows)?;
        Some((row, col))
    }

    pub fn lookup(&self, u: Point) -> Result<f64> {
        self.cell_of(u)
            .map(|(r, c)| self.value(r, c))
            .ok_or_else(|| Error::OutsideRaster {
                name: self.name.clone(),
                x: u.x,
                y: u.y,
            })
    }

    /// Same values with the extent mapped affinely onto `window`.
    pub fn rescaled_to(&self, window: &Window) -> CovariateField {
        CovariateField {
            x0: window.x_min(),
            y0: window.y_min(),
            dx: window.width() / self.n_cols as f64,
            dy: window.height() / self.n_rows as f64,
            ..self.clone()
        }
    }

    /// Cell values centered and scaled to unit variance (unweighted over cells).
    pub fn standardized(&self) -> CovariateField {
        let n = self.values.len() as f64;
        let mean = self.values.iter().sum::<f64>() / n;
        let var = self.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
        CovariateField {
            values: self.values.iter().map(|v| (v - mean) / sd).collect(),
            ..self.clone()
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> CovariateField {
        self.name = name.into();
        self
    }

    /// Interior cell edges strictly inside `(lo, hi)` along one axis.
    fn breaks(&self, axis_x: bool, lo: f64, hi: f64) -> Vec<f64> {
        let (o, d, n) = if axis_x {
            (self.x0, self.dx, self.n_cols)
        } else {
            (self.y0, self.dy, self.n_rows)
        };
        (1..n)
            .map(|k| o + k as f64 * d)
            .filter(|&e| e > lo && e < hi)
            .collect()
    }
}

fn locate(v: f64, origin: f64, step: f64, n: usize) -> Option<usize> {
    let t = (v - origin) / step;
    if !(t >= -EDGE_SLACK * n as f64 && t <= n as f64 * (1.0 + EDGE_SLACK)) {
        return None;
    }
    let k = t.floor();
    if k < 0.0 {
        Some(0)
    } else {
        Some((k as usize).min(n - 1))
    }
}

/// Per-column affine standardization `(z - mean) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl ColumnStats {
    pub fn identity(p: usize) -> Self {
        ColumnStats {
            mean: vec![0.0; p],
            scale: vec![1.0; p],
        }
    }

    pub fn apply(&self, row: &mut [f64]) {
        for ((z, m), s) in row.iter_mut().zip(&self.mean).zip(&self.scale) {
            *z = (*z - m) / s;
        }
    }
}

/// Which covariates enter the design and in what order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub covariates: Vec<String>,
    pub interactions: Vec<(String, String)>,
    pub include_intercept: bool,
    pub standardize: bool,
}

impl ModelSpec {
    pub fn new<S: Into<String>>(covariates: impl IntoIterator<Item = S>) -> Self {
        ModelSpec {
            covariates: covariates.into_iter().map(Into::into).collect(),
            interactions: Vec::new(),
            include_intercept: true,
            standardize: false,
        }
    }

    pub fn intercept_only() -> Self {
        ModelSpec::new(Vec::<String>::new())
    }

    pub fn with_interaction(mut self, a: impl Into<String>, b: impl Into<String>) -> Self {
        self.interactions.push((a.into(), b.into()));
        self
    }

    pub fn without_intercept(mut self) -> Self {
        self.include_intercept = false;
        self
    }

    pub fn standardized(mut self, on: bool) -> Self {
        self.standardize = on;
        self
    }

    pub fn dim(&self) -> usize {
        usize::from(self.include_intercept) + self.covariates.len() + self.interactions.len()
    }

    pub fn intercept_index(&self) -> Option<usize> {
        self.include_intercept.then_some(0)
    }

    pub fn column_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.dim());
        if self.include_intercept {
            names.push("(Intercept)".to_string());
        }
        names.extend(self.covariates.iter().cloned());
        names.extend(self.interactions.iter().map(|(a, b)| format!("{a}:{b}")));
        names
    }
}

/// A model spec bound to concrete rasters, with names resolved once.
#[derive(Debug, Clone)]
pub struct Design<'a> {
    spec: &'a ModelSpec,
    main: Vec<&'a CovariateField>,
    pairs: Vec<(&'a CovariateField, &'a CovariateField)>,
}

impl<'a> Design<'a> {
    pub fn resolve(spec: &'a ModelSpec, fields: &'a [CovariateField]) -> Result<Self> {
        let find = |name: &str| {
            fields
                .iter()
                .find(|f| f.name() == name)
                .ok_or_else(|| Error::MissingCovariate(name.to_string()))
        };
        let main = spec
            .covariates
            .iter()
            .map(|n| find(n))
            .collect::<Result<Vec<_>>>()?;
        let pairs = spec
            .interactions
            .iter()
            .map(|(a, b)| Ok((find(a)?, find(b)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Design { spec, main, pairs })
    }

    pub fn spec(&self) -> &ModelSpec {
        self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn fields(&self) -> impl Iterator<Item = &'a CovariateField> + '_ {
        self.main
            .iter()
            .copied()
            .chain(self.pairs.iter().flat_map(|(a, b)| [*a, *b]))
    }

    /// Raw (unstandardized) design row written into `out`.
    pub fn fill_row(&self, u: Point, out: &mut [f64]) -> Result<()> {
        debug_assert_eq!(out.len(), self.dim());
        let mut k = 0;
        if self.spec.include_intercept {
            out[0] = 1.0;
            k = 1;
        }
        for f in &self.main {
            out[k] = f.lookup(u)?;
            k += 1;
        }
        for (a, b) in &self.pairs {
            out[k] = a.lookup(u)? * b.lookup(u)?;
            k += 1;
        }
        Ok(())
    }

    pub fn row(&self, u: Point, stats: Option<&ColumnStats>) -> Result<Vec<f64>> {
        let mut row = vec![0.0; self.dim()];
        self.fill_row(u, &mut row)?;
        if let Some(s) = stats {
            s.apply(&mut row);
        }
        Ok(row)
    }

    /// Splits `window` into rectangles on which every design column is
    /// constant, returning each rectangle with its raw design row.
    pub fn pieces(&self, window: &Window) -> Result<Vec<(Window, Vec<f64>)>> {
        for f in self.fields() {
            if !f.covers(window) {
                return Err(Error::RasterDoesNotCover {
                    name: f.name().to_string(),
                });
            }
        }
        let xs = self.axis_breaks(true, window.x_min(), window.x_max());
        let ys = self.axis_breaks(false, window.y_min(), window.y_max());
        let mut out = Vec::with_capacity((xs.len() - 1) * (ys.len() - 1));
        for yw in ys.windows(2) {
            for xw in xs.windows(2) {
                let rect = Window::new(xw[0], xw[1], yw[0], yw[1])?;
                let row = self.row(rect.center(), None)?;
                out.push((rect, row));
            }
        }
        Ok(out)
    }

    fn axis_breaks(&self, axis_x: bool, lo: f64, hi: f64) -> Vec<f64> {
        let mut all: Vec<f64> = self.fields().flat_map(|f| f.breaks(axis_x, lo, hi)).collect();
        all.sort_by(f64::total_cmp);
        let tol = EDGE_SLACK * (hi - lo);
        let mut out = vec![lo];
        for e in all {
            if e - out[out.len() - 1] > tol && hi - e > tol {
                out.push(e);
            }
        }
        out.push(hi);
        out
    }
}

/// Estimated or true coefficient vector, aligned with design column names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub beta: Vec<f64>,
    pub names: Vec<String>,
}

impl Coefficients {
    pub fn new(beta: Vec<f64>, names: Vec<String>) -> Result<Self> {
        if beta.len() != names.len() {
            return Err(Error::DimensionMismatch {
                expected: names.len(),
                got: beta.len(),
            });
        }
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::NumericRange("non-finite coefficient".into()));
        }
        Ok(Coefficients { beta, names })
    }

    pub fn unnamed(beta: Vec<f64>) -> Self {
        let names = (1..=beta.len()).map(|j| format!("b{j}")).collect();
        Coefficients { beta, names }
    }

    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }

    /// Maps coefficients fitted on standardized columns back to the raw
    /// covariate scale. The intercept absorbs the centering terms.
    pub fn to_original_scale(&self, stats: &ColumnStats, intercept: Option<usize>) -> Coefficients {
        let mut beta: Vec<f64> = self
            .beta
            .iter()
            .zip(&stats.scale)
            .map(|(b, s)| b / s)
            .collect();
        if let Some(i0) = intercept {
            let shift: f64 = (0..beta.len())
                .filter(|&j| j != i0)
                .map(|j| beta[j] * stats.mean[j])
                .sum();
            beta[i0] = self.beta[i0] - shift;
        }
        Coefficients {
            beta,
            names: self.names.clone(),
        }
    }
}

/// Design row `z(u)`: intercept first, then covariates, then interaction
/// products, standardized when `stats` is given.
pub fn design_row(
    u: Point,
    spec: &ModelSpec,
    fields: &[CovariateField],
    stats: Option<&ColumnStats>,
) -> Result<Vec<f64>> {
    Design::resolve(spec, fields)?.row(u, stats)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `exp(beta' z(u))`.
pub fn intensity_at(
    u: Point,
    beta: &Coefficients,
    spec: &ModelSpec,
    fields: &[CovariateField],
    stats: Option<&ColumnStats>,
) -> Result<f64> {
    let row = design_row(u, spec, fields, stats)?;
    if row.len() != beta.len() {
        return Err(Error::DimensionMismatch {
            expected: row.len(),
            got: beta.len(),
        });
    }
    Ok(dot(&row, &beta.beta).exp())
}

/// Exact integral of `exp(beta' z)` over `window` for piecewise-constant rasters.
pub fn integrate_intensity(design: &Design<'_>, beta: &[f64], window: &Window) -> Result<f64> {
    if beta.len() != design.dim() {
        return Err(Error::DimensionMismatch {
            expected: design.dim(),
            got: beta.len(),
        });
    }
    let total: f64 = design
        .pieces(window)?
        .iter()
        .map(|(rect, row)| rect.area() * dot(row, beta).exp())
        .sum();
    if total.is_finite() {
        Ok(total)
    } else {
        Err(Error::NumericRange("intensity integral overflows".into()))
    }
}
