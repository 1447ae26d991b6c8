//! Berman-Turner quadrature: data points plus a regular grid of dummy points,
//! with counting weights, so that the point-process likelihood becomes a
//! weighted Poisson regression.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{ColumnStats, CovariateField, Design, ModelSpec, Point, PointPattern};
use crate::io::Table;

/// Dummy-point grid resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadGrid {
    pub nx: usize,
    pub ny: usize,
}

impl QuadGrid {
    pub fn new(nx: usize, ny: usize) -> Self {
        QuadGrid { nx, ny }
    }

    /// `max(10, ceil(2 sqrt(m)))` cells along each axis.
    pub fn default_for(m: usize) -> Self {
        let n = ((2.0 * (m as f64).sqrt()).ceil() as usize).max(10);
        QuadGrid { nx: n, ny: n }
    }

    /// Parses `NXxNY`, e.g. `40x20`.
    pub fn parse(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| Error::InvalidArgument(format!("grid `{s}` is not of the form NXxNY")))?;
        let nx = a.trim().parse().map_err(|_| Error::InvalidArgument(format!("bad grid `{s}`")))?;
        let ny = b.trim().parse().map_err(|_| Error::InvalidArgument(format!("bad grid `{s}`")))?;
        Ok(QuadGrid { nx, ny })
    }
}

#[derive(Debug, Clone)]
pub struct QuadratureScheme {
    points: Vec<Point>,
    weights: Vec<f64>,
    is_data: Vec<bool>,
    design: DMatrix<f64>,
    n_data: usize,
    area: f64,
    column_names: Vec<String>,
    stats: Option<ColumnStats>,
    intercept: Option<usize>,
}

impl QuadratureScheme {
    /// Assembles a scheme from explicit parts. Data points must come first.
    pub fn from_parts(
        points: Vec<Point>,
        weights: Vec<f64>,
        n_data: usize,
        design: DMatrix<f64>,
        column_names: Vec<String>,
        intercept: Option<usize>,
    ) -> Result<Self> {
        let m_total = points.len();
        for len in [weights.len(), design.nrows()] {
            if len != m_total {
                return Err(Error::DimensionMismatch {
                    expected: m_total,
                    got: len,
                });
            }
        }
        if column_names.len() != design.ncols() {
            return Err(Error::DimensionMismatch {
                expected: design.ncols(),
                got: column_names.len(),
            });
        }
        if n_data > m_total {
            return Err(Error::InvalidArgument("more data points than quadrature points".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidArgument(format!("quadrature weight {w} is not positive")));
        }
        if design.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericRange("non-finite design entry".into()));
        }
        let area = weights.iter().sum();
        let is_data = (0..m_total).map(|i| i < n_data).collect();
        Ok(QuadratureScheme {
            points,
            weights,
            is_data,
            design,
            n_data,
            area,
            column_names,
            stats: None,
            intercept,
        })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn is_data(&self, i: usize) -> bool {
        self.is_data[i]
    }
    /// Quadrature points by row, columns in design order.
    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }
    pub fn n_data(&self) -> usize {
        self.n_data
    }
    /// Total number of quadrature points `M`.
    pub fn len(&self) -> usize {
        self.points.len()
    }
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
    pub fn dim(&self) -> usize {
        self.design.ncols()
    }
    pub fn area(&self) -> f64 {
        self.area
    }
    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }
    pub fn stats(&self) -> Option<&ColumnStats> {
        self.stats.as_ref()
    }
    pub fn intercept(&self) -> Option<usize> {
        self.intercept
    }

    /// `y_i = 1{data} / w_i`.
    pub fn response(&self, i: usize) -> f64 {
        if self.is_data[i] {
            1.0 / self.weights[i]
        } else {
            0.0
        }
    }

    pub fn responses(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.response(i)).collect()
    }

    /// Debug export: `x, y, w, y_response, is_data`, then design columns.
    pub fn to_table(&self) -> Table {
        let mut header: Vec<String> = ["x", "y", "w", "y_response", "is_data"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend(self.column_names.iter().cloned());
        let mut t = Table::new(header);
        for i in 0..self.len() {
            let mut row = vec![
                self.points[i].x.to_string(),
                self.points[i].y.to_string(),
                self.weights[i].to_string(),
                self.response(i).to_string(),
                u8::from(self.is_data[i]).to_string(),
            ];
            row.extend((0..self.dim()).map(|j| self.design[(i, j)].to_string()));
            t.push(row);
        }
        t
    }
}

/// Builds the scheme: data points first (input order), then one dummy point
/// at each grid-cell center. Every point in a cell gets weight
/// `cell_area / (1 + data points in the cell)`.
pub fn build_scheme(
    pattern: &PointPattern,
    spec: &ModelSpec,
    fields: &[CovariateField],
    grid: QuadGrid,
) -> Result<QuadratureScheme> {
    if grid.nx == 0 || grid.ny == 0 {
        return Err(Error::InvalidArgument("quadrature grid needs at least one cell per axis".into()));
    }
    let window = pattern.window();
    let design = Design::resolve(spec, fields)?;
    for f in design.fields() {
        if !f.covers(window) {
            return Err(Error::RasterDoesNotCover {
                name: f.name().to_string(),
            });
        }
    }
    let (nx, ny) = (grid.nx, grid.ny);
    let cw = window.width() / nx as f64;
    let ch = window.height() / ny as f64;
    let cell_area = cw * ch;
    let cell_of = |p: &Point| {
        let ix = (((p.x - window.x_min()) / cw).floor().max(0.0) as usize).min(nx - 1);
        let iy = (((p.y - window.y_min()) / ch).floor().max(0.0) as usize).min(ny - 1);
        iy * nx + ix
    };

    let data_cells: Vec<usize> = pattern.points().iter().map(cell_of).collect();
    let mut counts = vec![0usize; nx * ny];
    for &c in &data_cells {
        counts[c] += 1;
    }
    let weight = |c: usize| cell_area / (1 + counts[c]) as f64;

    let m = pattern.len();
    let total = m + nx * ny;
    let mut points = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    points.extend_from_slice(pattern.points());
    weights.extend(data_cells.iter().map(|&c| weight(c)));
    for iy in 0..ny {
        for ix in 0..nx {
            points.push(Point::new(
                window.x_min() + (ix as f64 + 0.5) * cw,
                window.y_min() + (iy as f64 + 0.5) * ch,
            ));
            weights.push(weight(iy * nx + ix));
        }
    }

    let p = spec.dim();
    let mut z = DMatrix::zeros(total, p);
    let mut row = vec![0.0; p];
    for (i, u) in points.iter().enumerate() {
        design.fill_row(*u, &mut row)?;
        for (j, v) in row.iter().enumerate() {
            z[(i, j)] = *v;
        }
    }

    let names = spec.column_names();
    let stats = if spec.standardize {
        let stats = weighted_column_stats(&z, &weights, spec.intercept_index(), &names)?;
        for j in 0..p {
            let (mu, s) = (stats.mean[j], stats.scale[j]);
            z.column_mut(j).iter_mut().for_each(|v| *v = (*v - mu) / s);
        }
        Some(stats)
    } else {
        None
    };

    let mut scheme = QuadratureScheme::from_parts(points, weights, m, z, names, spec.intercept_index())?;
    scheme.area = window.area();
    scheme.stats = stats;
    Ok(scheme)
}

/// Weighted mean and standard deviation of each non-intercept column.
fn weighted_column_stats(
    z: &DMatrix<f64>,
    w: &[f64],
    intercept: Option<usize>,
    names: &[String],
) -> Result<ColumnStats> {
    let total: f64 = w.iter().sum();
    let mut stats = ColumnStats::identity(z.ncols());
    for j in 0..z.ncols() {
        if Some(j) == intercept {
            continue;
        }
        let col = z.column(j);
        let mean = col.iter().zip(w).map(|(v, w)| v * w).sum::<f64>() / total;
        let var = col.iter().zip(w).map(|(v, w)| w * (v - mean).powi(2)).sum::<f64>() / total;
        if !(var > 1e-300) {
            return Err(Error::DegenerateColumn(names[j].clone()));
        }
        stats.mean[j] = mean;
        stats.scale[j] = var.sqrt();
    }
    Ok(stats)
}

/// `sum_i w_i f_i`, the quadrature approximation of an integral over the window.
pub fn integral_approx(scheme: &QuadratureScheme, f: &[f64]) -> Result<f64> {
    if f.len() != scheme.len() {
        return Err(Error::DimensionMismatch {
            expected: scheme.len(),
            got: f.len(),
        });
    }
    Ok(scheme.weights.iter().zip(f).map(|(w, v)| w * v).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Window;

    fn unit_pattern(pts: &[(f64, f64)]) -> PointPattern {
        PointPattern::new(pts.iter().map(|&(x, y)| Point::new(x, y)).collect(), Window::unit()).unwrap()
    }

    #[test]
    fn empty_pattern_two_by_two() {
        let s = build_scheme(&unit_pattern(&[]), &ModelSpec::intercept_only(), &[], QuadGrid::new(2, 2)).unwrap();
        assert_eq!(s.len(), 4);
        assert!(s.weights().iter().all(|&w| w == 0.25));
        assert_eq!(s.n_data(), 0);
    }

    #[test]
    fn one_data_point_shares_its_cell() {
        let s = build_scheme(&unit_pattern(&[(0.1, 0.2)]), &ModelSpec::intercept_only(), &[], QuadGrid::new(2, 2))
            .unwrap();
        assert_eq!(s.len(), 5);
        // brute-force recount: which points fall in the lower-left cell
        let in_ll: Vec<usize> = (0..s.len())
            .filter(|&i| s.points()[i].x < 0.5 && s.points()[i].y < 0.5)
            .collect();
        assert_eq!(in_ll.len(), 2);
        for i in 0..s.len() {
            let expect = if in_ll.contains(&i) { 0.125 } else { 0.25 };
            assert_eq!(s.weights()[i], expect);
        }
        assert!((s.weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(s.response(0) * s.weights()[0], 1.0);
    }

    #[test]
    fn three_points_single_cell() {
        let s = build_scheme(
            &unit_pattern(&[(0.1, 0.1), (0.5, 0.5), (0.9, 0.3)]),
            &ModelSpec::intercept_only(),
            &[],
            QuadGrid::new(1, 1),
        )
        .unwrap();
        assert_eq!(s.len(), 4);
        assert!(s.weights().iter().all(|&w| w == 0.25));
    }

    #[test]
    fn integral_examples() {
        let s = build_scheme(&unit_pattern(&[(0.3, 0.3)]), &ModelSpec::intercept_only(), &[], QuadGrid::new(3, 3))
            .unwrap();
        let ones = vec![1.0; s.len()];
        assert!((integral_approx(&s, &ones).unwrap() - 1.0).abs() < 1e-15);
        let c = vec![2.5; s.len()];
        assert!((integral_approx(&s, &c).unwrap() - 2.5).abs() < 1e-14);
        assert!(integral_approx(&s, &[1.0]).is_err());
    }

    #[test]
    fn zero_grid_is_rejected() {
        assert!(build_scheme(&unit_pattern(&[]), &ModelSpec::intercept_only(), &[], QuadGrid::new(0, 3)).is_err());
    }

    #[test]
    fn grid_parse_and_default() {
        assert_eq!(QuadGrid::parse("40x20").unwrap(), QuadGrid::new(40, 20));
        assert!(QuadGrid::parse("40").is_err());
        assert_eq!(QuadGrid::default_for(0), QuadGrid::new(10, 10));
        assert_eq!(QuadGrid::default_for(2400), QuadGrid::new(98, 98));
    }

    #[test]
    fn standardized_columns_have_unit_weighted_moments() {
        let f = CovariateField::new("z", 2, 2, (0.0, 0.0), (0.5, 0.5), vec![1.0, 2.0, 3.0, 7.0]).unwrap();
        let spec = ModelSpec::new(["z"]).with_interaction("z", "z").standardized(true);
        let s = build_scheme(&unit_pattern(&[(0.1, 0.1), (0.7, 0.2), (0.8, 0.9)]), &spec, &[f], QuadGrid::new(5, 5))
            .unwrap();
        let w = s.weights();
        let tot: f64 = w.iter().sum();
        for j in 1..3 {
            let col = s.design().column(j);
            let mean = col.iter().zip(w).map(|(v, w)| v * w).sum::<f64>() / tot;
            let var = col.iter().zip(w).map(|(v, w)| w * (v - mean).powi(2)).sum::<f64>() / tot;
            assert!(mean.abs() < 1e-10);
            assert!((var - 1.0).abs() < 1e-10);
        }
        assert!(s.design().column(0).iter().all(|&v| v == 1.0));
    }

    #[test]
    fn constant_column_cannot_be_standardized() {
        let f = CovariateField::constant("c", &Window::unit(), 3.0).unwrap();
        let spec = ModelSpec::new(["c"]).standardized(true);
        let err = build_scheme(&unit_pattern(&[]), &spec, &[f], QuadGrid::new(2, 2)).unwrap_err();
        assert!(matches!(err, Error::DegenerateColumn(n) if n == "c"));
    }

    #[test]
    fn export_has_expected_columns() {
        let s = build_scheme(&unit_pattern(&[(0.3, 0.3)]), &ModelSpec::intercept_only(), &[], QuadGrid::new(2, 2))
            .unwrap();
        let t = s.to_table();
        assert_eq!(t.header, vec!["x", "y", "w", "y_response", "is_data", "(Intercept)"]);
        assert_eq!(t.rows.len(), 5);
        assert_eq!(t.rows[0][4], "1");
    }
}
