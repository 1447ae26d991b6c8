//! Dense two-phase primal simplex with primal/dual certificates.
//!
//! Problems are stated as
//!
//! ```text
//! minimize c'x  subject to  G x <= h,  E x = f,  lower <= x <= upper
//! ```
//!
//! and converted to standard form by shifting/splitting variables and adding
//! slacks. The final basis is re-factorized to recover an accurate primal
//! point and the dual multipliers `alpha >= 0` (inequalities) and `nu`
//! (equalities) of the Lagrangian `c'x + alpha'(Gx - h) + nu'(Ex - f)`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const FEAS_TOL: f64 = 1e-9;
pub const OPT_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub c: Vec<f64>,
    pub g: DMatrix<f64>,
    pub h: Vec<f64>,
    pub e: DMatrix<f64>,
    pub f: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    /// `min c'x` over free variables with no constraints yet.
    pub fn new(c: Vec<f64>) -> Self {
        let n = c.len();
        LinearProgram {
            c,
            g: DMatrix::zeros(0, n),
            h: Vec::new(),
            e: DMatrix::zeros(0, n),
            f: Vec::new(),
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn with_inequalities(mut self, g: DMatrix<f64>, h: Vec<f64>) -> Self {
        self.g = g;
        self.h = h;
        self
    }

    pub fn with_equalities(mut self, e: DMatrix<f64>, f: Vec<f64>) -> Self {
        self.e = e;
        self.f = f;
        self
    }

    pub fn with_bounds(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn n_vars(&self) -> usize {
        self.c.len()
    }

    pub fn n_inequalities(&self) -> usize {
        self.g.nrows()
    }

    pub fn n_equalities(&self) -> usize {
        self.e.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_vars();
        let dims = [
            (self.g.ncols(), n),
            (self.h.len(), self.g.nrows()),
            (self.e.ncols(), n),
            (self.f.len(), self.e.nrows()),
            (self.lower.len(), n),
            (self.upper.len(), n),
        ];
        for (got, expected) in dims {
            if got != expected {
                return Err(Error::DimensionMismatch { expected, got });
            }
        }
        let finite = self
            .c
            .iter()
            .chain(self.g.iter())
            .chain(&self.h)
            .chain(self.e.iter())
            .chain(&self.f)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("LP data must be finite".into()));
        }
        for j in 0..n {
            let (l, u) = (self.lower[j], self.upper[j]);
            if l.is_nan() || u.is_nan() || l == f64::INFINITY || u == f64::NEG_INFINITY || l > u {
                return Err(Error::InvalidArgument(format!("bad bounds [{l}, {u}] on variable {j}")));
            }
        }
        Ok(())
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    /// Largest violation of any constraint or bound at `x`.
    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        let xv = DVector::from_column_slice(x);
        let gx = &self.g * &xv;
        let ex = &self.e * &xv;
        let ineq = (0..self.h.len()).map(|i| (gx[i] - self.h[i]).max(0.0));
        let eq = (0..self.f.len()).map(|i| (ex[i] - self.f[i]).abs());
        let bounds = (0..x.len()).map(|j| (self.lower[j] - x[j]).max(x[j] - self.upper[j]).max(0.0));
        ineq.chain(eq).chain(bounds).fold(0.0, f64::max)
    }

    /// Plain-text dump for cross-checking with external solvers.
    ///
    /// ```text
    /// lp <n_vars> <n_ineq> <n_eq>
    /// c <c_1> .. <c_n>
    /// G <g_i1> .. <g_in> <= <h_i>
    /// E <e_k1> .. <e_kn> = <f_k>
    /// bound <j> <lower> <upper>
    /// ```
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "lp {} {} {}", self.n_vars(), self.n_inequalities(), self.n_equalities());
        let join = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let _ = writeln!(out, "c {}", join(&mut self.c.iter().copied()));
        for i in 0..self.g.nrows() {
            let _ = writeln!(out, "G {} <= {}", join(&mut self.g.row(i).iter().copied()), self.h[i]);
        }
        for i in 0..self.e.nrows() {
            let _ = writeln!(out, "E {} = {}", join(&mut self.e.row(i).iter().copied()), self.f[i]);
        }
        for j in 0..self.n_vars() {
            if self.lower[j].is_finite() || self.upper[j].is_finite() {
                let _ = writeln!(out, "bound {} {} {}", j, self.lower[j], self.upper[j]);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal point (empty unless optimal).
    pub x: Vec<f64>,
    /// Multipliers `alpha_i >= 0` of the rows of `G x <= h`.
    pub dual_ineq: Vec<f64>,
    /// Multipliers of the rows of `E x = f`.
    pub dual_eq: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
}

impl LpSolution {
    fn without_point(status: LpStatus, iterations: usize) -> Self {
        LpSolution {
            status,
            x: Vec::new(),
            dual_ineq: Vec::new(),
            dual_eq: Vec::new(),
            primal_objective: f64::NAN,
            dual_objective: f64::NAN,
            gap: f64::NAN,
            primal_residual: f64::NAN,
            dual_residual: f64::NAN,
            iterations,
        }
    }

    /// `max_i alpha_i * (h_i - G_i x)`.
    pub fn complementary_slackness(&self, lp: &LinearProgram) -> f64 {
        let gx = &lp.g * DVector::from_column_slice(&self.x);
        (0..lp.h.len())
            .map(|i| (self.dual_ineq[i] * (lp.h[i] - gx[i])).abs())
            .fold(0.0, f64::max)
    }
}

/// Variable `j` of the original problem equals `shift + sign * x[pos] - x[neg]`.
#[derive(Debug, Clone, Copy)]
struct ColumnMap {
    pos: usize,
    neg: Option<usize>,
    sign: f64,
    shift: f64,
}

/// Standard form `min cost'x, a x = b, x >= 0` with every `b_i >= 0`.
struct StandardForm {
    a: DMatrix<f64>,
    b: Vec<f64>,
    cost: Vec<f64>,
    offset: f64,
    row_sign: Vec<f64>,
    /// Column of the slack on each row (`None` for equalities).
    slack: Vec<Option<usize>>,
    columns: Vec<ColumnMap>,
    n_ineq: usize,
    n_bound_rows: usize,
}

impl StandardForm {
    fn from_lp(lp: &LinearProgram) -> StandardForm {
        let n = lp.n_vars();
        let mut columns = Vec::with_capacity(n);
        let mut n_struct = 0;
        let mut bound_rows: Vec<(usize, f64)> = Vec::new();
        for j in 0..n {
            let (l, u) = (lp.lower[j], lp.upper[j]);
            let map = if l.is_finite() {
                if u.is_finite() {
                    bound_rows.push((n_struct, u - l));
                }
                ColumnMap { pos: n_struct, neg: None, sign: 1.0, shift: l }
            } else if u.is_finite() {
                ColumnMap { pos: n_struct, neg: None, sign: -1.0, shift: u }
            } else {
                n_struct += 1;
                ColumnMap { pos: n_struct - 1, neg: Some(n_struct), sign: 1.0, shift: 0.0 }
            };
            n_struct += 1;
            columns.push(map);
        }
        let n_ineq = lp.g.nrows();
        let n_le = n_ineq + bound_rows.len();
        let n_rows = n_le + lp.e.nrows();
        let n_cols = n_struct + n_le;
        let mut a = DMatrix::zeros(n_rows, n_cols);
        let mut b = vec![0.0; n_rows];

        let put_row = |a: &mut DMatrix<f64>, r: usize, coef: &dyn Fn(usize) -> f64, rhs: f64| -> f64 {
            let mut shifted = rhs;
            for (j, map) in columns.iter().enumerate() {
                let v = coef(j);
                if v == 0.0 {
                    continue;
                }
                shifted -= v * map.shift;
                a[(r, map.pos)] += v * map.sign;
                if let Some(neg) = map.neg {
                    a[(r, neg)] -= v;
                }
            }
            shifted
        };
        for i in 0..n_ineq {
            b[i] = put_row(&mut a, i, &|j| lp.g[(i, j)], lp.h[i]);
        }
        for (k, &(col, width)) in bound_rows.iter().enumerate() {
            a[(n_ineq + k, col)] = 1.0;
            b[n_ineq + k] = width;
        }
        for i in 0..lp.e.nrows() {
            b[n_le + i] = put_row(&mut a, n_le + i, &|j| lp.e[(i, j)], lp.f[i]);
        }
        let mut slack = vec![None; n_rows];
        for (r, s) in slack.iter_mut().enumerate().take(n_le) {
            a[(r, n_struct + r)] = 1.0;
            *s = Some(n_struct + r);
        }
        let mut row_sign = vec![1.0; n_rows];
        for r in 0..n_rows {
            if b[r] < 0.0 {
                row_sign[r] = -1.0;
                b[r] = -b[r];
                a.row_mut(r).iter_mut().for_each(|v| *v = -*v);
            }
        }
        let mut cost = vec![0.0; n_cols];
        let mut offset = 0.0;
        for (j, map) in columns.iter().enumerate() {
            cost[map.pos] += lp.c[j] * map.sign;
            if let Some(neg) = map.neg {
                cost[neg] -= lp.c[j];
            }
            offset += lp.c[j] * map.shift;
        }
        StandardForm {
            a,
            b,
            cost,
            offset,
            row_sign,
            slack,
            columns,
            n_ineq,
            n_bound_rows: bound_rows.len(),
        }
    }
}

/// Dense tableau over the standard-form columns plus artificials.
struct Tableau {
    rows: usize,
    cols: usize,
    /// Row-major `rows x (cols + 1)`, last column is the right-hand side.
    t: Vec<f64>,
    basis: Vec<usize>,
    reduced: Vec<f64>,
    allowed: Vec<bool>,
    bland: bool,
    degenerate: usize,
    iterations: usize,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.t[r * (self.cols + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.t[r * (self.cols + 1) + self.cols]
    }

    fn price(&mut self, cost: &[f64]) {
        for j in 0..self.cols {
            let mut d = cost[j];
            for r in 0..self.rows {
                d -= cost[self.basis[r]] * self.at(r, j);
            }
            self.reduced[j] = d;
        }
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.cols + 1;
        let piv = self.t[pr * w + pc];
        for v in &mut self.t[pr * w..(pr + 1) * w] {
            *v /= piv;
        }
        let prow: Vec<f64> = self.t[pr * w..(pr + 1) * w].to_vec();
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let factor = self.t[r * w + pc];
            if factor != 0.0 {
                for (v, p) in self.t[r * w..(r + 1) * w].iter_mut().zip(&prow) {
                    *v -= factor * p;
                }
                self.t[r * w + pc] = 0.0;
            }
        }
        let factor = self.reduced[pc];
        if factor != 0.0 {
            for (d, p) in self.reduced.iter_mut().zip(&prow) {
                *d -= factor * p;
            }
            self.reduced[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    fn entering(&self) -> Option<usize> {
        let candidates = (0..self.cols).filter(|&j| self.allowed[j] && self.reduced[j] < -OPT_TOL);
        if self.bland {
            candidates.min()
        } else {
            candidates.min_by(|&a, &b| self.reduced[a].total_cmp(&self.reduced[b]).then(a.cmp(&b)))
        }
    }

    fn leaving(&self, q: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for r in 0..self.rows {
            let a = self.at(r, q);
            if a <= PIVOT_TOL {
                continue;
            }
            let ratio = self.rhs(r).max(0.0) / a;
            best = match best {
                None => Some((r, ratio)),
                Some((br, bratio)) => {
                    let tie = (ratio - bratio).abs() <= 1e-12 * (1.0 + bratio.abs());
                    let better = if tie {
                        if self.bland {
                            self.basis[r] < self.basis[br]
                        } else {
                            a > self.at(br, q)
                        }
                    } else {
                        ratio < bratio
                    };
                    if better {
                        Some((r, ratio))
                    } else {
                        Some((br, bratio))
                    }
                }
            };
        }
        best.map(|(r, _)| r)
    }

    fn run(&mut self, max_iter: usize) -> Result<PhaseEnd> {
        let bland_after = 5 * (self.rows + self.cols);
        loop {
            let Some(q) = self.entering() else {
                return Ok(PhaseEnd::Optimal);
            };
            let Some(r) = self.leaving(q) else {
                return Ok(PhaseEnd::Unbounded);
            };
            if self.rhs(r) / self.at(r, q) <= FEAS_TOL {
                self.degenerate += 1;
                if self.degenerate > bland_after {
                    self.bland = true;
                }
            }
            self.pivot(r, q);
            self.iterations += 1;
            if self.iterations > max_iter {
                return Err(Error::SimplexStall(self.iterations));
            }
        }
    }
}

/// Solves `lp` with the two-phase primal simplex method (Dantzig pricing,
/// switching to Bland's rule after `5 (rows + cols)` degenerate pivots).
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let sf = StandardForm::from_lp(lp);
    let m = sf.a.nrows();
    let n = sf.a.ncols();

    // Basis: slacks with +1 coefficient where possible, artificials elsewhere.
    let mut basis = Vec::with_capacity(m);
    let mut art_rows = Vec::new();
    for r in 0..m {
        match sf.slack[r] {
            Some(s) if sf.row_sign[r] > 0.0 => basis.push(s),
            _ => {
                basis.push(n + art_rows.len());
                art_rows.push(r);
            }
        }
    }
    let n_art = art_rows.len();
    let cols = n + n_art;
    let mut t = vec![0.0; m * (cols + 1)];
    for r in 0..m {
        for j in 0..n {
            t[r * (cols + 1) + j] = sf.a[(r, j)];
        }
        t[r * (cols + 1) + cols] = sf.b[r];
    }
    for (k, &r) in art_rows.iter().enumerate() {
        t[r * (cols + 1) + n + k] = 1.0;
    }
    let mut tab = Tableau {
        rows: m,
        cols,
        t,
        basis,
        reduced: vec![0.0; cols],
        allowed: vec![true; cols],
        bland: false,
        degenerate: 0,
        iterations: 0,
    };
    let max_iter = 50 * (m + cols) + 1000;

    if n_art > 0 {
        let mut phase1 = vec![0.0; cols];
        phase1[n..].iter_mut().for_each(|c| *c = 1.0);
        tab.price(&phase1);
        tab.run(max_iter)?;
        let infeas: f64 = (0..m).filter(|&r| tab.basis[r] >= n).map(|r| tab.rhs(r)).sum();
        let scale = 1.0 + sf.b.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if infeas > FEAS_TOL * scale {
            return Ok(LpSolution::without_point(LpStatus::Infeasible, tab.iterations));
        }
        // Drive remaining (zero-level) artificials out of the basis.
        for r in 0..m {
            if tab.basis[r] < n {
                continue;
            }
            let best = (0..n)
                .filter(|&j| !tab.basis.contains(&j))
                .max_by(|&a, &b| tab.at(r, a).abs().total_cmp(&tab.at(r, b).abs()));
            if let Some(j) = best {
                if tab.at(r, j).abs() > PIVOT_TOL {
                    tab.pivot(r, j);
                }
            }
        }
        for j in n..cols {
            tab.allowed[j] = false;
        }
    }

    let mut cost = sf.cost.clone();
    cost.resize(cols, 0.0);
    tab.price(&cost);
    tab.degenerate = 0;
    tab.bland = false;
    if let PhaseEnd::Unbounded = tab.run(max_iter)? {
        return Ok(LpSolution::without_point(LpStatus::Unbounded, tab.iterations));
    }

    certify(lp, &sf, &tab.basis, tab.iterations)
}

/// Refactorizes the final basis for an accurate primal point and duals.
fn certify(lp: &LinearProgram, sf: &StandardForm, basis: &[usize], iterations: usize) -> Result<LpSolution> {
    let m = sf.a.nrows();
    let n = sf.a.ncols();
    // Artificials still basic sit on redundant rows; each is a unit column.
    let mut art_row = Vec::new();
    for r in 0..m {
        if !matches!(sf.slack[r], Some(_) if sf.row_sign[r] > 0.0) {
            art_row.push(r);
        }
    }
    let bmat = DMatrix::from_fn(m, m, |r, k| {
        let j = basis[k];
        if j < n {
            sf.a[(r, j)]
        } else if art_row[j - n] == r {
            1.0
        } else {
            0.0
        }
    });
    let cb = DVector::from_fn(m, |k, _| if basis[k] < n { sf.cost[basis[k]] } else { 0.0 });
    let bvec = DVector::from_column_slice(&sf.b);
    let (xb, y) = if m == 0 {
        (DVector::zeros(0), DVector::zeros(0))
    } else {
        let singular = || Error::Internal("final simplex basis is singular".into());
        let lu = bmat.clone().lu();
        let mut xb = lu.solve(&bvec).ok_or_else(singular)?;
        let resid = &bvec - &bmat * &xb;
        if let Some(corr) = lu.solve(&resid) {
            xb += corr;
        }
        let y = bmat.transpose().lu().solve(&cb).ok_or_else(singular)?;
        (xb, y)
    };

    let mut xs = vec![0.0; n];
    for (k, &j) in basis.iter().enumerate() {
        if j < n {
            xs[j] = xb[k].max(0.0);
        }
    }
    let x: Vec<f64> = sf
        .columns
        .iter()
        .map(|c| c.shift + c.sign * xs[c.pos] - c.neg.map_or(0.0, |k| xs[k]))
        .collect();

    let n_le = sf.n_ineq + sf.n_bound_rows;
    let dual_ineq: Vec<f64> = (0..sf.n_ineq).map(|i| -sf.row_sign[i] * y[i]).collect();
    let dual_eq: Vec<f64> = (n_le..m).map(|i| -sf.row_sign[i] * y[i]).collect();

    let dual_residual = (0..n)
        .map(|j| {
            let aty: f64 = (0..m).map(|r| sf.a[(r, j)] * y[r]).sum();
            (aty - sf.cost[j]).max(0.0)
        })
        .fold(0.0, f64::max);
    let primal_objective = lp.objective(&x);
    let dual_objective = sf.offset + sf.b.iter().zip(y.iter()).map(|(b, y)| b * y).sum::<f64>();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        primal_residual: lp.primal_residual(&x),
        x,
        dual_ineq,
        dual_eq,
        primal_objective,
        dual_objective,
        gap: (primal_objective - dual_objective).abs(),
        dual_residual,
        iterations,
    })
}
