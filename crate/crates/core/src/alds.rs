//! Adaptive linearized Dantzig selector.
//!
//! The score is linearized at a pilot estimate `b~`:
//! `Delta(b) = U~ + A~ (b~ - b)`, and the estimator solves
//!
//! ```text
//! min sum_j lambda_j |b_j|   s.t.   |Delta_j(b)| <= mu * lambda_j   for all j
//! ```
//!
//! as a linear program in `(b, u)`. Unpenalized coordinates (`lambda_j = 0`)
//! get the absolute constraint `|Delta_j| <= 1e-8 mu` and no objective weight;
//! infinite weights freeze the coordinate at zero and drop its constraint.
//!
//! `Delta` is a difference of `O(mu)` quantities while the constraint
//! half-width can be as small as `mu * 1e-10`, so it is always evaluated
//! with compensated dot products, and the LP solution is nudged back inside
//! the feasible slab when rounding leaves it marginally outside.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::al::{hard_zero, support_of, FitResult, Method, PenaltyWeights};
use crate::error::{Error, Result};
use crate::geometry::Coefficients;
use crate::likelihood::{mle, solve_spd, LikelihoodWorkspace, NewtonOptions};
use crate::lp::{solve_lp, LinearProgram, LpStatus};
use crate::quadrature::QuadratureScheme;

/// Relative slack `|Delta_j| <= UNPENALIZED_SLACK * mu` for unpenalized coordinates.
pub const UNPENALIZED_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct AldsProblem {
    pub beta_tilde: Vec<f64>,
    pub u_tilde: DVector<f64>,
    pub a_tilde: DMatrix<f64>,
    pub lambdas: PenaltyWeights,
    pub mu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Coord {
    Penalized(f64),
    Unpenalized,
    Frozen,
}

impl AldsProblem {
    pub fn new(
        beta_tilde: Vec<f64>,
        u_tilde: DVector<f64>,
        a_tilde: DMatrix<f64>,
        lambdas: PenaltyWeights,
        mu: f64,
    ) -> Result<Self> {
        let p = beta_tilde.len();
        for got in [u_tilde.len(), a_tilde.nrows(), a_tilde.ncols(), lambdas.len()] {
            if got != p {
                return Err(Error::DimensionMismatch { expected: p, got });
            }
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidArgument(format!("normalizer mu = {mu} must be positive")));
        }
        let finite = beta_tilde.iter().chain(u_tilde.iter()).chain(a_tilde.iter()).all(|v| v.is_finite());
        if !finite {
            return Err(Error::NumericRange("linearization inputs are not finite".into()));
        }
        for j in 0..p {
            for k in 0..j {
                let (a, b) = (a_tilde[(j, k)], a_tilde[(k, j)]);
                if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                    return Err(Error::InvalidArgument("sensitivity matrix is not symmetric".into()));
                }
            }
        }
        Ok(AldsProblem {
            beta_tilde,
            u_tilde,
            a_tilde,
            lambdas,
            mu,
        })
    }

    /// Linearizes the discretized score of `scheme` at `beta_tilde`, with `mu = N(D)`.
    pub fn from_scheme(scheme: &QuadratureScheme, lambdas: PenaltyWeights, beta_tilde: &[f64]) -> Result<Self> {
        if scheme.n_data() == 0 {
            return Err(Error::EmptyPattern);
        }
        let mut ws = LikelihoodWorkspace::new(scheme);
        let u = ws.score(beta_tilde)?;
        let a = ws.sensitivity(beta_tilde)?;
        AldsProblem::new(beta_tilde.to_vec(), u, a, lambdas, scheme.n_data() as f64)
    }

    /// Same linearization, different penalties.
    pub fn with_lambdas(&self, lambdas: PenaltyWeights) -> Result<Self> {
        AldsProblem::new(
            self.beta_tilde.clone(),
            self.u_tilde.clone(),
            self.a_tilde.clone(),
            lambdas,
            self.mu,
        )
    }

    pub fn dim(&self) -> usize {
        self.beta_tilde.len()
    }

    fn coord(&self, j: usize) -> Coord {
        let l = self.lambdas.get(j);
        if l.is_infinite() {
            Coord::Frozen
        } else if l == 0.0 {
            Coord::Unpenalized
        } else {
            Coord::Penalized(l)
        }
    }

    /// `(scale, bound)` of the constraint `scale * |Delta_j| <= bound`.
    fn row_scale(&self, j: usize) -> Option<(f64, f64)> {
        match self.coord(j) {
            Coord::Penalized(l) => Some((1.0 / (self.mu * l), 1.0)),
            Coord::Unpenalized => Some((1.0 / self.mu, UNPENALIZED_SLACK)),
            Coord::Frozen => None,
        }
    }

    /// Half-width `c_j` of the slab `|Delta_j| <= c_j`.
    fn half_width(&self, j: usize) -> Option<f64> {
        self.row_scale(j).map(|(s, b)| b / s)
    }

    /// `U~ + A~ b~`, the constant part of `Delta`.
    fn offset(&self) -> Vec<f64> {
        let p = self.dim();
        (0..p)
            .map(|j| {
                let mut x = vec![self.u_tilde[j]];
                let mut y = vec![1.0];
                for k in 0..p {
                    x.push(self.a_tilde[(j, k)]);
                    y.push(self.beta_tilde[k]);
                }
                dot2(&x, &y)
            })
            .collect()
    }

    /// `Delta(beta) = U~ + A~ (b~ - beta)`, evaluated in compensated arithmetic.
    pub fn delta(&self, beta: &[f64]) -> Vec<f64> {
        let p = self.dim();
        let mut diff = Vec::with_capacity(2 * p);
        let mut err = Vec::with_capacity(p);
        for k in 0..p {
            let (s, e) = two_sum(self.beta_tilde[k], -beta[k]);
            diff.push(s);
            err.push(e);
        }
        diff.extend(err);
        (0..p)
            .map(|j| {
                let mut x = Vec::with_capacity(2 * p + 1);
                x.push(self.u_tilde[j]);
                for k in 0..p {
                    x.push(self.a_tilde[(j, k)]);
                }
                for k in 0..p {
                    x.push(self.a_tilde[(j, k)]);
                }
                let mut y = Vec::with_capacity(2 * p + 1);
                y.push(1.0);
                y.extend_from_slice(&diff);
                dot2(&x, &y)
            })
            .collect()
    }

    /// `b~ + A~^{-1} U~`, the point where the linearized score vanishes.
    pub fn newton_point(&self) -> Result<Vec<f64>> {
        let step = solve_spd(&self.a_tilde, &self.u_tilde)?;
        Ok(self.beta_tilde.iter().zip(step.iter()).map(|(b, s)| b + s).collect())
    }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Dot product accurate as if computed in twice the working precision.
pub(crate) fn dot2(x: &[f64], y: &[f64]) -> f64 {
    let (mut s, mut c) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (p, ep) = two_prod(*a, *b);
        let (t, es) = two_sum(s, p);
        s = t;
        c += ep + es;
    }
    s + c
}

/// The LP in variables `(beta, u)` with rows, in order,
/// `Lambda beta - u <= 0`, `-Lambda beta - u <= 0`,
/// `scale (-A~ beta) <= bound - scale (U~ + A~ b~)` and
/// `scale (A~ beta) <= bound + scale (U~ + A~ b~)`, i.e. `scale |Delta(beta)| <= bound`.
pub fn build_alds_lp(problem: &AldsProblem) -> Result<LinearProgram> {
    let p = problem.dim();
    let d = problem.offset();
    let mut c = vec![0.0; 2 * p];
    let mut g = DMatrix::zeros(4 * p, 2 * p);
    let mut h = vec![0.0; 4 * p];
    let mut lower = vec![f64::NEG_INFINITY; 2 * p];
    let mut upper = vec![f64::INFINITY; 2 * p];
    for j in 0..p {
        let lam = match problem.coord(j) {
            Coord::Penalized(l) => l,
            Coord::Unpenalized => 0.0,
            Coord::Frozen => 1.0,
        };
        c[p + j] = if lam > 0.0 { 1.0 } else { 0.0 };
        g[(j, j)] = lam;
        g[(j, p + j)] = -1.0;
        g[(p + j, j)] = -lam;
        g[(p + j, p + j)] = -1.0;
        match problem.row_scale(j) {
            Some((scale, bound)) => {
                for k in 0..p {
                    g[(2 * p + j, k)] = -scale * problem.a_tilde[(j, k)];
                    g[(3 * p + j, k)] = scale * problem.a_tilde[(j, k)];
                }
                h[2 * p + j] = bound - scale * d[j];
                h[3 * p + j] = bound + scale * d[j];
            }
            None => {
                h[2 * p + j] = 1.0;
                h[3 * p + j] = 1.0;
                lower[j] = 0.0;
                upper[j] = 0.0;
            }
        }
    }
    let lp = LinearProgram::new(c).with_inequalities(g, h).with_bounds(lower, upper);
    lp.validate()?;
    Ok(lp)
}

/// Residuals of the optimality system of the selector at a primal/dual pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KktReport {
    /// Primal feasibility: `max_j (|Delta_j| / c_j - 1)_+`.
    pub r1: f64,
    /// Dual feasibility: `max_j (|(A~ eta)_j| / lambda_j - 1)_+`.
    pub r2: f64,
    /// `|eta' A~ beta - sum_j lambda_j |beta_j||`.
    pub r3: f64,
    /// `|eta' Delta(beta) - sum_j bound_j |gamma_j||`.
    pub r4: f64,
}

impl KktReport {
    pub fn max(&self) -> f64 {
        self.r1.max(self.r2).max(self.r3).max(self.r4)
    }
}

/// Evaluates the four optimality residuals. `gamma_hat` holds the multiplier
/// differences of the two `Delta` constraint blocks; `eta_j = scale_j gamma_j`.
pub fn verify_kkt(problem: &AldsProblem, beta_hat: &[f64], gamma_hat: &[f64]) -> KktReport {
    let p = problem.dim();
    let delta = problem.delta(beta_hat);
    let mut eta = vec![0.0; p];
    let mut r1 = 0.0f64;
    let mut gamma_norm = 0.0;
    for j in 0..p {
        if let Some((scale, bound)) = problem.row_scale(j) {
            eta[j] = scale * gamma_hat[j];
            gamma_norm += bound * gamma_hat[j].abs();
            r1 = r1.max(delta[j].abs() * scale / bound - 1.0);
        }
    }
    let a_eta: Vec<f64> = (0..p)
        .map(|j| dot2(problem.a_tilde.row(j).transpose().as_slice(), &eta))
        .collect();
    let mut r2 = 0.0f64;
    let mut penalty = 0.0;
    for j in 0..p {
        match problem.coord(j) {
            Coord::Penalized(l) => {
                r2 = r2.max(a_eta[j].abs() / l - 1.0);
                penalty += l * beta_hat[j].abs();
            }
            Coord::Unpenalized => r2 = r2.max(a_eta[j].abs()),
            Coord::Frozen => {}
        }
    }
    let r3 = (dot2(&a_eta, beta_hat) - penalty).abs();
    let r4 = (dot2(&eta, &delta) - gamma_norm).abs();
    KktReport {
        r1: r1.max(0.0),
        r2: r2.max(0.0),
        r3,
        r4,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AldsSolution {
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub report: KktReport,
    pub objective: f64,
    pub lp_iterations: usize,
    pub lp_gap: f64,
}

/// Solves the selector LP and certifies the solution.
///
/// Internally the LP is solved in an equivalent, better-scaled form: the
/// objective and penalty rows are divided by the largest finite weight and
/// each `Delta` row by the largest entry of its row of `A~`. Multipliers are
/// mapped back to the unscaled rows of [`build_alds_lp`].
pub fn solve_alds(problem: &AldsProblem) -> Result<AldsSolution> {
    let p = problem.dim();
    let lam_bar = (0..p)
        .filter_map(|j| match problem.coord(j) {
            Coord::Penalized(l) => Some(l),
            _ => None,
        })
        .fold(0.0f64, f64::max);
    let lam_bar = if lam_bar > 0.0 { lam_bar } else { 1.0 };
    let d = problem.offset();
    let row_norm: Vec<f64> = (0..p)
        .map(|j| {
            let n = problem.a_tilde.row(j).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if n > 0.0 {
                n
            } else {
                1.0
            }
        })
        .collect();

    let mut c = vec![0.0; 2 * p];
    let mut g = DMatrix::zeros(4 * p, 2 * p);
    let mut h = vec![0.0; 4 * p];
    let mut lower = vec![f64::NEG_INFINITY; p];
    lower.extend(vec![0.0; p]);
    let mut upper = vec![f64::INFINITY; 2 * p];
    for j in 0..p {
        let coef = match problem.coord(j) {
            Coord::Penalized(l) => {
                c[p + j] = 1.0;
                l / lam_bar
            }
            Coord::Unpenalized => 0.0,
            Coord::Frozen => {
                c[p + j] = 1.0;
                lower[j] = 0.0;
                upper[j] = 0.0;
                0.0
            }
        };
        g[(j, j)] = coef;
        g[(j, p + j)] = -1.0;
        g[(p + j, j)] = -coef;
        g[(p + j, p + j)] = -1.0;
        match problem.half_width(j) {
            Some(cw) => {
                let n = row_norm[j];
                for k in 0..p {
                    let a = problem.a_tilde[(j, k)] / n;
                    g[(2 * p + j, k)] = -a;
                    g[(3 * p + j, k)] = a;
                }
                h[2 * p + j] = cw / n - d[j] / n;
                h[3 * p + j] = cw / n + d[j] / n;
            }
            None => {
                h[2 * p + j] = 1.0;
                h[3 * p + j] = 1.0;
            }
        }
    }
    let lp = LinearProgram::new(c).with_inequalities(g, h).with_bounds(lower, upper);
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Unbounded => return Err(Error::Unbounded),
        LpStatus::Infeasible => {
            return Err(Error::Internal(format!(
                "selector LP reported infeasible (p = {p}, mu = {}, largest weight = {lam_bar:e})",
                problem.mu
            )))
        }
    }

    let mut beta = sol.x[..p].to_vec();
    let mut gamma = vec![0.0; p];
    for j in 0..p {
        if let Some((scale, _)) = problem.row_scale(j) {
            let eta = lam_bar * (sol.dual_ineq[2 * p + j] - sol.dual_ineq[3 * p + j]) / row_norm[j];
            gamma[j] = eta / scale;
        }
    }
    hard_zero(&mut beta);
    repair_feasibility(problem, &mut beta);
    let report = verify_kkt(problem, &beta, &gamma);
    let objective = (0..p)
        .map(|j| match problem.coord(j) {
            Coord::Penalized(l) => l * beta[j].abs(),
            _ => 0.0,
        })
        .sum();
    Ok(AldsSolution {
        beta,
        gamma,
        report,
        objective,
        lp_iterations: sol.iterations,
        lp_gap: sol.gap,
    })
}

fn slab_violation(problem: &AldsProblem, delta: &[f64]) -> (f64, Vec<f64>) {
    let ratios: Vec<f64> = (0..problem.dim())
        .map(|j| problem.half_width(j).map_or(0.0, |c| delta[j].abs() / c))
        .collect();
    let r1 = ratios.iter().fold(0.0f64, |m, r| m.max(r - 1.0));
    (r1, ratios)
}

/// Violations below this are left alone: rows stay exactly where the LP put
/// them, so complementary slackness is untouched.
const REPAIR_THRESHOLD: f64 = 1e-10;

/// Pulls near-tight `Delta` rows back inside their slabs by moving the
/// nonzero coefficients, when rounding left the LP vertex outside by more
/// than [`REPAIR_THRESHOLD`]. Each tight row is shrunk by its own margin.
fn repair_feasibility(problem: &AldsProblem, beta: &mut [f64]) {
    let p = problem.dim();
    for _ in 0..3 {
        let delta = problem.delta(beta);
        let (r1, ratios) = slab_violation(problem, &delta);
        if r1 <= REPAIR_THRESHOLD {
            return;
        }
        let support: Vec<usize> = (0..p).filter(|&j| beta[j] != 0.0).collect();
        let tight: Vec<usize> = (0..p).filter(|&j| problem.half_width(j).is_some() && ratios[j] > 1.0 - 1e-3).collect();
        if support.is_empty() || tight.is_empty() {
            return;
        }
        // rounding of beta itself perturbs Delta_j by about eps * sum_k |A_jk beta_k|
        let shrink: Vec<f64> = tight
            .iter()
            .map(|&j| {
                let mag: f64 = (0..p).map(|k| (problem.a_tilde[(j, k)] * beta[k]).abs()).sum();
                let noise = 8.0 * f64::EPSILON * mag / problem.half_width(j).unwrap_or(1.0);
                (2.0 * (ratios[j] - 1.0).max(0.0) + 4.0 * noise + 1e-12).min(0.5)
            })
            .collect();
        let sub = DMatrix::from_fn(tight.len(), support.len(), |r, c| problem.a_tilde[(tight[r], support[c])]);
        let rhs = DVector::from_fn(tight.len(), |r, _| shrink[r] * delta[tight[r]]);
        let step = if tight.len() == support.len() {
            sub.lu().solve(&rhs)
        } else {
            sub.svd(true, true).solve(&rhs, 1e-14).ok()
        };
        let Some(step) = step else { return };
        let mut cand = beta.to_vec();
        for (k, &j) in support.iter().enumerate() {
            cand[j] += step[k];
        }
        let (cand_r1, _) = slab_violation(problem, &problem.delta(&cand));
        if cand_r1 < r1 {
            beta.copy_from_slice(&cand);
        } else {
            return;
        }
    }
}

/// Adaptive linearized Dantzig selector fit. `beta_tilde` defaults to the MLE.
pub fn fit_alds(scheme: &QuadratureScheme, lambdas: &PenaltyWeights, beta_tilde: Option<&[f64]>) -> Result<FitResult> {
    let p = scheme.dim();
    if lambdas.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: lambdas.len(),
        });
    }
    let pilot = match beta_tilde {
        Some(b) => b.to_vec(),
        None => mle(scheme, None, NewtonOptions::default())?.beta,
    };
    let problem = AldsProblem::from_scheme(scheme, lambdas.clone(), &pilot)?;
    fit_alds_problem(scheme, &problem)
}

/// Fit from an already linearized problem, so a path can share `U~` and `A~`.
pub fn fit_alds_problem(scheme: &QuadratureScheme, problem: &AldsProblem) -> Result<FitResult> {
    let sol = solve_alds(problem)?;
    let mut ws = LikelihoodWorkspace::new(scheme);
    let loglik = ws.loglik(&sol.beta)?;
    Ok(FitResult {
        method: Method::Alds,
        support: support_of(&sol.beta),
        coefficients: Coefficients {
            beta: sol.beta,
            names: scheme.column_names().to_vec(),
        },
        objective: sol.objective,
        loglik,
        outer_iterations: sol.lp_iterations,
        inner_iterations: 0,
        kkt_residual: sol.report.max(),
        lambda: None,
        penalty: problem.lambdas.as_slice().to_vec(),
        stats: scheme.stats().cloned(),
        clamped: ws.clamped(),
        objective_trace: Vec::new(),
    })
}
