//! Adaptive lasso: IRLS outer loop around a coordinate-descent solver for
//! the penalized weighted least-squares subproblem.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{ColumnStats, Coefficients};
use crate::likelihood::{mle, LikelihoodWorkspace, NewtonOptions};
use crate::quadrature::QuadratureScheme;

/// Coefficients with `|beta_j|` below this are stored as exactly zero.
pub const HARD_ZERO: f64 = 1e-10;

/// Per-coefficient penalty levels `lambda_j >= 0`. An infinite entry freezes
/// the coefficient at zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PenaltyWeights(Vec<f64>);

impl PenaltyWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0)) {
            return Err(Error::InvalidArgument(format!("penalty weight {w} is negative or NaN")));
        }
        Ok(PenaltyWeights(weights))
    }

    pub fn uniform(p: usize, lambda: f64) -> Result<Self> {
        PenaltyWeights::new(vec![lambda; p])
    }

    /// Uniform `lambda` with the intercept (if any) left unpenalized.
    pub fn uniform_free_intercept(p: usize, lambda: f64, intercept: Option<usize>) -> Result<Self> {
        let mut w = vec![lambda; p];
        if let Some(i0) = intercept {
            w[i0] = 0.0;
        }
        PenaltyWeights::new(w)
    }

    pub fn zeros(p: usize) -> Self {
        PenaltyWeights(vec![0.0; p])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, j: usize) -> f64 {
        self.0[j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_frozen(&self, j: usize) -> bool {
        self.0[j].is_infinite()
    }

    pub fn scaled(&self, c: f64) -> PenaltyWeights {
        PenaltyWeights(self.0.iter().map(|w| if *w == 0.0 { 0.0 } else { w * c }).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    #[serde(rename = "MLE")]
    Mle,
    #[serde(rename = "AL")]
    Al,
    #[serde(rename = "ALDS")]
    Alds,
}

impl Method {
    pub fn tag(&self) -> &'static str {
        match self {
            Method::Mle => "MLE",
            Method::Al => "AL",
            Method::Alds => "ALDS",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub method: Method,
    pub coefficients: Coefficients,
    /// Indices `j` with `beta_j != 0`.
    pub support: Vec<usize>,
    pub objective: f64,
    pub loglik: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub kkt_residual: f64,
    /// Scalar tuning level the penalties were derived from, when known.
    pub lambda: Option<f64>,
    pub penalty: Vec<f64>,
    pub stats: Option<ColumnStats>,
    /// The exp clamp was active at the solution; treat the fit as suspect.
    pub clamped: bool,
    /// Penalized objective after each accepted outer iteration (AL only).
    pub objective_trace: Vec<f64>,
}

impl FitResult {
    pub fn beta(&self) -> &[f64] {
        &self.coefficients.beta
    }

    /// Coefficients on the raw covariate scale when the design was standardized.
    pub fn original_scale(&self, intercept: Option<usize>) -> Coefficients {
        match &self.stats {
            Some(s) => self.coefficients.to_original_scale(s, intercept),
            None => self.coefficients.clone(),
        }
    }
}

pub(crate) fn hard_zero(beta: &mut [f64]) {
    for b in beta.iter_mut() {
        if b.abs() < HARD_ZERO {
            *b = 0.0;
        }
    }
}

pub(crate) fn support_of(beta: &[f64]) -> Vec<usize> {
    (0..beta.len()).filter(|&j| beta[j] != 0.0).collect()
}

/// IRLS working responses `y*` and weights `psi` at `beta_check`.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkingData {
    pub y_star: Vec<f64>,
    pub psi: Vec<f64>,
}

/// `psi_i = w_i exp(eta_i)`, `y*_i = eta_i + (y_i - exp(eta_i)) / exp(eta_i)`.
pub fn irls_working_data(scheme: &QuadratureScheme, beta_check: &[f64]) -> Result<WorkingData> {
    let mut ws = LikelihoodWorkspace::new(scheme);
    working_data_from(&mut ws, beta_check)
}

fn working_data_from(ws: &mut LikelihoodWorkspace<'_>, beta: &[f64]) -> Result<WorkingData> {
    ws.update(beta)?;
    let s = ws.scheme();
    let mut y_star = Vec::with_capacity(s.len());
    let mut psi = Vec::with_capacity(s.len());
    for i in 0..s.len() {
        let (eta, rho) = (ws.eta()[i], ws.rho()[i]);
        y_star.push(eta + (s.response(i) - rho) / rho);
        psi.push(s.weights()[i] * rho);
    }
    if y_star.iter().chain(&psi).any(|v| !v.is_finite()) {
        return Err(Error::NumericRange("IRLS working data are not finite".into()));
    }
    Ok(WorkingData { y_star, psi })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdSolution {
    pub beta: Vec<f64>,
    pub cycles: usize,
    /// KKT residual of the penalized least-squares objective.
    pub kkt_residual: f64,
}

fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// Coordinate descent on
/// `(1/2N) sum_i psi_i (y*_i - z_i' beta)^2 + sum_j lambda_j |beta_j|`.
#[allow(clippy::too_many_arguments)]
pub fn cd_solve(
    work: &WorkingData,
    design: &DMatrix<f64>,
    lambdas: &PenaltyWeights,
    normalizer: f64,
    init: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<CdSolution> {
    let n = design.nrows();
    if work.y_star.len() != n || work.psi.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: work.y_star.len().min(work.psi.len()),
        });
    }
    let gram = crate::likelihood::weighted_gram(design, &work.psi);
    let wy: Vec<f64> = work.psi.iter().zip(&work.y_star).map(|(p, y)| p * y).collect();
    let b = design.transpose() * DVector::from_vec(wy);
    cd_solve_gram(&gram, b.as_slice(), lambdas, normalizer, init, tol, max_iter)
}

/// Covariance-update form of [`cd_solve`]: `gram = Z' Psi Z`, `b = Z' Psi y*`.
pub fn cd_solve_gram(
    gram: &DMatrix<f64>,
    b: &[f64],
    lambdas: &PenaltyWeights,
    normalizer: f64,
    init: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<CdSolution> {
    let p = gram.ncols();
    for len in [b.len(), lambdas.len(), init.len()] {
        if len != p {
            return Err(Error::DimensionMismatch { expected: p, got: len });
        }
    }
    if !(normalizer > 0.0) {
        return Err(Error::InvalidArgument("normalizer must be positive".into()));
    }
    for j in 0..p {
        if !lambdas.is_frozen(j) && !(gram[(j, j)] > 0.0 && gram[(j, j)].is_finite()) {
            return Err(Error::DegenerateColumn(format!("column {j}")));
        }
    }
    let mut beta: Vec<f64> = (0..p)
        .map(|j| if lambdas.is_frozen(j) { 0.0 } else { init[j] })
        .collect();
    let all: Vec<usize> = (0..p).filter(|&j| !lambdas.is_frozen(j)).collect();

    let sweep = |beta: &mut [f64], idx: &[usize]| -> f64 {
        let mut max_change = 0.0f64;
        for &j in idx {
            let row = gram.row(j);
            let fitted: f64 = row.iter().zip(beta.iter()).map(|(g, x)| g * x).sum();
            let r = b[j] - fitted + gram[(j, j)] * beta[j];
            let new = soft_threshold(r, lambdas.get(j) * normalizer) / gram[(j, j)];
            max_change = max_change.max((new - beta[j]).abs());
            beta[j] = new;
        }
        max_change
    };

    let mut cycles = 0;
    loop {
        let change = sweep(&mut beta, &all);
        cycles += 1;
        if change < tol {
            break;
        }
        if cycles >= 2 {
            let active: Vec<usize> = all
                .iter()
                .copied()
                .filter(|&j| beta[j] != 0.0 || lambdas.get(j) == 0.0)
                .collect();
            loop {
                if cycles >= max_iter {
                    break;
                }
                let c = sweep(&mut beta, &active);
                cycles += 1;
                if c < tol {
                    break;
                }
            }
        }
        if cycles >= max_iter {
            return Err(Error::NotConverged {
                what: "coordinate descent",
                iterations: cycles,
                last: beta,
            });
        }
    }

    let grad = gram * DVector::from_column_slice(&beta);
    let kkt = all
        .iter()
        .map(|&j| {
            let g = (b[j] - grad[j]) / normalizer;
            subgradient_violation(g, beta[j], lambdas.get(j))
        })
        .fold(0.0, f64::max);
    Ok(CdSolution {
        beta,
        cycles,
        kkt_residual: kkt,
    })
}

/// Violation of `g in lambda * d|beta|`.
fn subgradient_violation(g: f64, beta: f64, lambda: f64) -> f64 {
    if beta != 0.0 {
        (g - lambda * beta.signum()).abs()
    } else {
        (g.abs() - lambda).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlOptions {
    pub tol_outer: f64,
    pub tol_inner: f64,
    pub max_outer: usize,
    pub max_inner: usize,
}

impl Default for AlOptions {
    fn default() -> Self {
        AlOptions {
            tol_outer: 1e-7,
            tol_inner: 1e-9,
            max_outer: 100,
            max_inner: 100_000,
        }
    }
}

/// `-l(beta)/mu + sum_j lambda_j |beta_j|` over non-frozen coordinates.
pub fn penalized_objective(
    ws: &mut LikelihoodWorkspace<'_>,
    beta: &[f64],
    lambdas: &PenaltyWeights,
    mu: f64,
) -> Result<f64> {
    let ll = ws.loglik(beta)?;
    let pen: f64 = (0..beta.len())
        .filter(|&j| !lambdas.is_frozen(j) && lambdas.get(j) > 0.0)
        .map(|j| lambdas.get(j) * beta[j].abs())
        .sum();
    Ok(-ll / mu + pen)
}

/// KKT residual of the adaptive-lasso problem at `beta`, with `mu = N(D)`.
pub fn al_kkt_residual(scheme: &QuadratureScheme, beta: &[f64], lambdas: &PenaltyWeights) -> Result<f64> {
    let mu = scheme.n_data() as f64;
    let u = LikelihoodWorkspace::new(scheme).score(beta)?;
    Ok((0..beta.len())
        .filter(|&j| !lambdas.is_frozen(j))
        .map(|j| subgradient_violation(u[j] / mu, beta[j], lambdas.get(j)))
        .fold(0.0, f64::max))
}

/// Adaptive lasso estimate. `init` defaults to the unpenalized MLE.
pub fn fit_al(
    scheme: &QuadratureScheme,
    lambdas: &PenaltyWeights,
    init: Option<&[f64]>,
    opts: AlOptions,
) -> Result<FitResult> {
    let p = scheme.dim();
    if lambdas.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: lambdas.len(),
        });
    }
    if scheme.n_data() == 0 {
        return Err(Error::EmptyPattern);
    }
    let mu = scheme.n_data() as f64;
    let mut beta = match init {
        Some(b) if b.len() != p => return Err(Error::DimensionMismatch { expected: p, got: b.len() }),
        Some(b) => b.to_vec(),
        None => mle(scheme, None, NewtonOptions::default())?.beta,
    };
    for j in 0..p {
        if lambdas.is_frozen(j) {
            beta[j] = 0.0;
        }
    }

    let mut ws = LikelihoodWorkspace::new(scheme);
    let mut objective = penalized_objective(&mut ws, &beta, lambdas, mu)?;
    let mut trace = vec![objective];
    let mut history: Vec<Vec<f64>> = vec![beta.clone()];
    let mut inner_total = 0;
    let mut converged = false;
    let mut outer = 0;

    while outer < opts.max_outer {
        outer += 1;
        let work = working_data_from(&mut ws, &beta)?;
        let cd = cd_solve(&work, scheme.design(), lambdas, mu, &beta, opts.tol_inner, opts.max_inner)?;
        inner_total += cd.cycles;

        // Backtrack towards the previous iterate until the exact objective
        // does not increase.
        let slack = 1e-10 * (1.0 + objective.abs());
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=30 {
            let cand: Vec<f64> = beta
                .iter()
                .zip(&cd.beta)
                .map(|(old, new)| old + t * (new - old))
                .collect();
            if let Ok(obj) = penalized_objective(&mut ws, &cand, lambdas, mu) {
                if obj <= objective + slack {
                    accepted = Some((cand, obj));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((next, obj)) = accepted else {
            converged = true;
            break;
        };
        let change = next
            .iter()
            .zip(&beta)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        beta = next;
        objective = obj.min(objective);
        trace.push(obj);
        if change < opts.tol_outer {
            converged = true;
            break;
        }
        let revisits = history
            .iter()
            .rev()
            .skip(1)
            .take(3)
            .any(|h| h.iter().zip(&beta).all(|(a, b)| (a - b).abs() < opts.tol_outer));
        if revisits {
            return Err(Error::Oscillation { last: beta });
        }
        history.push(beta.clone());
        if history.len() > 4 {
            history.remove(0);
        }
    }
    if !converged {
        return Err(Error::NotConverged {
            what: "adaptive lasso IRLS",
            iterations: outer,
            last: beta,
        });
    }

    hard_zero(&mut beta);
    let kkt = al_kkt_residual(scheme, &beta, lambdas)?;
    let loglik = ws.loglik(&beta)?;
    let objective = penalized_objective(&mut ws, &beta, lambdas, mu)?;
    Ok(FitResult {
        method: Method::Al,
        support: support_of(&beta),
        coefficients: Coefficients {
            beta,
            names: scheme.column_names().to_vec(),
        },
        objective,
        loglik,
        outer_iterations: outer,
        inner_iterations: inner_total,
        kkt_residual: kkt,
        lambda: None,
        penalty: lambdas.as_slice().to_vec(),
        stats: scheme.stats().cloned(),
        clamped: ws.clamped(),
        objective_trace: trace,
    })
}

/// Unpenalized fit wrapped as a [`FitResult`].
pub fn fit_mle(scheme: &QuadratureScheme, opts: NewtonOptions) -> Result<FitResult> {
    let fit = mle(scheme, None, opts)?;
    let mut beta = fit.beta;
    hard_zero(&mut beta);
    let mu = scheme.n_data() as f64;
    Ok(FitResult {
        method: Method::Mle,
        support: support_of(&beta),
        coefficients: Coefficients {
            beta,
            names: scheme.column_names().to_vec(),
        },
        objective: -fit.loglik / mu,
        loglik: fit.loglik,
        outer_iterations: fit.iterations,
        inner_iterations: 0,
        kkt_residual: fit.score_norm / mu,
        lambda: Some(0.0),
        penalty: vec![0.0; scheme.dim()],
        stats: scheme.stats().cloned(),
        clamped: fit.clamped,
        objective_trace: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::likelihood::score;
    use crate::synthetic::random_scheme;

    #[test]
    fn working_data_at_zero() {
        let s = random_scheme(3, 25, 2, 1.0);
        let wd = irls_working_data(&s, &[0.0, 0.0]).unwrap();
        for i in 0..s.len() {
            assert!((wd.psi[i] - s.weights()[i]).abs() < 1e-15);
            assert!((wd.y_star[i] - (s.response(i) - 1.0)).abs() < 1e-12);
        }
        let beta = [0.3, -0.7];
        let wd = irls_working_data(&s, &beta).unwrap();
        for i in s.n_data()..s.len() {
            let eta = s.design()[(i, 0)] * beta[0] + s.design()[(i, 1)] * beta[1];
            assert!((wd.y_star[i] - (eta - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn quadratic_model_gradient_matches_score() {
        let s = random_scheme(7, 40, 3, 1.0);
        let beta = [0.2, 0.4, -0.1];
        let wd = irls_working_data(&s, &beta).unwrap();
        let u = score(&s, &beta).unwrap();
        // d/dbeta of -1/2 sum psi (y* - z'beta)^2 at beta = sum psi z (y* - z'beta)
        for j in 0..3 {
            let g: f64 = (0..s.len())
                .map(|i| {
                    let eta: f64 = (0..3).map(|k| s.design()[(i, k)] * beta[k]).sum();
                    wd.psi[i] * s.design()[(i, j)] * (wd.y_star[i] - eta)
                })
                .sum();
            assert!((g - u[j]).abs() <= 1e-8 * u[j].abs().max(1.0), "{g} vs {}", u[j]);
        }
    }

    #[test]
    fn one_coordinate_closed_form() {
        // sum z y* = 3, sum z^2 = 1, lambda * N = 1  =>  beta = S(3, 1) / 1 = 2
        let z = DMatrix::from_row_slice(1, 1, &[1.0]);
        let wd = WorkingData {
            y_star: vec![3.0],
            psi: vec![1.0],
        };
        let sol = cd_solve(&wd, &z, &PenaltyWeights::uniform(1, 0.5).unwrap(), 2.0, &[0.0], 1e-12, 100).unwrap();
        assert!((sol.beta[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn unpenalized_cd_is_weighted_least_squares() {
        let s = random_scheme(11, 30, 3, 1.0);
        let wd = irls_working_data(&s, &[0.1, 0.2, 0.3]).unwrap();
        let z = s.design();
        let sol = cd_solve(&wd, z, &PenaltyWeights::zeros(3), 10.0, &[0.0; 3], 1e-13, 100_000).unwrap();
        let g = crate::likelihood::weighted_gram(z, &wd.psi);
        let rhs = z.transpose() * DVector::from_iterator(s.len(), wd.psi.iter().zip(&wd.y_star).map(|(p, y)| p * y));
        let direct = g.lu().solve(&rhs).unwrap();
        for j in 0..3 {
            assert!((sol.beta[j] - direct[j]).abs() < 1e-8);
        }
    }

    #[test]
    fn degenerate_column_named() {
        let z = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        let wd = WorkingData {
            y_star: vec![1.0, 2.0],
            psi: vec![1.0, 1.0],
        };
        let err = cd_solve(&wd, &z, &PenaltyWeights::zeros(2), 1.0, &[0.0; 2], 1e-9, 10).unwrap_err();
        assert!(matches!(err, Error::DegenerateColumn(c) if c.contains('1')));
    }

    #[test]
    fn zero_lambda_reproduces_mle() {
        let s = random_scheme(5, 60, 3, 1.0);
        let m = mle(&s, None, NewtonOptions { tol: 1e-12, max_iter: 50 }).unwrap();
        let fit = fit_al(&s, &PenaltyWeights::zeros(3), Some(&[0.0; 3]), AlOptions::default()).unwrap();
        for j in 0..3 {
            assert!((fit.beta()[j] - m.beta[j]).abs() < 1e-6);
        }
        assert_eq!(fit.support, vec![0, 1, 2]);
    }

    #[test]
    fn huge_penalty_gives_zero() {
        let s = random_scheme(5, 60, 3, 1.0);
        let fit = fit_al(&s, &PenaltyWeights::uniform(3, 1e6).unwrap(), None, AlOptions::default()).unwrap();
        assert!(fit.beta().iter().all(|&b| b == 0.0));
        assert!(fit.support.is_empty());
    }

    #[test]
    fn frozen_coefficient_stays_zero() {
        let s = random_scheme(8, 60, 3, 1.0);
        let w = PenaltyWeights::new(vec![0.0, f64::INFINITY, 0.01]).unwrap();
        let fit = fit_al(&s, &w, None, AlOptions::default()).unwrap();
        assert_eq!(fit.beta()[1], 0.0);
        assert!(fit.kkt_residual < 1e-6);
    }

    #[test]
    fn empty_pattern_aborts() {
        let s = random_scheme(1, 0, 2, 1.0);
        assert!(matches!(
            fit_al(&s, &PenaltyWeights::zeros(2), Some(&[0.0, 0.0]), AlOptions::default()),
            Err(Error::EmptyPattern)
        ));
    }

    #[test]
    fn negative_weights_rejected() {
        assert!(PenaltyWeights::new(vec![0.1, -1.0]).is_err());
        assert!(PenaltyWeights::new(vec![f64::NAN]).is_err());
    }
}
