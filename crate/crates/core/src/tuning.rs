//! Adaptive penalty weights, BIC, and selection of the scalar tuning level.

use crate::al::{fit_al, AlOptions, FitResult, Method, PenaltyWeights};
use crate::alds::{fit_alds_problem, AldsProblem};
use crate::error::{Error, Result};
use crate::io::Table;
use crate::likelihood::{loglik, mle, mle_restricted, score, NewtonOptions};
use crate::quadrature::QuadratureScheme;

/// `lambda_j = lambda |b~_j|^(-nu)`; the intercept stays unpenalized and a
/// zero pilot coefficient gets an infinite weight (frozen at zero) unless
/// `lambda = 0`.
pub fn adaptive_weights(beta_tilde: &[f64], nu: f64, lambda: f64, intercept: Option<usize>) -> Result<PenaltyWeights> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::InvalidArgument(format!("nu = {nu} must be positive")));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda = {lambda} must be non-negative")));
    }
    let w = beta_tilde
        .iter()
        .enumerate()
        .map(|(j, b)| {
            if Some(j) == intercept || lambda == 0.0 {
                0.0
            } else if *b == 0.0 {
                f64::INFINITY
            } else {
                lambda * b.abs().powf(-nu)
            }
        })
        .collect();
    PenaltyWeights::new(w)
}

/// `-2 l + p* log m`.
pub fn bic_value(loglik: f64, p_star: usize, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::EmptyPattern);
    }
    Ok(-2.0 * loglik + p_star as f64 * (m as f64).ln())
}

/// BIC of a fit, with the discretized log-likelihood re-evaluated at its
/// coefficients and `p*` the size of its support.
pub fn bic(fit: &FitResult, scheme: &QuadratureScheme) -> Result<f64> {
    let ll = loglik(scheme, fit.beta())?;
    bic_value(ll, fit.support.len(), scheme.n_data())
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    /// `n` log-spaced values from `lambda_max` down to `ratio * lambda_max`.
    Auto { n: usize, ratio: f64 },
    /// Explicit values; sorted into decreasing order.
    Explicit(Vec<f64>),
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Auto { n: 50, ratio: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuningOptions {
    pub nu: f64,
    pub grid: GridSpec,
    pub al: AlOptions,
}

impl Default for TuningOptions {
    fn default() -> Self {
        TuningOptions {
            nu: 1.0,
            grid: GridSpec::default(),
            al: AlOptions::default(),
        }
    }
}

/// Smallest scalar `lambda` at which every penalized adaptive-lasso
/// coefficient is zero: the subgradient threshold at the restricted MLE
/// over the unpenalized coordinates.
pub fn lambda_max(scheme: &QuadratureScheme, beta_tilde: &[f64], nu: f64) -> Result<f64> {
    let p = scheme.dim();
    let penalized: Vec<bool> = (0..p).map(|j| Some(j) != scheme.intercept() && beta_tilde[j] != 0.0).collect();
    let free: Vec<bool> = (0..p).map(|j| Some(j) == scheme.intercept()).collect();
    let null = if free.iter().any(|f| *f) {
        mle_restricted(scheme, &free, Some(&vec![0.0; p]), NewtonOptions::default())?.beta
    } else {
        vec![0.0; p]
    };
    let u = score(scheme, &null)?;
    let mu = scheme.n_data() as f64;
    Ok((0..p)
        .filter(|&j| penalized[j])
        .map(|j| u[j].abs() * beta_tilde[j].abs().powf(nu) / mu)
        .fold(0.0, f64::max))
}

/// Decreasing grid of scalar tuning levels.
pub fn lambda_grid(spec: &GridSpec, lambda_max: f64) -> Result<Vec<f64>> {
    match spec {
        GridSpec::Auto { n, ratio } => {
            if *n == 0 || !(*ratio > 0.0 && *ratio < 1.0) {
                return Err(Error::InvalidArgument(format!("bad grid: n = {n}, ratio = {ratio}")));
            }
            if !(lambda_max > 0.0) {
                return Ok(vec![0.0]);
            }
            if *n == 1 {
                return Ok(vec![lambda_max]);
            }
            let (hi, lo) = (lambda_max.ln(), (lambda_max * ratio).ln());
            Ok((0..*n)
                .map(|k| (hi + (lo - hi) * k as f64 / (*n - 1) as f64).exp())
                .collect())
        }
        GridSpec::Explicit(values) => {
            if values.is_empty() || values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return Err(Error::InvalidArgument("grid values must be finite and non-negative".into()));
            }
            let mut v = values.clone();
            v.sort_by(|a, b| b.total_cmp(a));
            v.dedup();
            Ok(v)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathPoint {
    pub lambda: f64,
    pub fit: std::result::Result<FitResult, String>,
    /// `NaN` when the fit failed.
    pub bic: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaPath {
    pub method: Method,
    pub beta_tilde: Vec<f64>,
    pub points: Vec<PathPoint>,
    pub selected: usize,
}

impl LambdaPath {
    pub fn grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.lambda).collect()
    }

    pub fn selected_fit(&self) -> &FitResult {
        self.points[self.selected]
            .fit
            .as_ref()
            .expect("selected path point holds a fit")
    }

    pub fn selected_lambda(&self) -> f64 {
        self.points[self.selected].lambda
    }

    /// Columns `lambda, BIC, p_star`, then one column per coefficient.
    pub fn to_table(&self, names: &[String]) -> Table {
        let mut header = vec!["lambda".to_string(), "BIC".to_string(), "p_star".to_string()];
        header.extend(names.iter().cloned());
        let mut t = Table::new(header);
        for pt in &self.points {
            let mut row = vec![pt.lambda.to_string()];
            match &pt.fit {
                Ok(f) => {
                    row.push(pt.bic.to_string());
                    row.push(f.support.len().to_string());
                    row.extend(f.beta().iter().map(|b| b.to_string()));
                }
                Err(_) => row.extend(std::iter::repeat("NA".to_string()).take(2 + names.len())),
            }
            t.push(row);
        }
        t
    }
}

/// Index minimizing BIC over successful fits; ties go to the larger `lambda`.
fn argmin_bic(points: &[PathPoint]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, pt) in points.iter().enumerate() {
        if pt.fit.is_err() || pt.bic.is_nan() {
            continue;
        }
        if best.is_none_or(|b| pt.bic < points[b].bic) {
            best = Some(k);
        }
    }
    best
}

/// Computes the MLE pilot and tunes `method` along the grid by BIC.
pub fn select_lambda(scheme: &QuadratureScheme, method: Method, opts: &TuningOptions) -> Result<LambdaPath> {
    let pilot = mle(scheme, None, NewtonOptions::default())?.beta;
    select_lambda_with_pilot(scheme, method, &pilot, opts)
}

/// As [`select_lambda`] with a given pilot estimate.
pub fn select_lambda_with_pilot(
    scheme: &QuadratureScheme,
    method: Method,
    beta_tilde: &[f64],
    opts: &TuningOptions,
) -> Result<LambdaPath> {
    let p = scheme.dim();
    if beta_tilde.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: beta_tilde.len(),
        });
    }
    let lmax = match opts.grid {
        GridSpec::Auto { .. } => lambda_max(scheme, beta_tilde, opts.nu)?,
        GridSpec::Explicit(_) => 0.0,
    };
    let grid = lambda_grid(&opts.grid, lmax)?;
    let intercept = scheme.intercept();
    let mut points = Vec::with_capacity(grid.len());

    match method {
        Method::Mle => return Err(Error::InvalidArgument("tuning requires a penalized method".into())),
        Method::Al => {
            let mut warm = beta_tilde.to_vec();
            for &lambda in &grid {
                let fit = adaptive_weights(beta_tilde, opts.nu, lambda, intercept)
                    .and_then(|w| fit_al(scheme, &w, Some(&warm), opts.al));
                if let Ok(f) = &fit {
                    warm = f.beta().to_vec();
                }
                points.push(path_point(scheme, lambda, fit));
            }
        }
        Method::Alds => {
            let base = AldsProblem::from_scheme(scheme, PenaltyWeights::zeros(p), beta_tilde)?;
            for &lambda in &grid {
                let fit = adaptive_weights(beta_tilde, opts.nu, lambda, intercept)
                    .and_then(|w| base.with_lambdas(w))
                    .and_then(|pr| fit_alds_problem(scheme, &pr));
                points.push(path_point(scheme, lambda, fit));
            }
        }
    }

    let selected = argmin_bic(&points).ok_or_else(|| {
        let first = points.iter().find_map(|p| p.fit.as_ref().err().cloned()).unwrap_or_default();
        Error::Internal(format!("every fit along the tuning path failed; first failure: {first}"))
    })?;
    Ok(LambdaPath {
        method,
        beta_tilde: beta_tilde.to_vec(),
        points,
        selected,
    })
}

fn path_point(scheme: &QuadratureScheme, lambda: f64, fit: Result<FitResult>) -> PathPoint {
    match fit.and_then(|mut f| {
        f.lambda = Some(lambda);
        let b = bic(&f, scheme)?;
        Ok((f, b))
    }) {
        Ok((f, b)) => PathPoint {
            lambda,
            fit: Ok(f),
            bic: b,
        },
        Err(e) => PathPoint {
            lambda,
            fit: Err(e.to_string()),
            bic: f64::NAN,
        },
    }
}
