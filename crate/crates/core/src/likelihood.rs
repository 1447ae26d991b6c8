//! Discretized Poisson composite likelihood: log-likelihood, score,
//! sensitivity matrix, and the unpenalized maximizer.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::quadrature::QuadratureScheme;

/// Linear predictors are clamped to `[-ETA_CLAMP, ETA_CLAMP]` before `exp`.
pub const ETA_CLAMP: f64 = 700.0;

/// Caches `eta_i = beta' z_i` and `rho_i = exp(eta_i)` for the last `beta`.
#[derive(Debug, Clone)]
pub struct LikelihoodWorkspace<'a> {
    scheme: &'a QuadratureScheme,
    beta: Option<Vec<f64>>,
    eta: Vec<f64>,
    rho: Vec<f64>,
    clamped: bool,
}

impl<'a> LikelihoodWorkspace<'a> {
    pub fn new(scheme: &'a QuadratureScheme) -> Self {
        LikelihoodWorkspace {
            scheme,
            beta: None,
            eta: vec![0.0; scheme.len()],
            rho: vec![0.0; scheme.len()],
            clamped: false,
        }
    }

    pub fn scheme(&self) -> &'a QuadratureScheme {
        self.scheme
    }

    /// Re-evaluates the cache unless it already holds `beta`.
    pub fn update(&mut self, beta: &[f64]) -> Result<()> {
        let p = self.scheme.dim();
        if beta.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: beta.len(),
            });
        }
        if self.beta.as_deref() == Some(beta) {
            return Ok(());
        }
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::NumericRange("non-finite coefficient".into()));
        }
        let z = self.scheme.design();
        self.eta.iter_mut().for_each(|e| *e = 0.0);
        for (j, b) in beta.iter().enumerate() {
            if *b != 0.0 {
                for (e, zij) in self.eta.iter_mut().zip(z.column(j).iter()) {
                    *e += zij * b;
                }
            }
        }
        self.clamped = false;
        for (r, e) in self.rho.iter_mut().zip(self.eta.iter_mut()) {
            if e.abs() > ETA_CLAMP {
                *e = e.clamp(-ETA_CLAMP, ETA_CLAMP);
                self.clamped = true;
            }
            *r = e.exp();
        }
        self.beta = Some(beta.to_vec());
        Ok(())
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    /// Whether any linear predictor hit the clamp at the cached `beta`.
    pub fn clamped(&self) -> bool {
        self.clamped
    }

    pub fn loglik(&mut self, beta: &[f64]) -> Result<f64> {
        self.update(beta)?;
        let s = self.scheme;
        let data_term: f64 = (0..s.n_data()).map(|i| self.eta[i]).sum();
        let integral: f64 = s.weights().iter().zip(&self.rho).map(|(w, r)| w * r).sum();
        finite(data_term - integral, "log-likelihood")
    }

    pub fn score(&mut self, beta: &[f64]) -> Result<DVector<f64>> {
        self.update(beta)?;
        let s = self.scheme;
        let z = s.design();
        let mut u = DVector::zeros(s.dim());
        for j in 0..s.dim() {
            let col = z.column(j);
            let data: f64 = (0..s.n_data()).map(|i| col[i]).sum();
            let integral: f64 = col
                .iter()
                .zip(s.weights())
                .zip(&self.rho)
                .map(|((zij, w), r)| zij * w * r)
                .sum();
            u[j] = finite(data - integral, "score")?;
        }
        Ok(u)
    }

    pub fn sensitivity(&mut self, beta: &[f64]) -> Result<DMatrix<f64>> {
        self.update(beta)?;
        let s = self.scheme;
        let wr: Vec<f64> = s.weights().iter().zip(&self.rho).map(|(w, r)| w * r).collect();
        let a = weighted_gram(s.design(), &wr);
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericRange("sensitivity matrix overflows".into()));
        }
        Ok(a)
    }
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NumericRange(format!("{what} is not finite")))
    }
}

/// `Z' diag(w) Z`, exactly symmetric.
pub fn weighted_gram(z: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let p = z.ncols();
    let mut g = DMatrix::zeros(p, p);
    for j in 0..p {
        let cj = z.column(j);
        for k in 0..=j {
            let ck = z.column(k);
            let v: f64 = cj.iter().zip(ck.iter()).zip(w).map(|((a, b), w)| a * b * w).sum();
            g[(j, k)] = v;
            g[(k, j)] = v;
        }
    }
    g
}

/// `l(beta) = sum_i w_i {y_i log rho_i - rho_i}`.
pub fn loglik(scheme: &QuadratureScheme, beta: &[f64]) -> Result<f64> {
    LikelihoodWorkspace::new(scheme).loglik(beta)
}

/// `U(beta) = sum_i w_i z_i (y_i - rho_i)`.
pub fn score(scheme: &QuadratureScheme, beta: &[f64]) -> Result<DVector<f64>> {
    LikelihoodWorkspace::new(scheme).score(beta)
}

/// `A(beta) = sum_i w_i z_i z_i' rho_i = -dU/dbeta'`.
pub fn sensitivity(scheme: &QuadratureScheme, beta: &[f64]) -> Result<DMatrix<f64>> {
    LikelihoodWorkspace::new(scheme).sensitivity(beta)
}

/// Solves `a x = b` for symmetric positive definite `a`, reporting
/// numerical rank deficiency.
pub fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let max_diag = a.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::RankDeficient("matrix is not positive definite".into()))?;
    let min_pivot = chol.l_dirty().diagonal().iter().fold(f64::INFINITY, |m, v| m.min(v * v));
    if !(min_pivot > 1e-13 * max_diag) {
        return Err(Error::RankDeficient(format!(
            "pivot {min_pivot:e} is negligible relative to {max_diag:e}"
        )));
    }
    Ok(chol.solve(b))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Convergence when `max|U| / M < tol`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-8,
            max_iter: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MleFit {
    pub beta: Vec<f64>,
    pub iterations: usize,
    pub loglik: f64,
    /// `max|U(beta)|` at the returned point.
    pub score_norm: f64,
    /// The linear predictor clamp was active at the solution.
    pub clamped: bool,
}

/// Starting point: intercept at `log(m / |D|)`, everything else zero.
pub fn default_start(scheme: &QuadratureScheme) -> Vec<f64> {
    let mut beta = vec![0.0; scheme.dim()];
    if let (Some(i0), true) = (scheme.intercept(), scheme.n_data() > 0) {
        beta[i0] = (scheme.n_data() as f64 / scheme.area()).ln();
    }
    beta
}

/// Maximum discretized composite likelihood estimate by damped Newton.
pub fn mle(scheme: &QuadratureScheme, init: Option<&[f64]>, opts: NewtonOptions) -> Result<MleFit> {
    let free = vec![true; scheme.dim()];
    mle_restricted(scheme, &free, init, opts)
}

/// Newton ascent over the coordinates flagged in `free`; the others stay at
/// their starting values.
pub fn mle_restricted(
    scheme: &QuadratureScheme,
    free: &[bool],
    init: Option<&[f64]>,
    opts: NewtonOptions,
) -> Result<MleFit> {
    let p = scheme.dim();
    if free.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: free.len(),
        });
    }
    if scheme.n_data() == 0 {
        return Err(Error::EmptyPattern);
    }
    let idx: Vec<usize> = (0..p).filter(|&j| free[j]).collect();
    let mut beta = match init {
        Some(b) if b.len() != p => {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: b.len(),
            })
        }
        Some(b) => b.to_vec(),
        None => default_start(scheme),
    };
    let m_total = scheme.len() as f64;
    let mut ws = LikelihoodWorkspace::new(scheme);

    for iter in 0..=opts.max_iter {
        let u = ws.score(&beta)?;
        let norm = idx.iter().fold(0.0f64, |m, &j| m.max(u[j].abs()));
        let a = ws.sensitivity(&beta)?;
        let k = idx.len();
        let a_ff = DMatrix::from_fn(k, k, |r, c| a[(idx[r], idx[c])]);
        let u_f = DVector::from_fn(k, |r, _| u[idx[r]]);
        // factorizing before the convergence test also rejects a
        // non-identifiable start that happens to have zero score
        let step = solve_spd(&a_ff, &u_f)?;
        if norm / m_total < opts.tol {
            let ll = ws.loglik(&beta)?;
            return Ok(MleFit {
                iterations: iter,
                loglik: ll,
                score_norm: norm,
                clamped: ws.clamped(),
                beta,
            });
        }
        if iter == opts.max_iter {
            break;
        }

        let ll0 = ws.loglik(&beta)?;
        let slack = 1e-12 * (1.0 + ll0.abs());
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=30 {
            let mut cand = beta.clone();
            for (r, &j) in idx.iter().enumerate() {
                cand[j] += t * step[r];
            }
            if let Ok(ll) = ws.loglik(&cand) {
                if ll >= ll0 - slack {
                    accepted = Some(cand);
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some(c) => beta = c,
            None => break,
        }
    }
    Err(Error::NotConverged {
        what: "Newton iteration",
        iterations: opts.max_iter,
        last: beta,
    })
}
