//! Inhomogeneous Poisson and Thomas cluster process simulation for
//! log-linear intensities over piecewise-constant covariate rasters.
//!
//! Every draw comes from a `ChaCha8Rng` seeded with `seed_from_u64(seed)`
//! and positioned on stream `stream`, so replicate `r` of a study is
//! reproducible regardless of how many replicates run or in which order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::{dot, integrate_intensity, CovariateField, Design, ModelSpec, Point, PointPattern, Window};

pub const RNG_ALGORITHM: &str = "chacha8";

/// Expected proposal counts beyond this are rejected as a configuration error.
const MAX_PROPOSALS: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngSpec {
    pub seed: u64,
    pub stream: u64,
}

impl RngSpec {
    pub fn new(seed: u64) -> Self {
        RngSpec { seed, stream: 0 }
    }

    /// Independent stream for replicate `r` under a common seed.
    pub fn replicate(seed: u64, r: u64) -> Self {
        RngSpec { seed, stream: r }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThomasParams {
    /// Parent intensity (points per unit area).
    pub kappa: f64,
    /// Standard deviation of the Gaussian offspring displacement.
    pub gamma: f64,
}

impl ThomasParams {
    pub fn new(kappa: f64, gamma: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite() && gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "Thomas parameters must be positive: kappa = {kappa}, gamma = {gamma}"
            )));
        }
        Ok(ThomasParams { kappa, gamma })
    }
}

/// `rho(u) = exp(beta' z(u))` with its exact maximum over the window.
struct Intensity<'a> {
    design: Design<'a>,
    beta: &'a [f64],
    rho_max: f64,
    row: Vec<f64>,
}

impl<'a> Intensity<'a> {
    fn new(window: &Window, spec: &'a ModelSpec, fields: &'a [CovariateField], beta: &'a [f64]) -> Result<Self> {
        let design = Design::resolve(spec, fields)?;
        if beta.len() != design.dim() {
            return Err(Error::DimensionMismatch {
                expected: design.dim(),
                got: beta.len(),
            });
        }
        let rho_max = design
            .pieces(window)?
            .iter()
            .map(|(_, row)| dot(row, beta).exp())
            .fold(0.0f64, f64::max);
        if !rho_max.is_finite() {
            return Err(Error::NumericRange("maximum intensity overflows".into()));
        }
        let row = vec![0.0; design.dim()];
        Ok(Intensity {
            design,
            beta,
            rho_max,
            row,
        })
    }

    fn at(&mut self, u: Point) -> Result<f64> {
        self.design.fill_row(u, &mut self.row)?;
        Ok(dot(&self.row, self.beta).exp())
    }
}

fn poisson_count(rng: &mut ChaCha8Rng, mean: f64) -> Result<u64> {
    if mean == 0.0 {
        return Ok(0);
    }
    if !(mean > 0.0 && mean <= MAX_PROPOSALS) {
        return Err(Error::NumericRange(format!("expected proposal count {mean:e} is out of range")));
    }
    let d = Poisson::new(mean).map_err(|e| Error::NumericRange(e.to_string()))?;
    Ok(d.sample(rng) as u64)
}

fn uniform_in(rng: &mut ChaCha8Rng, w: &Window) -> Point {
    let x = w.x_min() + w.width() * rng.random::<f64>();
    let y = w.y_min() + w.height() * rng.random::<f64>();
    Point::new(x, y)
}

/// Inhomogeneous Poisson pattern with intensity `exp(beta' z(u))`, by
/// thinning a homogeneous proposal at the maximal raster intensity.
pub fn sim_poisson(
    window: &Window,
    spec: &ModelSpec,
    fields: &[CovariateField],
    beta: &[f64],
    rng: RngSpec,
) -> Result<PointPattern> {
    let mut rho = Intensity::new(window, spec, fields, beta)?;
    let mut rng = rng.rng();
    let n = poisson_count(&mut rng, rho.rho_max * window.area())?;
    let mut points = Vec::new();
    for _ in 0..n {
        let u = uniform_in(&mut rng, window);
        let keep = rng.random::<f64>() * rho.rho_max;
        if keep < rho.at(u)? {
            points.push(u);
        }
    }
    PointPattern::new(points, *window)
}

/// Thomas cluster pattern whose first-order intensity is `exp(beta' z(u))`
/// (up to edge truncation).
///
/// Parents are homogeneous Poisson with intensity `kappa` on the window
/// dilated by `4 gamma`. Each parent receives `Poisson(rho_max / kappa)`
/// offspring displaced by `N(0, gamma^2 I)`; offspring outside the window
/// are dropped and the rest kept with probability `rho(u) / rho_max`.
pub fn sim_thomas(
    window: &Window,
    spec: &ModelSpec,
    fields: &[CovariateField],
    beta: &[f64],
    params: ThomasParams,
    rng: RngSpec,
) -> Result<PointPattern> {
    let params = ThomasParams::new(params.kappa, params.gamma)?;
    let mut rho = Intensity::new(window, spec, fields, beta)?;
    let mut rng = rng.rng();
    let parent_window = window.dilate(4.0 * params.gamma)?;
    let n_parents = poisson_count(&mut rng, params.kappa * parent_window.area())?;
    let per_parent = rho.rho_max / params.kappa;
    if n_parents as f64 * per_parent > MAX_PROPOSALS {
        return Err(Error::NumericRange("expected offspring count is out of range".into()));
    }
    let mut points = Vec::new();
    for _ in 0..n_parents {
        let c = uniform_in(&mut rng, &parent_window);
        let n_off = poisson_count(&mut rng, per_parent)?;
        for _ in 0..n_off {
            let dx: f64 = StandardNormal.sample(&mut rng);
            let dy: f64 = StandardNormal.sample(&mut rng);
            let keep = rng.random::<f64>() * rho.rho_max;
            let u = Point::new(c.x + params.gamma * dx, c.y + params.gamma * dy);
            if window.contains(u) && keep < rho.at(u)? {
                points.push(u);
            }
        }
    }
    PointPattern::new(points, *window)
}

/// Intercept making `integral over window of exp(beta' z) = mu`, with the
/// other coefficients of `beta` held fixed. Because the intercept enters
/// as a factor `exp(b)`, the solution is `ln mu - ln integral(exp(rest))`,
/// using the exact piecewise integral.
pub fn tune_intercept(
    window: &Window,
    spec: &ModelSpec,
    fields: &[CovariateField],
    beta: &[f64],
    mu: f64,
) -> Result<f64> {
    let i0 = spec
        .intercept_index()
        .ok_or_else(|| Error::InvalidArgument("tuning the intercept needs an intercept column".into()))?;
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidArgument(format!("target mean count {mu} must be positive")));
    }
    let design = Design::resolve(spec, fields)?;
    let mut rest = beta.to_vec();
    if rest.len() != design.dim() {
        return Err(Error::DimensionMismatch {
            expected: design.dim(),
            got: rest.len(),
        });
    }
    rest[i0] = 0.0;
    let integral = integrate_intensity(&design, &rest, window)?;
    if !(integral > 0.0) {
        return Err(Error::NumericRange("intensity integral underflows".into()));
    }
    Ok(mu.ln() - integral.ln())
}
