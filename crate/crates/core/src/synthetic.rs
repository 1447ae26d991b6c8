//! Synthetic inputs: the bundled smooth covariate rasters used by the
//! simulation study, and small random quadrature schemes for tests and
//! benchmarks.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::geometry::{CovariateField, Point, Window};
use crate::quadrature::QuadratureScheme;

pub const BUNDLED_FIELDS: usize = 15;
pub const BUNDLED_COLS: usize = 50;
pub const BUNDLED_ROWS: usize = 25;
const BUMPS_PER_FIELD: usize = 40;

/// Names of the bundled covariates, `z01` .. `z15`.
pub fn bundled_names() -> Vec<String> {
    (1..=BUNDLED_FIELDS).map(|k| format!("z{k:02}")).collect()
}

/// Fifteen smooth random fields on a 50 x 25 raster spanning `window`.
/// Each is a sum of Gaussian bumps, standardized to mean 0 and variance 1
/// over its cells. Identical `seed` gives identical rasters.
pub fn bundled_covariates(seed: u64, window: &Window) -> Result<Vec<CovariateField>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (nc, nr) = (BUNDLED_COLS, BUNDLED_ROWS);
    bundled_names()
        .into_iter()
        .map(|name| {
            let bumps: Vec<(f64, f64, f64, f64)> = (0..BUMPS_PER_FIELD)
                .map(|_| {
                    let cx = rng.random::<f64>() * nc as f64;
                    let cy = rng.random::<f64>() * nr as f64;
                    let amp: f64 = StandardNormal.sample(&mut rng);
                    let bw = 2.5 + 4.5 * rng.random::<f64>();
                    (cx, cy, amp, bw)
                })
                .collect();
            let mut values = Vec::with_capacity(nr * nc);
            for r in 0..nr {
                for c in 0..nc {
                    let (x, y) = (c as f64 + 0.5, r as f64 + 0.5);
                    let v: f64 = bumps
                        .iter()
                        .map(|&(cx, cy, a, bw)| a * (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * bw * bw)).exp())
                        .sum();
                    values.push(v);
                }
            }
            let raw = CovariateField::new(
                name,
                nr,
                nc,
                (window.x_min(), window.y_min()),
                (window.width() / nc as f64, window.height() / nr as f64),
                values,
            )?;
            Ok(raw.standardized())
        })
        .collect()
}

/// A random scheme with `m` data points and `max(2m, 20)` dummy points,
/// weights summing to `area`, an intercept column and `p - 1` Gaussian
/// covariate columns with standard deviation 0.5.
pub fn random_scheme(seed: u64, m: usize, p: usize, area: f64) -> QuadratureScheme {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = m + (2 * m).max(20);
    let raw: Vec<f64> = (0..total).map(|_| 0.2 + rng.random::<f64>()).collect();
    let sum: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w * area / sum).collect();
    let design = DMatrix::from_fn(total, p, |_, j| {
        if j == 0 {
            1.0
        } else {
            0.5 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
        }
    });
    let points = (0..total).map(|i| Point::new(i as f64, 0.0)).collect();
    let mut names = vec!["(Intercept)".to_string()];
    names.extend((1..p).map(|j| format!("x{j}")));
    QuadratureScheme::from_parts(points, weights, m, design, names, Some(0)).expect("valid random scheme")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_fields_are_standardized_and_reproducible() {
        let w = Window::new(0.0, 1000.0, 0.0, 500.0).unwrap();
        let a = bundled_covariates(7, &w).unwrap();
        let b = bundled_covariates(7, &w).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 15);
        for f in &a {
            let n = f.values().len() as f64;
            let mean = f.values().iter().sum::<f64>() / n;
            let var = f.values().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-12);
            assert!(f.covers(&w));
        }
        assert_ne!(a, bundled_covariates(8, &w).unwrap());
    }

    #[test]
    fn random_scheme_weights_sum_to_area() {
        let s = random_scheme(1, 10, 3, 2.5);
        assert!((s.weights().iter().sum::<f64>() - 2.5).abs() < 1e-12);
        assert_eq!(s.n_data(), 10);
        assert_eq!(s.dim(), 3);
    }
}
