//! Sparse log-linear intensity estimation for planar point patterns.
//!
//! The intensity model is `rho(u; beta) = exp(beta' z(u))` with covariates
//! `z(u)` read from rasters. Two regularized estimators are provided on top
//! of the Berman-Turner discretization of the Poisson composite likelihood:
//!
//! * the adaptive lasso ([`al::fit_al`]), solved by IRLS + coordinate descent;
//! * the adaptive linearized Dantzig selector ([`alds::fit_alds`]), solved as
//!   a linear program by a built-in simplex solver whose dual solution is
//!   checked against the problem's KKT conditions.
//!
//! [`tuning`] selects the penalty level by BIC, [`simulate`] draws Poisson
//! and Thomas patterns, and [`harness`] runs Monte Carlo selection studies.

pub mod al;
pub mod alds;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod io;
pub mod likelihood;
pub mod lp;
pub mod quadrature;
pub mod simulate;
pub mod synthetic;
pub mod tuning;

pub use al::{fit_al, fit_mle, AlOptions, FitResult, Method, PenaltyWeights};
pub use alds::{fit_alds, AldsProblem};
pub use error::{Error, Result};
pub use geometry::{Coefficients, CovariateField, ModelSpec, Point, PointPattern, Window};
pub use quadrature::{build_scheme, QuadGrid, QuadratureScheme};
