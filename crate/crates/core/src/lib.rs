//! Simulation laboratory for the excess risk of constrained least-squares
//! regression with random design and heteroscedastic bounded noise.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: composite Gauss–Legendre quadrature, an exact
//!   trust-region subproblem solver, convex conjugates and projections.
//! - [`dictionary`]: orthonormal histogram and trigonometric families.
//! - [`scenario`]: the data-generating model and its population functionals.
//! - [`erm`]: the least-squares estimator over a sup-norm ball of the span.
//! - [`locproc`]: localized suprema of the linear, quadratic and full
//!   empirical processes and their Monte Carlo expectations.
//! - [`bounds`]: closed-form deviation thresholds.
//! - [`harness`]: seeded trial ensembles that check every inequality.

pub mod bounds;
pub mod dictionary;
pub mod erm;
pub mod error;
pub mod harness;
pub mod locproc;
pub mod model;
pub mod numerics;
pub mod rng;
pub mod scenario;

pub use error::{LabError, Result};
