//! Shared numerical primitives.

pub mod conjugate;
pub mod projection;
pub mod quadrature;
pub mod trs;

pub use conjugate::{conjugate, grid_supremum, ConjugatePair, ConvexPhi, GridBounds};
pub use quadrature::{gauss_legendre, integrate, QuadratureRule};
pub use trs::{solve_trs, TrsProblem, TrsSolution, TrsSolver};
