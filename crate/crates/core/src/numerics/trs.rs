//! Exact maximization of `b'β + β'Qβ` over the Euclidean ball `‖β‖ ≤ r`.
//!
//! `Q` is diagonalised once; in the eigenbasis the stationarity condition
//! reads `y_i = b̃_i / (2(μ − λ_i))` with multiplier `μ ≥ max(λ_max, 0)`.
//! The boundary multiplier is the root of the secular equation
//! `1/‖y(μ)‖ − 1/r = 0`, found by safeguarded Newton iteration. When `b̃`
//! vanishes on the leading eigenspace and the remaining components do not
//! reach the boundary (the "hard case"), the solution is completed along a
//! leading eigenvector.

use crate::error::{LabError, Result};
use nalgebra::{DMatrix, DVector};

const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TrsProblem {
    pub q: DMatrix<f64>,
    pub b: DVector<f64>,
    pub radius: f64,
}

impl TrsProblem {
    pub fn new(q: DMatrix<f64>, b: DVector<f64>, radius: f64) -> Result<Self> {
        let p = Self { q, b, radius };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.b.len();
        if self.q.nrows() != d || self.q.ncols() != d {
            return Err(LabError::Argument(format!(
                "Q is {}x{} but b has length {d}",
                self.q.nrows(),
                self.q.ncols()
            )));
        }
        if !(self.radius >= 0.0) || !self.radius.is_finite() {
            return Err(LabError::Argument(format!("radius {} must be finite and >= 0", self.radius)));
        }
        for i in 0..d {
            for j in 0..i {
                if (self.q[(i, j)] - self.q[(j, i)]).abs() > SYMMETRY_TOL {
                    return Err(LabError::Argument(format!("Q not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrsSolution {
    pub maximizer: DVector<f64>,
    pub value: f64,
    /// Multiplier of the ball constraint (0 for interior solutions).
    pub multiplier: f64,
    pub hard_case: bool,
}

/// Solves `max b'β + β'Qβ s.t. ‖β‖ ≤ r`.
pub fn solve_trs(p: &TrsProblem) -> Result<TrsSolution> {
    p.validate()?;
    TrsSolver::new(&p.q)?.solve(&p.b, p.radius)
}

/// A trust-region solver with a cached eigendecomposition of `Q`, so that
/// many `(b, r)` pairs can be solved against the same quadratic form.
#[derive(Debug, Clone)]
pub struct TrsSolver {
    q: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    lambda_max: f64,
    leading: usize,
}

impl TrsSolver {
    pub fn new(q: &DMatrix<f64>) -> Result<Self> {
        let d = q.nrows();
        if q.ncols() != d {
            return Err(LabError::Argument("Q must be square".into()));
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(LabError::Numeric("Q has non-finite entries".into()));
        }
        let sym = (q + q.transpose()) * 0.5;
        let (eigenvalues, eigenvectors) = if d == 0 {
            (DVector::zeros(0), DMatrix::zeros(0, 0))
        } else {
            let eig = sym
                .clone()
                .try_symmetric_eigen(f64::EPSILON, 10_000 * d.max(1))
                .ok_or_else(|| LabError::Numeric("symmetric eigendecomposition did not converge".into()))?;
            (eig.eigenvalues, eig.eigenvectors)
        };
        let (leading, lambda_max) = eigenvalues
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, l)| if l > acc.1 { (i, l) } else { acc });
        Ok(Self {
            q: sym,
            eigenvalues,
            eigenvectors,
            lambda_max,
            leading,
        })
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    /// Largest eigenvalue of `Q` (−∞ for the empty problem).
    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn objective(&self, b: &DVector<f64>, beta: &DVector<f64>) -> f64 {
        b.dot(beta) + beta.dot(&(&self.q * beta))
    }

    pub fn solve(&self, b: &DVector<f64>, radius: f64) -> Result<TrsSolution> {
        let d = self.dim();
        if b.len() != d {
            return Err(LabError::Argument(format!("b has length {} but Q is {d}x{d}", b.len())));
        }
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(LabError::Argument(format!("radius {radius} must be finite and >= 0")));
        }
        if radius == 0.0 || d == 0 {
            return Ok(TrsSolution {
                maximizer: DVector::zeros(d),
                value: 0.0,
                multiplier: 0.0,
                hard_case: false,
            });
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(LabError::Numeric("b has non-finite entries".into()));
        }
        let bt = self.eigenvectors.transpose() * b;
        let lam = &self.eigenvalues;
        let scale = lam.amax().max(b.amax()).max(1e-300);
        let eig_tol = 1e-12 * scale;
        let b_tol = 1e-14 * b.norm().max(scale * radius);
        let lmax = self.lambda_max;

        let norm_at = |mu: f64, skip_leading: bool| -> f64 {
            let mut s = 0.0;
            for i in 0..d {
                if skip_leading && lam[i] >= lmax - eig_tol {
                    continue;
                }
                let y = bt[i] / (2.0 * (mu - lam[i]));
                s += y * y;
            }
            s.sqrt()
        };

        let (mu, hard) = if lmax < -eig_tol {
            // Strictly concave: try the unconstrained maximizer first.
            if norm_at(0.0, false) <= radius {
                (0.0, false)
            } else {
                (self.secular_root(&bt, radius, 0.0)?, false)
            }
        } else {
            let lead_mass: f64 = (0..d)
                .filter(|&i| lam[i] >= lmax - eig_tol)
                .map(|i| bt[i] * bt[i])
                .sum::<f64>()
                .sqrt();
            let floor = lmax.max(0.0);
            if lead_mass > b_tol {
                (self.secular_root(&bt, radius, floor)?, false)
            } else if norm_at(floor, true) >= radius {
                (self.secular_root_skipping(&bt, radius, floor, eig_tol)?, false)
            } else {
                (floor, true)
            }
        };

        let mut y = DVector::zeros(d);
        for i in 0..d {
            let near_leading = lam[i] >= lmax - eig_tol;
            if hard && near_leading {
                continue;
            }
            let denom = 2.0 * (mu - lam[i]);
            y[i] = if denom == 0.0 { 0.0 } else { bt[i] / denom };
        }
        if hard {
            let rest = y.norm();
            // A leading eigenvalue that is only numerically zero but negative
            // gains nothing from moving to the boundary.
            let tau = if lmax < 0.0 { 0.0 } else { (radius * radius - rest * rest).max(0.0).sqrt() };
            y[self.leading] = tau;
        }
        let beta = &self.eigenvectors * y;
        let value = self.objective(b, &beta);
        Ok(TrsSolution {
            maximizer: beta,
            value,
            multiplier: mu,
            hard_case: hard,
        })
    }

    fn secular_root(&self, bt: &DVector<f64>, radius: f64, floor: f64) -> Result<f64> {
        self.secular_root_skipping(bt, radius, floor, -1.0)
    }

    /// Root in `μ > floor` of `1/‖y(μ)‖ − 1/r`, where components whose
    /// eigenvalue lies within `skip_tol` of `λ_max` are ignored (they carry
    /// no mass in the hard-case branch). A negative `skip_tol` keeps all.
    fn secular_root_skipping(&self, bt: &DVector<f64>, radius: f64, floor: f64, skip_tol: f64) -> Result<f64> {
        let lam = &self.eigenvalues;
        let lmax = self.lambda_max;
        let keep = |i: usize| skip_tol < 0.0 || lam[i] < lmax - skip_tol;
        // ‖y(μ)‖² and its derivative.
        let eval = |mu: f64| -> (f64, f64) {
            let mut n2 = 0.0;
            let mut dn2 = 0.0;
            for i in 0..bt.len() {
                if !keep(i) {
                    continue;
                }
                let den = mu - lam[i];
                let y = bt[i] / (2.0 * den);
                n2 += y * y;
                dn2 += -2.0 * y * y / den;
            }
            (n2, dn2)
        };
        let bnorm = bt.norm();
        let mut lo = floor;
        let mut hi = floor.max(lmax) + bnorm / (2.0 * radius) + 1e-300;
        // Guarantee ‖y(hi)‖ ≤ r.
        while eval(hi).0.sqrt() > radius {
            hi = floor + 2.0 * (hi - floor);
            if !hi.is_finite() {
                return Err(LabError::Numeric("secular bracket diverged".into()));
            }
        }
        let mut mu = hi;
        for _ in 0..500 {
            let (n2, dn2) = eval(mu);
            let n = n2.sqrt();
            if n > radius {
                lo = mu;
            } else {
                hi = mu;
            }
            if (n - radius).abs() <= 1e-15 * radius || hi - lo <= 1e-16 * hi.abs().max(1e-300) {
                return Ok(mu);
            }
            // Newton on φ(μ) = 1/‖y‖ − 1/r, φ' = −(1/2)‖y‖^{-3} d‖y‖²/dμ.
            let phi = 1.0 / n - 1.0 / radius;
            let dphi = -0.5 * dn2 / (n2 * n);
            let mut next = mu - phi / dphi;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            mu = next;
        }
        Ok(mu)
    }
}
