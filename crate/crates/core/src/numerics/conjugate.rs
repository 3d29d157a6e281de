//! Convex conjugates `Φ*(v) = sup_{u ≥ 0} { uv − Φ(u) }` of increasing
//! convex functions starting at 0.

use crate::error::{LabError, Result};
use serde::{Deserialize, Serialize};

/// An increasing convex function on `[0, ∞)` with `Φ(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConvexPhi {
    /// `Φ(u) = u² / scale²`, the case of a linear `𝒥(s) = scale·s`.
    Quadratic { scale: f64 },
    /// Piecewise-linear interpolation of `(u, Φ(u))` nodes; `+∞` past the
    /// last node.
    Tabulated { u: Vec<f64>, phi: Vec<f64> },
}

impl ConvexPhi {
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            ConvexPhi::Quadratic { scale } => u * u / (scale * scale),
            ConvexPhi::Tabulated { u: us, phi } => {
                if u <= 0.0 {
                    return 0.0;
                }
                let last = us.len() - 1;
                if u > us[last] {
                    return f64::INFINITY;
                }
                let j = us.partition_point(|x| *x < u).clamp(1, last);
                let t = (u - us[j - 1]) / (us[j] - us[j - 1]);
                phi[j - 1] + t * (phi[j] - phi[j - 1])
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            ConvexPhi::Quadratic { scale } => {
                if !(*scale > 0.0 && scale.is_finite()) {
                    return Err(LabError::Validation(format!("quadratic scale {scale} must be positive")));
                }
            }
            ConvexPhi::Tabulated { u, phi } => {
                if u.len() != phi.len() || u.len() < 2 {
                    return Err(LabError::Validation("table needs >= 2 matching (u, phi) nodes".into()));
                }
                if u[0] != 0.0 || phi[0] != 0.0 {
                    return Err(LabError::Validation("table must start at (0, 0)".into()));
                }
                let mut prev_slope = f64::NEG_INFINITY;
                for k in 1..u.len() {
                    let du = u[k] - u[k - 1];
                    if !(du > 0.0) {
                        return Err(LabError::Validation(format!("u not strictly increasing at node {k}")));
                    }
                    let slope = (phi[k] - phi[k - 1]) / du;
                    if !(slope > 0.0) {
                        return Err(LabError::Validation(format!("phi not strictly increasing at node {k}")));
                    }
                    if slope < prev_slope - 1e-12 * prev_slope.abs().max(1.0) {
                        return Err(LabError::Validation(format!("phi is not convex at node {}", k - 1)));
                    }
                    prev_slope = slope;
                }
            }
        }
        Ok(())
    }
}

/// Grid used by the generic supremum route.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridBounds {
    pub upper: f64,
    pub points: usize,
}

impl Default for GridBounds {
    fn default() -> Self {
        Self {
            upper: 1e3,
            points: 1_000_000,
        }
    }
}

/// `max_{u ∈ grid} { uv − Φ(u) }` over `points` equispaced nodes of
/// `[0, upper]`.
pub fn grid_supremum<F: Fn(f64) -> f64>(phi: F, v: f64, bounds: GridBounds) -> f64 {
    let step = bounds.upper / (bounds.points.max(2) - 1) as f64;
    (0..bounds.points.max(2))
        .map(|i| {
            let u = i as f64 * step;
            u * v - phi(u)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// A validated function together with its conjugate.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugatePair {
    phi: ConvexPhi,
}

impl ConjugatePair {
    pub fn phi(&self) -> &ConvexPhi {
        &self.phi
    }

    pub fn eval_phi(&self, u: f64) -> f64 {
        self.phi.eval(u)
    }

    /// `Φ*(v)` for `v ≥ 0`.
    pub fn eval_conjugate(&self, v: f64) -> f64 {
        match &self.phi {
            ConvexPhi::Quadratic { scale } => {
                let v = v.max(0.0);
                scale * scale * v * v / 4.0
            }
            // The supremum of uv − Φ(u) over a piecewise-linear Φ is
            // attained at a node.
            ConvexPhi::Tabulated { u, phi } => u
                .iter()
                .zip(phi)
                .map(|(x, p)| x * v - p)
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Builds the conjugate of `phi`, rejecting non-convex or non-increasing
/// tables.
pub fn conjugate(phi: ConvexPhi) -> Result<ConjugatePair> {
    phi.validate()?;
    Ok(ConjugatePair { phi })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_examples() {
        let p = conjugate(ConvexPhi::Quadratic { scale: 2.0 }).unwrap();
        assert!((p.eval_conjugate(0.2) - 0.04).abs() < 1e-15);
        assert_eq!(p.eval_conjugate(0.0), 0.0);
        let p = conjugate(ConvexPhi::Quadratic { scale: 1.0 }).unwrap();
        assert!((p.eval_conjugate(2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn closed_form_matches_grid_oracle() {
        let bounds = GridBounds {
            upper: 100.0,
            points: 1_000_001,
        };
        for (scale, v) in [(2.0, 0.2), (1.0, 2.0), (0.5, 3.0)] {
            let p = conjugate(ConvexPhi::Quadratic { scale }).unwrap();
            let oracle = grid_supremum(|u| u * u / (scale * scale), v, bounds);
            assert!((p.eval_conjugate(v) - oracle).abs() < 1e-8, "scale {scale} v {v}");
        }
    }

    #[test]
    fn tabulated_conjugate_is_vertex_supremum() {
        let us: Vec<f64> = (0..=200).map(|i| i as f64 * 0.05).collect();
        let phi: Vec<f64> = us.iter().map(|u| u * u / 4.0).collect();
        let p = conjugate(ConvexPhi::Tabulated { u: us, phi }).unwrap();
        // Inside the table range the piecewise-linear conjugate is close to A²v²/4.
        assert!((p.eval_conjugate(0.2) - 0.04).abs() < 1e-3);
        assert_eq!(p.eval_conjugate(0.0), 0.0);
    }

    #[test]
    fn rejects_non_convex_table() {
        let err = conjugate(ConvexPhi::Tabulated {
            u: vec![0.0, 1.0, 2.0],
            phi: vec![0.0, 2.0, 2.5],
        });
        assert!(matches!(err, Err(LabError::Validation(_))));
    }
}
