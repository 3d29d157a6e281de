//! Least-squares estimation over `𝒢 = {g⁰ + h : h ∈ span, ‖h‖_∞ ≤ radius}`.

use crate::dictionary::{Dictionary, DictionaryKind};
use crate::error::{LabError, Result};
use crate::numerics::projection::{dykstra, project_box, project_slab};
use crate::numerics::TrsSolver;
use crate::scenario::Dataset;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Grid size for the sampled sup-norm constraint of smooth dictionaries.
pub const BALL_CAP_POINTS: usize = 512;

const PG_REL_TOL: f64 = 1e-12;
const PG_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    /// Histogram: the sup-norm ball is exactly the box `|β_k − θ⁰_k| ≤ r/√D`.
    Box,
    /// Sup-norm ball sampled at [`BALL_CAP_POINTS`] grid points, intersected
    /// with the outer box `|β_k − θ⁰_k| ≤ r` (valid since
    /// `|β_k − θ⁰_k| ≤ ‖h‖₂ ≤ ‖h‖_∞`).
    BallCap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConstraint {
    kind: ConstraintKind,
    radius: f64,
    center: DVector<f64>,
    half_width: f64,
    /// Basis vectors `φ(x_j)` at the sampled points (ball-cap only).
    rows: Vec<DVector<f64>>,
}

impl ModelConstraint {
    pub fn for_dictionary(dict: &Dictionary, center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(LabError::Argument(format!("constraint radius {radius} must be positive")));
        }
        if center.len() != dict.size() {
            return Err(LabError::Argument("center dimension does not match dictionary".into()));
        }
        let d = dict.size();
        let center = DVector::from_vec(center);
        Ok(match dict.kind() {
            DictionaryKind::Histogram => Self {
                kind: ConstraintKind::Box,
                radius,
                center,
                half_width: radius / (d as f64).sqrt(),
                rows: Vec::new(),
            },
            DictionaryKind::Fourier => {
                let mut buf = vec![0.0; d];
                let rows = (0..BALL_CAP_POINTS)
                    .map(|j| {
                        dict.eval_all(j as f64 / BALL_CAP_POINTS as f64, &mut buf);
                        DVector::from_column_slice(&buf)
                    })
                    .collect();
                Self {
                    kind: ConstraintKind::BallCap,
                    radius,
                    center,
                    half_width: radius,
                    rows,
                }
            }
        })
    }

    pub fn kind(&self) -> ConstraintKind {
        self.kind
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    /// Per-coordinate half width of the (outer) box.
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Largest `s` with `{‖β − θ⁰‖ ≤ s}` inside the constraint set.
    pub fn s_box(&self) -> f64 {
        match self.kind {
            ConstraintKind::Box => self.half_width,
            ConstraintKind::BallCap => {
                let worst = self.rows.iter().map(|w| w.norm()).fold(1.0, f64::max);
                self.radius / worst
            }
        }
    }

    /// Largest constraint violation of `beta` (0 when feasible).
    pub fn violation(&self, beta: &DVector<f64>) -> f64 {
        let h = beta - &self.center;
        let box_v = h.iter().map(|v| v.abs() - self.half_width).fold(0.0, f64::max);
        let slab_v = self
            .rows
            .iter()
            .map(|w| w.dot(&h).abs() - self.radius)
            .fold(0.0, f64::max);
        box_v.max(slab_v)
    }

    pub fn contains(&self, beta: &DVector<f64>, tol: f64) -> bool {
        self.violation(beta) <= tol
    }

    /// Euclidean projection onto the constraint set (Dykstra for the
    /// ball-cap polytope).
    pub fn project(&self, beta: &DVector<f64>) -> DVector<f64> {
        let d = beta.len();
        let lo = DVector::from_element(d, -self.half_width);
        let hi = DVector::from_element(d, self.half_width);
        let h = beta - &self.center;
        let p = match self.kind {
            ConstraintKind::Box => project_box(&h, &lo, &hi),
            ConstraintKind::BallCap => {
                if self.contains(beta, 0.0) {
                    return beta.clone();
                }
                let mut projectors: Vec<Box<dyn Fn(&DVector<f64>) -> DVector<f64> + '_>> = Vec::new();
                projectors.push(Box::new(|x: &DVector<f64>| project_box(x, &lo, &hi)));
                for w in &self.rows {
                    projectors.push(Box::new(move |x: &DVector<f64>| project_slab(x, w, 0.0, self.radius)));
                }
                let (mut p, _) = dykstra(&h, &projectors, 1e-15, 20_000);
                // Dykstra iterates approach the set from outside; a last
                // clip onto the most violated slabs keeps feasibility tight.
                for _ in 0..3 {
                    for w in &self.rows {
                        p = project_slab(&p, w, 0.0, self.radius);
                    }
                    p = project_box(&p, &lo, &hi);
                }
                p
            }
        };
        &self.center + p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub coefficients: Vec<f64>,
    /// `‖ĝ − g⁰‖ = ‖β̂ − θ⁰‖₂`.
    pub s_hat: f64,
    pub empirical_risk: f64,
    pub iterations: usize,
    /// Last relative objective change of the iterative solver (0 when exact).
    pub final_gap: f64,
    pub converged: bool,
}

fn empirical_risk(data: &Dataset, dict: &Dictionary, beta: &[f64]) -> f64 {
    data.xs
        .iter()
        .zip(&data.ys)
        .map(|(x, y)| (y - dict.combination(beta, *x)).powi(2))
        .sum::<f64>()
        / data.n().max(1) as f64
}

/// `ŝ = ‖β̂ − θ⁰‖₂`.
pub fn s_hat(coefficients: &[f64], theta0: &[f64]) -> f64 {
    coefficients
        .iter()
        .zip(theta0)
        .map(|(b, t)| (b - t).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Exact minimizer for histograms: bins decouple, so each coefficient is
/// the clipped bin mean; empty bins keep `θ⁰_k`.
pub fn fit_histogram(data: &Dataset, dict: &Dictionary, con: &ModelConstraint) -> Result<FittedModel> {
    if dict.kind() != DictionaryKind::Histogram || con.kind() != ConstraintKind::Box {
        return Err(LabError::Argument("fit_histogram needs a histogram dictionary and a box constraint".into()));
    }
    let d = dict.size();
    let mut sums = vec![0.0; d];
    let mut counts = vec![0usize; d];
    for (x, y) in data.xs.iter().zip(&data.ys) {
        let k = dict.bin(*x);
        sums[k] += y;
        counts[k] += 1;
    }
    let root_d = (d as f64).sqrt();
    let w = con.half_width();
    let coefficients: Vec<f64> = (0..d)
        .map(|k| {
            let c = con.center()[k];
            if counts[k] == 0 {
                c
            } else {
                (sums[k] / counts[k] as f64 / root_d).clamp(c - w, c + w)
            }
        })
        .collect();
    let theta0: Vec<f64> = con.center().iter().copied().collect();
    Ok(FittedModel {
        s_hat: s_hat(&coefficients, &theta0),
        empirical_risk: empirical_risk(data, dict, &coefficients),
        coefficients,
        iterations: 0,
        final_gap: 0.0,
        converged: true,
    })
}

/// Projected gradient with fixed step `1/λ_max(Ĝ)` on
/// `β'Ĝβ − 2β'r̂ + P_n y²`, started at the center.
pub fn fit_projected_gradient(data: &Dataset, dict: &Dictionary, con: &ModelConstraint) -> Result<FittedModel> {
    let d = dict.size();
    let n = data.n();
    if n == 0 {
        return Err(LabError::Argument("empty dataset".into()));
    }
    let mut gram = DMatrix::<f64>::zeros(d, d);
    let mut rhs = DVector::<f64>::zeros(d);
    let mut phi = vec![0.0; d];
    for (x, y) in data.xs.iter().zip(&data.ys) {
        dict.eval_all(*x, &mut phi);
        for j in 0..d {
            if phi[j] == 0.0 {
                continue;
            }
            rhs[j] += y * phi[j];
            for k in 0..d {
                gram[(j, k)] += phi[j] * phi[k];
            }
        }
    }
    gram /= n as f64;
    rhs /= n as f64;
    let y2 = data.ys.iter().map(|y| y * y).sum::<f64>() / n as f64;
    let objective = |b: &DVector<f64>| y2 - 2.0 * b.dot(&rhs) + b.dot(&(&gram * b));

    let lmax = TrsSolver::new(&gram)?.lambda_max();
    let mut beta = con.center().clone();
    let mut value = objective(&beta);
    let mut iterations = 0;
    let mut gap = f64::INFINITY;
    let mut converged = false;
    if lmax <= 0.0 {
        converged = true;
        gap = 0.0;
    } else {
        let step = 1.0 / lmax;
        while iterations < PG_MAX_ITER {
            iterations += 1;
            // ∇/2 = Ĝβ − r̂
            let grad = &gram * &beta - &rhs;
            let next = con.project(&(&beta - grad * step));
            let next_value = objective(&next);
            gap = (value - next_value).abs() / value.abs().max(1e-300);
            let moved = (&next - &beta).norm();
            beta = next;
            value = next_value;
            if gap <= PG_REL_TOL && moved <= 1e-12 * (1.0 + beta.norm()) {
                converged = true;
                break;
            }
        }
    }
    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let theta0: Vec<f64> = con.center().iter().copied().collect();
    Ok(FittedModel {
        s_hat: s_hat(&coefficients, &theta0),
        empirical_risk: empirical_risk(data, dict, &coefficients),
        coefficients,
        iterations,
        final_gap: gap,
        converged,
    })
}

/// Dispatches to the exact histogram fit when available.
pub fn fit(data: &Dataset, dict: &Dictionary, con: &ModelConstraint) -> Result<FittedModel> {
    match con.kind() {
        ConstraintKind::Box if dict.kind() == DictionaryKind::Histogram => fit_histogram(data, dict, con),
        _ => fit_projected_gradient(data, dict, con),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(ys: [f64; 4]) -> Dataset {
        Dataset {
            xs: vec![0.1, 0.2, 0.6, 0.9],
            ys: ys.to_vec(),
            seed: 0,
        }
    }

    #[test]
    fn histogram_closed_form_example() {
        let dict = Dictionary::histogram(2).unwrap();
        let con = ModelConstraint::for_dictionary(&dict, vec![0.0, 0.0], 1.0).unwrap();
        let fit = fit_histogram(&toy([1.0, 0.0, 0.5, 0.5]), &dict, &con).unwrap();
        let expect = 0.5 / 2f64.sqrt();
        assert!((fit.coefficients[0] - expect).abs() < 1e-15);
        assert!((fit.coefficients[1] - expect).abs() < 1e-15);
    }

    #[test]
    fn histogram_clipping() {
        let dict = Dictionary::histogram(2).unwrap();
        let con = ModelConstraint::for_dictionary(&dict, vec![0.0, 0.0], 1.0).unwrap();
        let fit = fit_histogram(&toy([2.5, 2.5, 0.0, 0.0]), &dict, &con).unwrap();
        assert!((fit.coefficients[0] - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!(con.contains(&DVector::from_vec(fit.coefficients.clone()), 1e-12));
    }

    #[test]
    fn empty_bin_keeps_center() {
        let dict = Dictionary::histogram(4).unwrap();
        let con = ModelConstraint::for_dictionary(&dict, vec![0.1, 0.2, 0.3, 0.4], 1.0).unwrap();
        let data = Dataset {
            xs: vec![0.1, 0.12],
            ys: vec![0.2, 0.2],
            seed: 0,
        };
        let fit = fit_histogram(&data, &dict, &con).unwrap();
        assert_eq!(&fit.coefficients[1..], &[0.2, 0.3, 0.4]);
        assert!((fit.coefficients[0] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn projected_gradient_zero_responses() {
        let dict = Dictionary::fourier(3).unwrap();
        let con = ModelConstraint::for_dictionary(&dict, vec![0.0; 3], 1.0).unwrap();
        let data = Dataset {
            xs: vec![0.1, 0.4, 0.7],
            ys: vec![0.0; 3],
            seed: 0,
        };
        let fit = fit_projected_gradient(&data, &dict, &con).unwrap();
        assert!(fit.coefficients.iter().all(|b| b.abs() < 1e-14));
        assert_eq!(fit.s_hat, 0.0);
    }

    #[test]
    fn s_hat_norm() {
        assert_eq!(s_hat(&[0.3, 0.4], &[0.0, 0.0]), 0.5);
        assert_eq!(s_hat(&[0.3, 0.4], &[0.3, 0.4]), 0.0);
    }

    #[test]
    fn ball_cap_s_box_and_projection() {
        let dict = Dictionary::fourier(3).unwrap();
        let con = ModelConstraint::for_dictionary(&dict, vec![0.0; 3], 1.0).unwrap();
        // max ‖φ(x)‖ = √3 for odd D.
        assert!((con.s_box() - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        let far = DVector::from_vec(vec![3.0, -2.0, 1.0]);
        let p = con.project(&far);
        assert!(con.violation(&p) < 1e-9, "{}", con.violation(&p));
        // Projection is idempotent on feasible points.
        let q = con.project(&p);
        assert!((&q - &p).norm() < 1e-9);
    }
}
