//! Composite Gauss–Legendre quadrature against the uniform design law on
//! `[0, 1]`.
//!
//! Panel edges are the union of a uniform partition and any declared
//! breakpoints, so integrands that are polynomial between breakpoints
//! (histogram products in particular) integrate exactly.

use crate::error::{LabError, Result};
use serde::{Deserialize, Serialize};

/// Nodes and weights of the `m`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1, "at least one node");
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    let half = m.div_ceil(2);
    for i in 0..half {
        // Tricomi initial guess, then Newton on P_m.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(m, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=m {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let (pm, pm1) = if m == 0 { (1.0, 0.0) } else { (p1, p0) };
    let d = m as f64 * (x * pm - pm1) / (x * x - 1.0);
    (pm, d)
}

/// Composite rule: `nodes_per_panel` Gauss points on each of `panels`
/// uniform panels of `[0, 1]` (further split at breakpoints).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub nodes_per_panel: usize,
    pub panels: usize,
    pub tolerance: f64,
    #[serde(skip)]
    reference: Option<(Vec<f64>, Vec<f64>)>,
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self::new(10, 16, 1e-12)
    }
}

/// Maximum number of panel doublings attempted by [`integrate`].
const MAX_REFINEMENTS: usize = 6;

impl QuadratureRule {
    pub fn new(nodes_per_panel: usize, panels: usize, tolerance: f64) -> Self {
        assert!(nodes_per_panel >= 1 && panels >= 1);
        let reference = Some(gauss_legendre(nodes_per_panel));
        Self {
            nodes_per_panel,
            panels,
            tolerance,
            reference,
        }
    }

    fn reference(&self) -> (Vec<f64>, Vec<f64>) {
        match &self.reference {
            Some(r) => r.clone(),
            None => gauss_legendre(self.nodes_per_panel),
        }
    }

    /// Sorted, deduplicated panel edges for `panels` uniform panels merged
    /// with the breakpoints that fall strictly inside `(0, 1)`.
    pub fn edges(panels: usize, breakpoints: &[f64]) -> Vec<f64> {
        let mut edges: Vec<f64> = (0..=panels).map(|i| i as f64 / panels as f64).collect();
        edges.extend(breakpoints.iter().copied().filter(|b| *b > 0.0 && *b < 1.0));
        edges.sort_by(|a, b| a.total_cmp(b));
        edges.dedup_by(|a, b| (*a - *b).abs() <= 1e-15);
        edges
    }

    /// Absolute nodes and weights of the composite rule on `[0, 1]`.
    pub fn nodes(&self, panels: usize, breakpoints: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (t, wt) = self.reference();
        let edges = Self::edges(panels, breakpoints);
        let mut xs = Vec::with_capacity((edges.len() - 1) * t.len());
        let mut ws = Vec::with_capacity(xs.capacity());
        for w in edges.windows(2) {
            let half = 0.5 * (w[1] - w[0]);
            let mid = 0.5 * (w[0] + w[1]);
            for (ti, wi) in t.iter().zip(&wt) {
                xs.push(mid + half * ti);
                ws.push(half * wi);
            }
        }
        (xs, ws)
    }

    /// Single pass of the composite rule with a given panel count.
    pub fn integrate_fixed<F>(&self, f: F, panels: usize, breakpoints: &[f64]) -> Result<f64>
    where
        F: Fn(f64) -> f64,
    {
        let (nodes, weights) = self.reference();
        let edges = Self::edges(panels, breakpoints);
        let mut total = 0.0;
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            let mut panel = 0.0;
            for (t, wt) in nodes.iter().zip(&weights) {
                let x = mid + half * t;
                let v = f(x);
                if !v.is_finite() {
                    return Err(LabError::Evaluation { node: x, value: v });
                }
                panel += wt * v;
            }
            total += half * panel;
        }
        Ok(total)
    }
}

/// `∫ f dP^X` for the uniform design on `[0, 1]`.
///
/// The panel count is doubled until two successive passes agree within the
/// rule's tolerance; the finer value is returned. If agreement is never
/// reached the last value is returned anyway, since the mismatch is then a
/// property of `f` (e.g. an undeclared jump) rather than of the rule.
pub fn integrate<F>(f: F, rule: &QuadratureRule, breakpoints: &[f64]) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut panels = rule.panels;
    let mut coarse = rule.integrate_fixed(&f, panels, breakpoints)?;
    for _ in 0..MAX_REFINEMENTS {
        panels *= 2;
        let fine = rule.integrate_fixed(&f, panels, breakpoints)?;
        if (fine - coarse).abs() <= rule.tolerance {
            return Ok(fine);
        }
        coarse = fine;
    }
    Ok(coarse)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn legendre_rule_matches_known_values() {
        let (x, w) = gauss_legendre(2);
        assert!((x[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((w[0] - 1.0).abs() < 1e-15);
        let (x, w) = gauss_legendre(3);
        assert!((x[2] - (0.6f64).sqrt()).abs() < 1e-15);
        assert!((w[1] - 8.0 / 9.0).abs() < 1e-15);
        for m in 1..30 {
            let (_, w) = gauss_legendre(m);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13, "m = {m}");
        }
    }

    #[test]
    fn exact_for_high_degree_polynomials() {
        let rule = QuadratureRule::new(10, 1, 1e-14);
        // 19th degree is the limit of a 10-point rule.
        let v = rule.integrate_fixed(|x| x.powi(19), 1, &[]).unwrap();
        assert!((v - 1.0 / 20.0).abs() < 1e-15);
    }

    #[test]
    fn analytic_examples() {
        let rule = QuadratureRule::default();
        assert!((integrate(|_| 1.0, &rule, &[]).unwrap() - 1.0).abs() < 1e-14);
        assert!((integrate(|x| x, &rule, &[]).unwrap() - 0.5).abs() < 1e-14);
        assert!(integrate(|x| (2.0 * PI * x).sin(), &rule, &[]).unwrap().abs() < 1e-14);
    }

    #[test]
    fn step_function_exact_with_breakpoint() {
        let rule = QuadratureRule::new(4, 3, 1e-14);
        let f = |x: f64| if x < 0.3 { 2.0 } else { -1.0 };
        let v = rule.integrate_fixed(f, 3, &[0.3]).unwrap();
        assert!((v - (0.6 - 0.7)).abs() < 1e-15);
    }

    #[test]
    fn non_finite_integrand_names_the_node() {
        let rule = QuadratureRule::new(3, 1, 1e-12);
        let err = rule.integrate_fixed(|x| if x > 0.5 { f64::NAN } else { 0.0 }, 1, &[]);
        match err {
            Err(LabError::Evaluation { node, .. }) => assert!(node > 0.5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn panel_doubling_is_stable_on_smooth_integrands() {
        let rule = QuadratureRule::default();
        let f = |x: f64| (3.0 * x).exp() * (7.0 * x).cos();
        let a = rule.integrate_fixed(f, 16, &[]).unwrap();
        let b = rule.integrate_fixed(f, 32, &[]).unwrap();
        assert!((a - b).abs() < rule.tolerance);
    }
}
