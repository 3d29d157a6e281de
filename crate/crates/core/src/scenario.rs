//! The data-generating model `Y = g*(X) + σ(X)ε` and its population
//! functionals.
//!
//! Boundedness is enforced by construction: noise laws are bounded, and a
//! scenario is rejected if `|g*| + σ·sup|ε|` exceeds `A₁` anywhere on the
//! evaluation grid. Nothing is ever truncated, so `E[ε|X] = 0` and
//! `Var[ε|X] = 1` hold exactly.

use crate::dictionary::Dictionary;
use crate::error::{LabError, Result};
use crate::numerics::{integrate, QuadratureRule};
use crate::rng::{unit_f64, CounterRng};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Number of grid points on which pointwise bounds are checked.
pub const EVALUATION_GRID: usize = 10_001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignLaw {
    Uniform,
}

/// Regression function `g*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Regression {
    Constant { value: f64 },
    /// `amplitude·sin(2π·frequency·x) + slope·x + intercept`
    SineLinear {
        amplitude: f64,
        frequency: f64,
        slope: f64,
        #[serde(default)]
        intercept: f64,
    },
    /// `amplitude·√2·cos(2π·frequency·x)`
    CosineMode { amplitude: f64, frequency: f64 },
}

impl Regression {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Regression::Constant { value } => value,
            Regression::SineLinear {
                amplitude,
                frequency,
                slope,
                intercept,
            } => amplitude * (2.0 * PI * frequency * x).sin() + slope * x + intercept,
            Regression::CosineMode { amplitude, frequency } => {
                amplitude * std::f64::consts::SQRT_2 * (2.0 * PI * frequency * x).cos()
            }
        }
    }
}

/// Noise level `σ(x) ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseLevel {
    Constant { level: f64 },
    /// `base + amplitude·sin(2π·frequency·x)`
    Sine { base: f64, amplitude: f64, frequency: f64 },
}

impl NoiseLevel {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            NoiseLevel::Constant { level } => level,
            NoiseLevel::Sine {
                base,
                amplitude,
                frequency,
            } => base + amplitude * (2.0 * PI * frequency * x).sin(),
        }
    }
}

/// Law of the standardized noise `ε` (mean 0, variance 1, bounded).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseLaw {
    Rademacher,
    /// Uniform on `[−√3, √3]`.
    ScaledUniform,
}

impl NoiseLaw {
    pub fn sup_abs(self) -> f64 {
        match self {
            NoiseLaw::Rademacher => 1.0,
            NoiseLaw::ScaledUniform => 3f64.sqrt(),
        }
    }

    fn draw(self, word: u64) -> f64 {
        match self {
            NoiseLaw::Rademacher => {
                if word >> 63 == 1 {
                    1.0
                } else {
                    -1.0
                }
            }
            NoiseLaw::ScaledUniform => 3f64.sqrt() * (2.0 * unit_f64(word) - 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub design: DesignLaw,
    pub regression: Regression,
    pub noise_level: NoiseLevel,
    pub noise_law: NoiseLaw,
    pub a1: f64,
    pub a2: f64,
}

impl Scenario {
    /// `g*(x) = 0.4 sin(2πx) + 0.2x`, `σ(x) = 0.1 + 0.08 sin(4πx)`,
    /// Rademacher noise, `A₁ = 1`, `A₂ = 2`.
    pub fn shipped_default() -> Self {
        Self {
            design: DesignLaw::Uniform,
            regression: Regression::SineLinear {
                amplitude: 0.4,
                frequency: 1.0,
                slope: 0.2,
                intercept: 0.0,
            },
            noise_level: NoiseLevel::Sine {
                base: 0.1,
                amplitude: 0.08,
                frequency: 2.0,
            },
            noise_law: NoiseLaw::Rademacher,
            a1: 1.0,
            a2: 2.0,
        }
    }

    /// Noiseless, `g* ≡ 0.5`: the regression function lies in every shipped
    /// span, so `g* = g⁰`.
    pub fn noiseless_centered() -> Self {
        Self {
            design: DesignLaw::Uniform,
            regression: Regression::Constant { value: 0.5 },
            noise_level: NoiseLevel::Constant { level: 0.0 },
            noise_law: NoiseLaw::Rademacher,
            a1: 1.0,
            a2: 2.0,
        }
    }

    /// Pure Rademacher noise at the boundedness limit (`g* ≡ 0`, `σ ≡ 1`,
    /// `A₁ = A₂ = 1`), where the margin constant is within a small factor
    /// of tight.
    pub fn saturated() -> Self {
        Self {
            design: DesignLaw::Uniform,
            regression: Regression::Constant { value: 0.0 },
            noise_level: NoiseLevel::Constant { level: 1.0 },
            noise_law: NoiseLaw::Rademacher,
            a1: 1.0,
            a2: 1.0,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "default" => Some(Self::shipped_default()),
            "noiseless_centered" => Some(Self::noiseless_centered()),
            "saturated" => Some(Self::saturated()),
            _ => None,
        }
    }

    pub fn g_star(&self, x: f64) -> f64 {
        self.regression.eval(x)
    }

    pub fn sigma(&self, x: f64) -> f64 {
        self.noise_level.eval(x)
    }

    /// `K = 2(A₁ + A₂)`, the sup-norm bound of `f − f⁰`.
    pub fn k(&self) -> f64 {
        2.0 * (self.a1 + self.a2)
    }

    /// `C = 2(A₁ + A₂)`, the margin constant.
    pub fn c(&self) -> f64 {
        2.0 * (self.a1 + self.a2)
    }

    /// Checks positivity of the constants, `σ ≥ 0`, and
    /// `|g*| + σ·sup|ε| ≤ A₁` on the evaluation grid.
    pub fn validate(&self) -> Result<()> {
        if !(self.a1 > 0.0 && self.a1.is_finite()) {
            return Err(LabError::Validation(format!("A1 = {} must be positive", self.a1)));
        }
        if !(self.a2 > 0.0 && self.a2.is_finite()) {
            return Err(LabError::Validation(format!("A2 = {} must be positive", self.a2)));
        }
        let eps = self.noise_law.sup_abs();
        for i in 0..EVALUATION_GRID {
            let x = i as f64 / (EVALUATION_GRID - 1) as f64;
            let s = self.sigma(x);
            if s < 0.0 || !s.is_finite() {
                return Err(LabError::Validation(format!("noise level {s} < 0 at x = {x}")));
            }
            let bound = self.g_star(x).abs() + s * eps;
            if bound > self.a1 + 1e-12 {
                return Err(LabError::Validation(format!(
                    "|g*(x)| + sigma(x)*sup|eps| = {bound} exceeds A1 = {} at x = {x}",
                    self.a1
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub seed: u64,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.xs.len()
    }
}

/// Draws `n` observations; observation `i` depends only on `(seed, i)`.
pub fn sample(sc: &Scenario, n: usize, seed: u64) -> Dataset {
    let mut rng = CounterRng::new(seed);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for i in 0..n {
        let (wx, we) = rng.words(i as u64);
        let x = match sc.design {
            DesignLaw::Uniform => unit_f64(wx),
        };
        let eps = sc.noise_law.draw(we);
        xs.push(x);
        ys.push(sc.g_star(x) + sc.sigma(x) * eps);
    }
    Dataset { xs, ys, seed }
}

/// Coefficients of the projection `g⁰` of `g*` onto the span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedTarget {
    pub theta0: Vec<f64>,
    /// `‖g* − g⁰‖²`
    pub squared_bias: f64,
}

impl ProjectedTarget {
    pub fn g0(&self, dict: &Dictionary, x: f64) -> f64 {
        dict.combination(&self.theta0, x)
    }
}

pub fn project_target(sc: &Scenario, dict: &Dictionary, rule: &QuadratureRule) -> Result<ProjectedTarget> {
    let mut theta0 = Vec::with_capacity(dict.size());
    for k in 1..=dict.size() {
        let v = integrate(
            |x| sc.g_star(x) * dict.eval_basis(k, x).unwrap_or(f64::NAN),
            rule,
            dict.breakpoints(),
        )?;
        theta0.push(v);
    }
    let energy = integrate(|x| sc.g_star(x).powi(2), rule, dict.breakpoints())?;
    let squared_bias = (energy - theta0.iter().map(|t| t * t).sum::<f64>()).max(0.0);
    Ok(ProjectedTarget { theta0, squared_bias })
}

/// `γ(g)(x, y) = (y − g(x))²`.
pub fn contrast(g_at_x: f64, y: f64) -> f64 {
    (y - g_at_x).powi(2)
}

/// `ψ(x, y) = −2(y − g⁰(x))`.
pub fn psi(g0_at_x: f64, y: f64) -> f64 {
    -2.0 * (y - g0_at_x)
}

/// Population functionals of `f_g − f⁰` for `g = g⁰ + Σ β_k φ_k`.
///
/// Conditional expectations over `ε` are taken analytically (mean 0,
/// variance 1); the remaining integrals over `X` are computed by quadrature.
#[derive(Debug, Clone)]
pub struct Population<'a> {
    pub scenario: &'a Scenario,
    pub dict: &'a Dictionary,
    pub target: &'a ProjectedTarget,
    pub rule: &'a QuadratureRule,
}

impl Population<'_> {
    fn h(&self, beta: &[f64], x: f64) -> f64 {
        self.dict.combination(beta, x)
    }

    /// `P(f_g − f⁰) = ‖g − g⁰‖² − 2⟨g* − g⁰, g − g⁰⟩`, by quadrature.
    pub fn excess_risk(&self, beta: &[f64]) -> Result<f64> {
        let bp = self.dict.breakpoints();
        integrate(
            |x| {
                let h = self.h(beta, x);
                let resid = self.scenario.g_star(x) - self.target.g0(self.dict, x);
                h * h - 2.0 * resid * h
            },
            self.rule,
            bp,
        )
    }

    /// `‖g − g⁰‖²` by quadrature.
    pub fn squared_distance(&self, beta: &[f64]) -> Result<f64> {
        integrate(|x| self.h(beta, x).powi(2), self.rule, self.dict.breakpoints())
    }

    /// `E[(f_g − f⁰)²] = E[h²((2g* − g − g⁰)² + 4σ²)]` with `h = g − g⁰`.
    pub fn second_moment(&self, beta: &[f64]) -> Result<f64> {
        integrate(
            |x| {
                let h = self.h(beta, x);
                let g0 = self.target.g0(self.dict, x);
                let m = 2.0 * self.scenario.g_star(x) - (g0 + h) - g0;
                let s = self.scenario.sigma(x);
                h * h * (m * m + 4.0 * s * s)
            },
            self.rule,
            self.dict.breakpoints(),
        )
    }

    /// `σ²(f_g − f⁰) = E[(f_g − f⁰)²] − (P(f_g − f⁰))²`.
    pub fn variance_of_contrast_increment(&self, beta: &[f64]) -> Result<f64> {
        let p = self.excess_risk(beta)?;
        Ok(self.second_moment(beta)? - p * p)
    }

    /// Excess risk in closed form, `‖β‖₂²`, valid because `g − g⁰` lies in
    /// the span and the residual `g* − g⁰` is orthogonal to it.
    pub fn excess_risk_closed_form(beta: &[f64]) -> f64 {
        beta.iter().map(|b| b * b).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionary::Dictionary;

    fn rule() -> QuadratureRule {
        QuadratureRule::default()
    }

    #[test]
    fn shipped_presets_validate() {
        Scenario::shipped_default().validate().unwrap();
        Scenario::noiseless_centered().validate().unwrap();
        Scenario::saturated().validate().unwrap();
        let mut bad = Scenario::shipped_default();
        bad.a1 = 0.5;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn derived_constants() {
        let sc = Scenario::shipped_default();
        assert_eq!(sc.k(), 6.0);
        assert_eq!(sc.c(), 6.0);
    }

    #[test]
    fn noiseless_constant_sample() {
        let sc = Scenario {
            regression: Regression::Constant { value: 0.5 },
            noise_level: NoiseLevel::Constant { level: 0.0 },
            ..Scenario::shipped_default()
        };
        let d = sample(&sc, 100, 3);
        assert!(d.ys.iter().all(|y| *y == 0.5));
    }

    #[test]
    fn two_point_noise() {
        let sc = Scenario {
            regression: Regression::Constant { value: 0.0 },
            noise_level: NoiseLevel::Constant { level: 0.1 },
            ..Scenario::shipped_default()
        };
        let d = sample(&sc, 1000, 11);
        assert!(d.ys.iter().all(|y| *y == 0.1 || *y == -0.1));
        let plus = d.ys.iter().filter(|y| **y > 0.0).count();
        assert!((400..600).contains(&plus));
    }

    #[test]
    fn sampling_is_deterministic_and_bounded() {
        let sc = Scenario::shipped_default();
        let a = sample(&sc, 500, 42);
        let b = sample(&sc, 500, 42);
        assert_eq!(a, b);
        assert!(a.ys.iter().all(|y| y.abs() <= sc.a1));
        assert_ne!(a, sample(&sc, 500, 43));
        // Prefix property of the counter scheme.
        let c = sample(&sc, 10, 42);
        assert_eq!(c.xs[..], a.xs[..10]);
    }

    #[test]
    fn scaled_uniform_moments() {
        let sc = Scenario {
            regression: Regression::Constant { value: 0.0 },
            noise_level: NoiseLevel::Constant { level: 0.5 },
            noise_law: NoiseLaw::ScaledUniform,
            ..Scenario::shipped_default()
        };
        let d = sample(&sc, 200_000, 5);
        let n = d.n() as f64;
        let mean = d.ys.iter().sum::<f64>() / n;
        let var = d.ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 0.01);
        assert!((var - 0.25).abs() < 0.005);
        assert!(d.ys.iter().all(|y| y.abs() <= 0.5 * 3f64.sqrt()));
    }

    #[test]
    fn projection_of_a_span_element() {
        let dict = Dictionary::fourier(3).unwrap();
        let sc = Scenario {
            regression: Regression::Constant { value: 1.0 },
            ..Scenario::noiseless_centered()
        };
        let t = project_target(&sc, &dict, &rule()).unwrap();
        assert!((t.theta0[0] - 1.0).abs() < 1e-14);
        assert!(t.theta0[1].abs() < 1e-14 && t.theta0[2].abs() < 1e-14);
        assert!(t.squared_bias < 1e-14);
    }

    #[test]
    fn projection_orthogonal_to_span() {
        let dict = Dictionary::fourier(3).unwrap();
        let sc = Scenario {
            regression: Regression::CosineMode {
                amplitude: 0.3,
                frequency: 5.0,
            },
            ..Scenario::noiseless_centered()
        };
        let t = project_target(&sc, &dict, &rule()).unwrap();
        assert!(t.theta0.iter().all(|v| v.abs() < 1e-13));
        assert!((t.squared_bias - 0.09).abs() < 1e-13);
    }

    #[test]
    fn projection_of_identity_on_two_bins() {
        let dict = Dictionary::histogram(2).unwrap();
        let sc = Scenario {
            regression: Regression::SineLinear {
                amplitude: 0.0,
                frequency: 1.0,
                slope: 1.0,
                intercept: 0.0,
            },
            ..Scenario::noiseless_centered()
        };
        let t = project_target(&sc, &dict, &rule()).unwrap();
        let s = 2f64.sqrt();
        // θ⁰_k = (bin mean of x)/√D.
        assert!((t.theta0[0] - 0.25 / s).abs() < 1e-14);
        assert!((t.theta0[1] - 0.75 / s).abs() < 1e-14);
        let exact = 1.0 / 3.0 - (t.theta0[0].powi(2) + t.theta0[1].powi(2));
        assert!((t.squared_bias - exact).abs() < 1e-14);
        assert!((t.squared_bias - (1.0 / 3.0 - 5.0 / 16.0)).abs() < 1e-14);
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi(0.0, 0.5), -1.0);
        assert_eq!(psi(0.3, 0.3), 0.0);
        assert!((psi(0.2, -0.3) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn population_functionals_at_the_projection() {
        let sc = Scenario::shipped_default();
        let dict = Dictionary::histogram(8).unwrap();
        let r = rule();
        let t = project_target(&sc, &dict, &r).unwrap();
        let pop = Population {
            scenario: &sc,
            dict: &dict,
            target: &t,
            rule: &r,
        };
        let zero = vec![0.0; 8];
        assert_eq!(pop.excess_risk(&zero).unwrap(), 0.0);
        assert_eq!(pop.variance_of_contrast_increment(&zero).unwrap(), 0.0);
        let mut e1 = zero.clone();
        e1[0] = 0.1;
        assert!((pop.excess_risk(&e1).unwrap() - 0.01).abs() < 1e-12);
    }

    #[test]
    fn constant_increment_has_zero_variance() {
        let sc = Scenario {
            regression: Regression::Constant { value: 0.0 },
            ..Scenario::noiseless_centered()
        };
        let dict = Dictionary::histogram(1).unwrap();
        let r = rule();
        let t = project_target(&sc, &dict, &r).unwrap();
        let pop = Population {
            scenario: &sc,
            dict: &dict,
            target: &t,
            rule: &r,
        };
        assert!(pop.variance_of_contrast_increment(&[1.0]).unwrap().abs() < 1e-14);
    }
}
