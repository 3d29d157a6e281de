//! Closed-form deviation thresholds for localized suprema and for the
//! excess-risk concentration inequality.

use crate::error::Result;
use crate::numerics::{conjugate, ConjugatePair, ConvexPhi};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConfig {
    pub a1: f64,
    pub a2: f64,
    /// Slope of the linear `𝒥(s) = A_𝒥·s`.
    pub a_j: f64,
    /// Slope of the envelope `D(s) = A_∞·s`.
    pub a_inf: f64,
    /// `A₀ = s̃₀·√n`.
    pub a0: f64,
    pub c0: f64,
    pub n: usize,
    pub d: usize,
}

impl BoundConfig {
    /// `K = 2(A₁ + A₂)`
    pub fn k(&self) -> f64 {
        2.0 * (self.a1 + self.a2)
    }

    /// `C = 2(A₁ + A₂)`
    pub fn c(&self) -> f64 {
        2.0 * (self.a1 + self.a2)
    }

    /// `m_n = √n`
    pub fn m_n(&self) -> f64 {
        (self.n as f64).sqrt()
    }

    fn nf(&self) -> f64 {
        self.n as f64
    }

    /// `Φ_𝒥(u) = u²/A_𝒥²` for the linear `𝒥`.
    pub fn phi_j(&self) -> Result<ConjugatePair> {
        conjugate(ConvexPhi::Quadratic { scale: self.a_j })
    }
}

/// `r₀² = 2C²·Φ*(8K/(m_n C²))` for an arbitrary `Φ`.
pub fn r0_squared_with(cfg: &BoundConfig, phi: &ConjugatePair) -> f64 {
    let c2 = cfg.c() * cfg.c();
    2.0 * c2 * phi.eval_conjugate(8.0 * cfg.k() / (cfg.m_n() * c2))
}

/// `r₀²` for the linear `𝒥`: `32 K² A_𝒥² / (m_n² C²)`.
pub fn r0_squared(cfg: &BoundConfig) -> f64 {
    let c2 = cfg.c() * cfg.c();
    32.0 * cfg.k().powi(2) * cfg.a_j.powi(2) / (cfg.m_n().powi(2) * c2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    pub t: f64,
    pub threshold: f64,
    /// `e^{−t}`
    pub nominal: f64,
}

fn variance_term(cfg: &BoundConfig, e_s: f64, sigma_s: f64, t: f64) -> f64 {
    ((8.0 * cfg.k() * e_s + 2.0 * sigma_s * sigma_s) * t / cfg.nf()).sqrt()
}

/// Right tail: `E(s) + √((8K·E(s) + 2σ_s²)t/n) + 2Kt/(3n)`.
pub fn bousquet_upper(cfg: &BoundConfig, e_s: f64, sigma_s: f64, t: f64) -> TailBound {
    TailBound {
        t,
        threshold: e_s + variance_term(cfg, e_s, sigma_s, t) + 2.0 * cfg.k() * t / (3.0 * cfg.nf()),
        nominal: (-t).exp(),
    }
}

/// Left tail: `E(s) − √((8K·E(s) + 2σ_s²)t/n) − Kt/n`.
pub fn klein_rio_lower(cfg: &BoundConfig, e_s: f64, sigma_s: f64, t: f64) -> TailBound {
    TailBound {
        t,
        threshold: e_s - variance_term(cfg, e_s, sigma_s, t) - cfg.k() * t / cfg.nf(),
        nominal: (-t).exp(),
    }
}

/// Simplified deviations, to be added to (upper) or subtracted from (lower)
/// `E(s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaThresholds {
    pub upper: f64,
    pub lower: f64,
    /// `2Cs√(t/n)`
    pub spread_term: f64,
    /// `r₀√(t/n)`
    pub r0_term: f64,
    /// `z(t) = r₀√(t/n) + 2Kt/(3n)` on the right tail.
    pub z_upper: f64,
    /// `r₀√(t/n) + Kt/n` on the left tail.
    pub z_lower: f64,
    pub r0: f64,
}

pub fn lemma_dev_thresholds(cfg: &BoundConfig, s: f64, t: f64) -> LemmaThresholds {
    let r0 = r0_squared(cfg).sqrt();
    let root = (t / cfg.nf()).sqrt();
    let spread_term = 2.0 * cfg.c() * s * root;
    let r0_term = r0 * root;
    let z_upper = r0_term + 2.0 * cfg.k() * t / (3.0 * cfg.nf());
    let z_lower = r0_term + cfg.k() * t / cfg.nf();
    LemmaThresholds {
        upper: spread_term + z_upper,
        lower: spread_term + z_lower,
        spread_term,
        r0_term,
        z_upper,
        z_lower,
        r0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaThreshold {
    pub t: f64,
    /// `√(A_𝒥 A_∞)·s̃₀ / n^{1/4}`
    pub first_branch: f64,
    /// `√(u/n) + u/n` with `u = t + ln(1 + K√n)`, before the `c₀` factor.
    pub bracket: f64,
    pub value: f64,
}

pub fn delta_components(cfg: &BoundConfig, t: f64, s_tilde0: f64) -> DeltaThreshold {
    let n = cfg.nf();
    let first_branch = (cfg.a_j * cfg.a_inf).sqrt() * s_tilde0 / n.powf(0.25);
    let u = t + (1.0 + cfg.k() * n.sqrt()).ln();
    let bracket = (u / n).sqrt() + u / n;
    DeltaThreshold {
        t,
        first_branch,
        bracket,
        value: first_branch.max(cfg.c0 * bracket),
    }
}

/// `δ(t) = √(A_𝒥A_∞)·s̃₀/n^{1/4} ∨ c₀(√(u/n) + u/n)`, `u = t + ln(1 + K√n)`.
pub fn delta_threshold(cfg: &BoundConfig, t: f64, s_tilde0: f64) -> f64 {
    delta_components(cfg, t, s_tilde0).value
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeCondition {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    /// `rhs / lhs`: how far inside (> 1) or outside (< 1) the condition is.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub ratio_threshold: f64,
    pub conditions: Vec<RegimeCondition>,
}

impl RegimeReport {
    pub fn all_pass(&self) -> bool {
        self.conditions.iter().all(|c| c.pass)
    }
}

fn condition(name: &str, lhs: f64, rhs: f64) -> RegimeCondition {
    RegimeCondition {
        name: name.to_string(),
        lhs,
        rhs,
        pass: lhs <= rhs,
        margin: if lhs == 0.0 { f64::INFINITY } else { rhs / lhs },
    }
}

/// Evaluates the asymptotic regime conditions at the configured sizes.
/// `a ≪ b` is read as `ratio·a ≤ b`. Informational only.
pub fn check_regime(cfg: &BoundConfig, ratio: f64) -> RegimeReport {
    let n = cfg.nf();
    let ln_n = n.ln();
    let d = cfg.d as f64;
    RegimeReport {
        ratio_threshold: ratio,
        conditions: vec![
            condition("(ln n)^2 <= D", ln_n * ln_n, d),
            condition("D <= sqrt(n)/ln n", d, n.sqrt() / ln_n),
            condition("sqrt(ln n) << A0", ratio * ln_n.sqrt(), cfg.a0),
            condition("A0 << sqrt(n)", ratio * cfg.a0, n.sqrt()),
            condition("A_J*A_inf <= sqrt(n)", cfg.a_j * cfg.a_inf, n.sqrt()),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> BoundConfig {
        BoundConfig {
            a1: 1.0,
            a2: 1.0,
            a_j: 2.0,
            a_inf: 1.0,
            a0: 1.0,
            c0: 1.0,
            n: 100,
            d: 4,
        }
    }

    #[test]
    fn r0_example() {
        // K = C = 4, A_J = 2, m_n = 10 → Φ*(0.2) = 0.04, r₀² = 1.28.
        let c = cfg();
        assert_eq!(c.k(), 4.0);
        assert!((r0_squared(&c) - 1.28).abs() < 1e-14);
        let phi = c.phi_j().unwrap();
        assert!((phi.eval_conjugate(0.2) - 0.04).abs() < 1e-15);
        assert!((r0_squared_with(&c, &phi) - 1.28).abs() < 1e-14);
        assert_eq!(r0_squared(&BoundConfig { a_j: 0.0, ..c }), 0.0);
        assert!(r0_squared(&BoundConfig { n: 100_000_000, ..c }) < 1e-5);
    }

    #[test]
    fn bousquet_examples() {
        let c = cfg();
        assert_eq!(bousquet_upper(&c, 0.3, 0.1, 0.0).threshold, 0.3);
        assert_eq!(klein_rio_lower(&c, 0.3, 0.1, 0.0).threshold, 0.3);
        assert!((bousquet_upper(&c, 0.0, 0.0, 1.5).threshold - 2.0 * 4.0 * 1.5 / 300.0).abs() < 1e-15);
        // K=4, E=0.01, σ²=0.0004, t=1, n=100.
        let v = bousquet_upper(&c, 0.01, 0.02, 1.0).threshold;
        let oracle = 0.01 + ((8.0 * 4.0 * 0.01 + 2.0 * 0.0004) / 100.0f64).sqrt() + 8.0 / 300.0;
        assert!((v - oracle).abs() < 1e-15);
        assert!((v - 0.09331).abs() < 1e-5);
    }

    #[test]
    fn lemma_examples() {
        let c = cfg();
        let z = lemma_dev_thresholds(&c, 0.3, 0.0);
        assert_eq!((z.upper, z.lower), (0.0, 0.0));
        let a = lemma_dev_thresholds(&c, 0.3, 1.0);
        let b = lemma_dev_thresholds(&c, 0.3, 4.0);
        assert!((b.spread_term - 2.0 * a.spread_term).abs() < 1e-15);
        assert!((b.r0_term - 2.0 * a.r0_term).abs() < 1e-15);
        assert!(((b.z_upper - b.r0_term) - 4.0 * (a.z_upper - a.r0_term)).abs() < 1e-15);
    }

    #[test]
    fn delta_example() {
        let c = BoundConfig {
            a1: 1.0,
            a2: 1.0,
            a_j: 0.0,
            a_inf: 1.0,
            a0: 1.0,
            c0: 1.0,
            n: 10_000,
            d: 4,
        };
        let d = delta_components(&c, 0.0, 0.01);
        assert_eq!(d.first_branch, 0.0);
        let u = 401f64.ln();
        assert!((u - 5.9940).abs() < 1e-4);
        assert!((d.value - ((u / 1e4).sqrt() + u / 1e4)).abs() < 1e-15);
        assert!((d.value - 0.02508).abs() < 1e-5);
        assert!(delta_threshold(&c, 1e6, 0.01) > 100.0);
    }

    #[test]
    fn regime_examples() {
        let n = 20f64.exp().round() as usize;
        let c = BoundConfig { n, d: 500, ..cfg() };
        let r = check_regime(&c, 3.0);
        assert!(r.conditions[0].pass && r.conditions[1].pass);
        assert!((r.conditions[1].rhs - 1101.0).abs() < 1.0);
        let c = BoundConfig { n: 1_000_000, d: 100, ..cfg() };
        let r = check_regime(&c, 3.0);
        assert!(!r.conditions[0].pass);
        assert!((r.conditions[0].lhs - 190.87).abs() < 0.01);
        let c = BoundConfig { n: 1000, d: 1000, ..cfg() };
        assert!(!check_regime(&c, 3.0).conditions[1].pass);
    }
}
