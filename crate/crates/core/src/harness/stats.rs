//! Clopper–Pearson bounds and small descriptive statistics.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

/// One-sided confidence level used for every tail comparison.
pub const CONFIDENCE: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinomialInterval {
    pub successes: usize,
    pub trials: usize,
    pub frequency: f64,
    /// One-sided 95% lower bound.
    pub lower: f64,
    /// One-sided 95% upper bound.
    pub upper: f64,
}

fn beta_quantile(a: f64, b: f64, p: f64) -> f64 {
    Beta::new(a, b).map(|d| d.inverse_cdf(p)).unwrap_or(f64::NAN)
}

/// Exact (Clopper–Pearson) one-sided bounds for `k` successes in `m` trials.
pub fn clopper_pearson(k: usize, m: usize) -> BinomialInterval {
    assert!(m >= 1 && k <= m);
    let alpha = 1.0 - CONFIDENCE;
    let (kf, mf) = (k as f64, m as f64);
    let lower = if k == 0 { 0.0 } else { beta_quantile(kf, mf - kf + 1.0, alpha) };
    let upper = if k == m { 1.0 } else { beta_quantile(kf + 1.0, mf - kf, 1.0 - alpha) };
    let frequency = kf / mf;
    BinomialInterval {
        successes: k,
        trials: m,
        frequency,
        lower: lower.min(frequency),
        upper: upper.max(frequency),
    }
}

impl BinomialInterval {
    /// The observed frequency is compatible with a true probability of at
    /// most `p`: the one-sided lower bound does not exceed `p`.
    pub fn compatible_with_at_most(&self, p: f64) -> bool {
        self.lower <= p
    }

    /// `frequency − lower`, the allowance added to the nominal level.
    pub fn margin(&self) -> f64 {
        self.frequency - self.lower
    }
}

/// Empirical quantile by linear interpolation of order statistics.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    let w = pos - i as f64;
    sorted[i] * (1.0 - w) + sorted[j] * w
}

/// Least-squares slope of `y` on `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
