//! Orthonormal dictionaries in `L₂(P^X)` for the uniform design on `[0, 1]`.

use crate::error::{LabError, Result};
use crate::numerics::QuadratureRule;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

/// Grid size used for sup-norm evaluations (breakpoints are added).
pub const SUP_GRID_POINTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DictionaryKind {
    /// `φ_k = √D · 1[(k−1)/D, k/D)`, last bin closed at 1.
    Histogram,
    /// `1, √2 cos(2πx), √2 sin(2πx), √2 cos(4πx), …`
    Fourier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dictionary {
    kind: DictionaryKind,
    size: usize,
    envelope: f64,
    breakpoints: Vec<f64>,
}

impl Dictionary {
    pub fn new(kind: DictionaryKind, size: usize) -> Result<Self> {
        match kind {
            DictionaryKind::Histogram => Self::histogram(size),
            DictionaryKind::Fourier => Self::fourier(size),
        }
    }

    pub fn histogram(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(LabError::Argument("dictionary size must be positive".into()));
        }
        Ok(Self {
            kind: DictionaryKind::Histogram,
            size,
            envelope: 1.0,
            breakpoints: (1..size).map(|k| k as f64 / size as f64).collect(),
        })
    }

    pub fn fourier(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(LabError::Argument("dictionary size must be positive".into()));
        }
        Ok(Self {
            kind: DictionaryKind::Fourier,
            size,
            envelope: SQRT_2,
            breakpoints: Vec::new(),
        })
    }

    pub fn kind(&self) -> DictionaryKind {
        self.kind
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// The constant `c_𝓜` with `sup_{‖g‖₂=1} ‖g‖_∞ ≤ c_𝓜 √D`.
    pub fn envelope(&self) -> f64 {
        self.envelope
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Bin of `x` for the histogram family (0-based).
    pub fn bin(&self, x: f64) -> usize {
        ((x * self.size as f64).floor().max(0.0) as usize).min(self.size - 1)
    }

    /// `φ_k(x)` with 1-based `k`.
    pub fn eval_basis(&self, k: usize, x: f64) -> Result<f64> {
        if k == 0 || k > self.size {
            return Err(LabError::Argument(format!("basis index {k} outside 1..={}", self.size)));
        }
        Ok(self.eval_index(k - 1, x))
    }

    fn eval_index(&self, i: usize, x: f64) -> f64 {
        match self.kind {
            DictionaryKind::Histogram => {
                if self.bin(x) == i {
                    (self.size as f64).sqrt()
                } else {
                    0.0
                }
            }
            DictionaryKind::Fourier => {
                if i == 0 {
                    1.0
                } else {
                    let freq = i.div_ceil(2) as f64;
                    let arg = 2.0 * PI * freq * x;
                    if i % 2 == 1 {
                        SQRT_2 * arg.cos()
                    } else {
                        SQRT_2 * arg.sin()
                    }
                }
            }
        }
    }

    /// All `D` basis values at `x`, 0-based.
    pub fn eval_all(&self, x: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.size);
        match self.kind {
            DictionaryKind::Histogram => {
                out.iter_mut().for_each(|v| *v = 0.0);
                out[self.bin(x)] = (self.size as f64).sqrt();
            }
            DictionaryKind::Fourier => {
                for (i, v) in out.iter_mut().enumerate() {
                    *v = self.eval_index(i, x);
                }
            }
        }
    }

    /// `Σ β_k φ_k(x)`.
    pub fn combination(&self, beta: &[f64], x: f64) -> f64 {
        match self.kind {
            DictionaryKind::Histogram => beta[self.bin(x)] * (self.size as f64).sqrt(),
            DictionaryKind::Fourier => beta.iter().enumerate().map(|(i, b)| b * self.eval_index(i, x)).sum(),
        }
    }

    /// Sup-norm evaluation grid: `SUP_GRID_POINTS` equispaced points of
    /// `[0, 1]` plus both sides of each breakpoint.
    pub fn sup_grid(&self) -> Vec<f64> {
        let mut g: Vec<f64> = (0..SUP_GRID_POINTS).map(|i| i as f64 / (SUP_GRID_POINTS - 1) as f64).collect();
        for b in &self.breakpoints {
            g.push(*b);
            g.push(b - 1e-12);
        }
        g.sort_by(|a, b| a.total_cmp(b));
        g
    }

    /// `‖Σ β_k φ_k‖_∞` on [`Self::sup_grid`]; exact for histograms.
    pub fn sup_norm(&self, beta: &[f64]) -> f64 {
        match self.kind {
            DictionaryKind::Histogram => beta.iter().fold(0.0f64, |m, b| m.max(b.abs())) * (self.size as f64).sqrt(),
            DictionaryKind::Fourier => self
                .sup_grid()
                .into_iter()
                .map(|x| self.combination(beta, x).abs())
                .fold(0.0, f64::max),
        }
    }

    /// Gram matrix `∫ φ_j φ_k dP^X` (row-major, `D × D`).
    pub fn gram(&self, rule: &QuadratureRule) -> Vec<f64> {
        let d = self.size;
        let panels = rule.panels.max(4 * d);
        let (xs, ws) = rule.nodes(panels, &self.breakpoints);
        let mut g = vec![0.0; d * d];
        let mut phi = vec![0.0; d];
        for (x, w) in xs.iter().zip(&ws) {
            self.eval_all(*x, &mut phi);
            for j in 0..d {
                if phi[j] == 0.0 {
                    continue;
                }
                for k in 0..d {
                    g[j * d + k] += w * phi[j] * phi[k];
                }
            }
        }
        g
    }

    /// Largest entrywise deviation of the Gram matrix from the identity.
    pub fn gram_defect(&self, rule: &QuadratureRule) -> f64 {
        let d = self.size;
        self.gram(rule)
            .iter()
            .enumerate()
            .map(|(idx, v)| (v - if idx / d == idx % d { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max)
    }

    /// `sup_{‖β‖₂ = 1} ‖Σ β_k φ_k‖_∞ = sup_x (Σ_k φ_k(x)²)^{1/2}`.
    ///
    /// Cauchy–Schwarz is attained at `β ∝ φ(x*)`, so the grid value is the
    /// supremum itself up to grid resolution (exact for both shipped families).
    pub fn unit_sphere_sup(&self) -> f64 {
        match self.kind {
            DictionaryKind::Histogram => (self.size as f64).sqrt(),
            DictionaryKind::Fourier => {
                let mut phi = vec![0.0; self.size];
                self.sup_grid()
                    .into_iter()
                    .map(|x| {
                        self.eval_all(x, &mut phi);
                        phi.iter().map(|v| v * v).sum::<f64>().sqrt()
                    })
                    .fold(0.0, f64::max)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_values() {
        let d = Dictionary::histogram(4).unwrap();
        assert_eq!(d.eval_basis(2, 0.3).unwrap(), 2.0);
        assert_eq!(d.eval_basis(2, 0.6).unwrap(), 0.0);
        assert_eq!(d.eval_basis(2, 0.25).unwrap(), 2.0);
        // Last bin closed at 1.
        assert_eq!(d.eval_basis(4, 1.0).unwrap(), 2.0);
        assert!(d.eval_basis(0, 0.3).is_err());
        assert!(d.eval_basis(5, 0.3).is_err());
    }

    #[test]
    fn fourier_first_element_is_constant() {
        let d = Dictionary::fourier(5).unwrap();
        for x in [0.0, 0.13, 0.5, 0.99] {
            assert_eq!(d.eval_basis(1, x).unwrap(), 1.0);
        }
        assert!((d.eval_basis(2, 0.0).unwrap() - SQRT_2).abs() < 1e-15);
        assert!(d.eval_basis(3, 0.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn gram_defects() {
        let rule = QuadratureRule::default();
        for size in [1, 2, 7, 16, 64] {
            assert!(Dictionary::histogram(size).unwrap().gram_defect(&rule) < 1e-12, "histogram {size}");
        }
        assert!(Dictionary::fourier(5).unwrap().gram_defect(&rule) <= 1e-9);
        assert!(Dictionary::fourier(1).unwrap().gram_defect(&rule) < 1e-14);
    }

    #[test]
    fn unit_sphere_sup_values() {
        assert_eq!(Dictionary::histogram(9).unwrap().unit_sphere_sup(), 3.0);
        assert_eq!(Dictionary::histogram(1).unwrap().unit_sphere_sup(), 1.0);
        let f = Dictionary::fourier(5).unwrap();
        let sup = f.unit_sphere_sup();
        assert!(sup <= f.envelope() * 5f64.sqrt() + 1e-12);
        // Odd D: Σφ_k² ≡ D.
        assert!((sup - 5f64.sqrt()).abs() < 1e-12);
        let f = Dictionary::fourier(4).unwrap();
        assert!((f.unit_sphere_sup() - 5f64.sqrt()).abs() < 1e-12);
    }
}
