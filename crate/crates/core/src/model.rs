//! A validated `(scenario, dictionary, constraint)` triple with the
//! population quantities every downstream computation needs.

use crate::dictionary::Dictionary;
use crate::erm::ModelConstraint;
use crate::error::{LabError, Result};
use crate::numerics::{integrate, QuadratureRule};
use crate::scenario::{project_target, Population, ProjectedTarget, Scenario, EVALUATION_GRID};

/// Tolerance on the quadrature check that `P(ψ φ_k) = 0`.
pub const ORTHOGONALITY_TOL: f64 = 1e-6;
/// Tolerance on the Gram matrix check at load time.
pub const GRAM_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct ModelSetup {
    pub scenario: Scenario,
    pub dict: Dictionary,
    pub rule: QuadratureRule,
    pub target: ProjectedTarget,
    pub constraint: ModelConstraint,
    /// `E φ_k(X)`.
    pub mean_basis: Vec<f64>,
    /// `max_k |P(ψ φ_k)|`, which must vanish for the projection.
    pub orthogonality_defect: f64,
    pub gram_defect: f64,
    /// `‖g⁰‖_∞` on the evaluation grid.
    pub g0_sup: f64,
}

impl ModelSetup {
    /// Builds the setup for the sup-norm ball of radius `radius` around
    /// `g⁰`, validating orthonormality, residual orthogonality and
    /// `sup_{g ∈ 𝒢} ‖g‖_∞ ≤ A₂`.
    pub fn new(scenario: Scenario, dict: Dictionary, radius: f64) -> Result<Self> {
        scenario.validate()?;
        let rule = QuadratureRule::default();
        let gram_defect = dict.gram_defect(&rule);
        if gram_defect > GRAM_TOL {
            return Err(LabError::Config(format!(
                "dictionary not orthonormal under the design law (Gram defect {gram_defect:e})"
            )));
        }
        let target = project_target(&scenario, &dict, &rule)?;
        let mut mean_basis = Vec::with_capacity(dict.size());
        let mut orthogonality_defect = 0.0f64;
        for k in 1..=dict.size() {
            mean_basis.push(integrate(|x| dict.eval_basis(k, x).unwrap_or(f64::NAN), &rule, dict.breakpoints())?);
            let p_psi_phi = integrate(
                |x| -2.0 * (scenario.g_star(x) - target.g0(&dict, x)) * dict.eval_basis(k, x).unwrap_or(f64::NAN),
                &rule,
                dict.breakpoints(),
            )?;
            orthogonality_defect = orthogonality_defect.max(p_psi_phi.abs());
        }
        if orthogonality_defect > ORTHOGONALITY_TOL {
            return Err(LabError::Config(format!(
                "residual orthogonality fails (max |P(psi phi_k)| = {orthogonality_defect:e})"
            )));
        }
        let g0_sup = (0..EVALUATION_GRID)
            .map(|i| target.g0(&dict, i as f64 / (EVALUATION_GRID - 1) as f64).abs())
            .chain(dict.breakpoints().iter().map(|b| target.g0(&dict, b - 1e-12).abs()))
            .fold(0.0, f64::max);
        if g0_sup + radius > scenario.a2 + 1e-12 {
            return Err(LabError::Config(format!(
                "model sup-norm bound ||g0|| + radius = {} exceeds A2 = {}",
                g0_sup + radius,
                scenario.a2
            )));
        }
        let constraint = ModelConstraint::for_dictionary(&dict, target.theta0.clone(), radius)?;
        Ok(Self {
            scenario,
            dict,
            rule,
            target,
            constraint,
            mean_basis,
            orthogonality_defect,
            gram_defect,
            g0_sup,
        })
    }

    pub fn population(&self) -> Population<'_> {
        Population {
            scenario: &self.scenario,
            dict: &self.dict,
            target: &self.target,
            rule: &self.rule,
        }
    }

    pub fn dim(&self) -> usize {
        self.dict.size()
    }

    /// Largest `s` for which the `L₂` ball of radius `s` around `g⁰` lies in
    /// the model.
    pub fn s_box(&self) -> f64 {
        self.constraint.s_box()
    }

    pub fn theta0(&self) -> &[f64] {
        &self.target.theta0
    }
}
