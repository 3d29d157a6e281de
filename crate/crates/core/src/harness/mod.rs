//! Seeded Monte Carlo verification of the margin, representation,
//! second-order and concentration properties.
//!
//! Every operation takes an [`ExperimentPlan`], expands it into per-trial
//! seeds through [`crate::rng::derive_seed`], runs trials on the rayon
//! pool and reduces results in trial-index order. Reports are therefore a
//! pure function of the plan, whatever the thread count.

mod concentration;
mod scaling;
pub mod stats;
mod verify;

pub use concentration::{calibrate_bounds, prior_bounds, run_concentration, ConcentrationReport, TailRow, TrialRecord};
pub use scaling::{scaling_study, ScalingReport, ScalingRow, WidthRow};
pub use verify::{
    verify_curves, verify_margin, verify_representation, verify_second_order, verify_tail_lemma, CurvesReport,
    FirstOrderRow, MarginReport, RepresentationRecord, RepresentationReport, SecondOrderReport, TailLemmaReport,
    TailLemmaRow,
};

use crate::dictionary::{Dictionary, DictionaryKind};
use crate::error::{LabError, Result};
use crate::locproc::s_grid;
use crate::model::ModelSetup;
use crate::rng::{derive_seed, Stream};
use crate::scenario::Scenario;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SGridSpec {
    pub points: usize,
    pub min_ratio: f64,
}

impl Default for SGridSpec {
    fn default() -> Self {
        Self {
            points: 200,
            min_ratio: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingSpec {
    pub n_values: Vec<usize>,
    pub d_values: Vec<usize>,
    /// Accepted band for `s̃₀(D)/√(D/n)` relative to its value at the plan's D.
    pub band: (f64, f64),
}

impl Default for ScalingSpec {
    fn default() -> Self {
        Self {
            n_values: vec![1 << 10, 1 << 12, 1 << 14],
            d_values: vec![8, 16, 32],
            band: (0.5, 2.0),
        }
    }
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub scenario: Scenario,
    pub dictionary: DictionaryKind,
    pub size: usize,
    /// Sup-norm radius of the model around `g⁰`.
    pub radius: f64,
    pub n: usize,
    /// Concentration trials `M`.
    pub trials: usize,
    /// Replicates `R` for expected curves.
    pub replicates: usize,
    /// Trials of the per-dataset identity checks (second order, representation).
    pub check_trials: usize,
    pub seed: u64,
    pub t_grid: Vec<f64>,
    pub s_grid: SGridSpec,
    pub c0: f64,
    pub ratio_threshold: f64,
    /// Random model functions drawn by the margin check.
    pub margin_samples: usize,
    /// Localization radii of the tail check, as fractions of `s_box`.
    pub tail_s_fractions: Vec<f64>,
    pub scaling: ScalingSpec,
}

impl ExperimentPlan {
    pub fn shipped_default() -> Self {
        Self {
            scenario: Scenario::shipped_default(),
            dictionary: DictionaryKind::Histogram,
            size: 16,
            radius: 1.0,
            n: 4096,
            trials: 2000,
            replicates: 500,
            check_trials: 100,
            seed: 20_240_601,
            t_grid: vec![1.0, 2.0, 3.0],
            s_grid: SGridSpec::default(),
            c0: 1.0,
            ratio_threshold: 3.0,
            margin_samples: 10_000,
            tail_s_fractions: vec![0.1, 0.3, 1.0],
            scaling: ScalingSpec::default(),
        }
    }

    /// Checks counts and grids; errors name the offending key.
    pub fn validate(&self) -> Result<()> {
        let fail = |key: &str, msg: &str| Err(LabError::Config(format!("plan.{key}: {msg}")));
        if self.trials < 1 {
            return fail("M", "at least one trial is required");
        }
        if self.check_trials < 1 {
            return fail("check_trials", "at least one trial is required");
        }
        if self.replicates < 2 {
            return fail("R", "at least two replicates are required");
        }
        if self.n < 1 {
            return fail("n", "sample size must be positive");
        }
        if self.size < 1 {
            return Err(LabError::Config("dictionary.size: must be positive".into()));
        }
        if !(self.radius > 0.0) {
            return Err(LabError::Config("dictionary.radius: must be positive".into()));
        }
        if self.t_grid.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
            return fail("t_grid", "values must be finite and nonnegative");
        }
        if self.s_grid.points < 1 || !(self.s_grid.min_ratio > 0.0 && self.s_grid.min_ratio < 1.0) {
            return fail("s_grid", "need points >= 1 and 0 < min_ratio < 1");
        }
        if self.tail_s_fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
            return fail("tail_s", "fractions must lie in (0, 1]");
        }
        if !(self.c0 >= 0.0) {
            return Err(LabError::Config("bounds.c0: must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn setup(&self) -> Result<ModelSetup> {
        self.setup_with(self.size)
    }

    pub fn setup_with(&self, size: usize) -> Result<ModelSetup> {
        self.validate()?;
        ModelSetup::new(self.scenario.clone(), Dictionary::new(self.dictionary, size)?, self.radius)
    }

    pub fn grid(&self, setup: &ModelSetup) -> Vec<f64> {
        s_grid(setup.s_box(), self.s_grid.points, self.s_grid.min_ratio)
    }

    /// Seed of dataset `index` in `stream`.
    pub fn seed_for(&self, stream: Stream, index: usize) -> u64 {
        derive_seed(self.seed, stream as u64, index as u64)
    }
}

/// A named pass/fail outcome with the raw quantity it was decided on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub threshold: f64,
    /// Non-gating checks are reported but never fail a run.
    pub gating: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            pass: value <= threshold,
            value,
            threshold,
            gating: true,
        }
    }

    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            pass: value >= threshold,
            value,
            threshold,
            gating: true,
        }
    }

    pub fn informational(mut self) -> Self {
        self.gating = false;
        self
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().filter(|c| c.gating).all(|c| c.pass)
}
