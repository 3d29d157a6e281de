//! Behaviour of `ŝ − s̃₀` and of `s̃₀` as `n` and `D` vary.

use super::concentration::run_trials;
use super::stats::{ls_slope, quantile};
use super::{all_pass, Check, ExperimentPlan};
use crate::error::{LabError, Result};
use crate::locproc::{concentration_point, estimate_expected_curves, ConcentrationPoint};
use crate::model::ModelSetup;
use crate::numerics::integrate;
use crate::rng::{derive_seed, Stream};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    pub d: usize,
    pub s_tilde0: f64,
    pub median_relative_deviation: f64,
    pub p90_relative_deviation: f64,
    pub failed_trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthRow {
    pub n: usize,
    pub d: usize,
    pub s_tilde0: f64,
    /// `s̃₀ / √(D/n)`
    pub ratio: f64,
    /// `s̃₀ / (ρ√(D/n))` with `ρ² = E(Y − g⁰(X))²`.
    pub noise_ratio: f64,
    /// `ratio` relative to its value at the reference size.
    pub relative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub trials: usize,
    pub rows: Vec<ScalingRow>,
    /// Least-squares slope of `ln median` on `ln n`.
    pub slope: f64,
    /// Rate of the dominant branch, reported for comparison.
    pub predicted_slope: f64,
    pub widths: Vec<WidthRow>,
    pub reference_d: usize,
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// `s̃₀` from `R` replicates; only `[0, s_box]` is needed when `m/2 ≤ s_box`.
fn s_tilde0(plan: &ExperimentPlan, setup: &ModelSetup, n: usize, seed: u64) -> Result<ConcentrationPoint> {
    let coarse = [0.0, setup.s_box()];
    let point = concentration_point(&estimate_expected_curves(setup, n, plan.replicates, &coarse, seed)?);
    if point.closed_form {
        return Ok(point);
    }
    let grid = plan.grid(setup);
    Ok(concentration_point(&estimate_expected_curves(setup, n, plan.replicates, &grid, seed)?))
}

/// `ρ = (E(Y − g⁰(X))²)^{1/2}`, the scale of the noise seen by the model.
fn residual_scale(setup: &ModelSetup) -> Result<f64> {
    let sc = &setup.scenario;
    let v = integrate(
        |x| (sc.g_star(x) - setup.target.g0(&setup.dict, x)).powi(2) + sc.sigma(x).powi(2),
        &setup.rule,
        setup.dict.breakpoints(),
    )?;
    Ok(v.sqrt())
}

/// Relative deviation quantiles over `n` at the plan's `D`, and `s̃₀` over
/// `D` at the plan's `n`.
pub fn scaling_study(plan: &ExperimentPlan) -> Result<ScalingReport> {
    plan.validate()?;
    let spec = &plan.scaling;
    let mut ns = spec.n_values.clone();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 3 {
        return Err(LabError::Config("plan.scaling.n_values: at least three distinct sample sizes are required".into()));
    }
    if spec.d_values.is_empty() {
        return Err(LabError::Config("plan.scaling.d_values: at least one dictionary size is required".into()));
    }
    let setup = plan.setup()?;
    let mut rows = Vec::with_capacity(ns.len());
    for (k, &n) in ns.iter().enumerate() {
        let master = derive_seed(plan.seed, Stream::Scaling as u64, k as u64);
        let point = s_tilde0(plan, &setup, n, master)?;
        let trials = run_trials(&setup, n, plan.trials, point.s_tilde0, |i| {
            derive_seed(master, Stream::Trials as u64, i as u64)
        });
        let mut rel: Vec<f64> = trials.iter().filter(|t| t.error.is_none()).map(|t| t.relative_deviation).collect();
        let failed_trials = trials.len() - rel.len();
        rel.sort_by(f64::total_cmp);
        rows.push(ScalingRow {
            n,
            d: setup.dim(),
            s_tilde0: point.s_tilde0,
            median_relative_deviation: quantile(&rel, 0.5),
            p90_relative_deviation: quantile(&rel, 0.9),
            failed_trials,
        });
    }
    let ln_n: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let ln_med: Vec<f64> = rows.iter().map(|r| r.median_relative_deviation.ln()).collect();
    let slope = ls_slope(&ln_n, &ln_med);

    let reference_d = if spec.d_values.contains(&plan.size) { plan.size } else { spec.d_values[0] };
    let mut widths = Vec::with_capacity(spec.d_values.len());
    for (k, &d) in spec.d_values.iter().enumerate() {
        let s = plan.setup_with(d)?;
        let master = derive_seed(plan.seed, Stream::Scaling as u64, (ns.len() + k) as u64);
        let point = s_tilde0(plan, &s, plan.n, master)?;
        let root = (d as f64 / plan.n as f64).sqrt();
        widths.push(WidthRow {
            n: plan.n,
            d,
            s_tilde0: point.s_tilde0,
            ratio: point.s_tilde0 / root,
            noise_ratio: point.s_tilde0 / (residual_scale(&s)? * root),
            relative: 0.0,
        });
    }
    let reference = widths.iter().find(|w| w.d == reference_d).map(|w| w.ratio).unwrap_or(f64::NAN);
    for w in &mut widths {
        w.relative = w.ratio / reference;
    }

    let decreasing_violations = rows
        .windows(2)
        .filter(|w| !(w[1].median_relative_deviation < w[0].median_relative_deviation))
        .count();
    let (lo, hi) = spec.band;
    let mut checks = vec![
        Check::at_most("median_strictly_decreasing", decreasing_violations as f64, 0.0),
        Check::at_most("slope_upper", slope, 0.0),
        Check::at_least("slope_lower", slope, -0.5),
        Check::at_most(
            "failed_trials",
            rows.iter().map(|r| r.failed_trials).sum::<usize>() as f64,
            0.0,
        ),
    ];
    for w in &widths {
        checks.push(Check::at_least(&format!("width_lower[D={}]", w.d), w.relative, lo));
        checks.push(Check::at_most(&format!("width_upper[D={}]", w.d), w.relative, hi));
        let abs_in_band = w.noise_ratio >= lo && w.noise_ratio <= hi;
        checks.push(
            Check {
                name: format!("noise_scaled_width[D={}]", w.d),
                pass: abs_in_band,
                value: w.noise_ratio,
                threshold: hi,
                gating: true,
            }
            .informational(),
        );
    }
    Ok(ScalingReport {
        trials: plan.trials,
        rows,
        slope,
        predicted_slope: -0.25,
        widths,
        reference_d,
        pass: all_pass(&checks),
        checks,
    })
}
