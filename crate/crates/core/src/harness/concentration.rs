//! Concentration of `ŝ = ‖ĝ − g⁰‖` around `s̃₀`.

use super::stats::{clopper_pearson, BinomialInterval};
use super::{all_pass, Check, ExperimentPlan};
use crate::bounds::{check_regime, delta_components, BoundConfig, RegimeReport};
use crate::erm::fit;
use crate::error::Result;
use crate::locproc::{concentration_point, estimate_expected_curves, ConcentrationPoint, ExpectedCurves};
use crate::model::ModelSetup;
use crate::rng::Stream;
use crate::scenario::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    pub seed: u64,
    pub s_hat: f64,
    /// `|ŝ − s̃₀|`
    pub deviation: f64,
    pub relative_deviation: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Set when the trial failed numerically; the trial is excluded from tails.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub t: f64,
    pub c0: f64,
    pub delta: f64,
    pub first_branch: f64,
    pub bracket: f64,
    pub nominal: f64,
    pub interval: BinomialInterval,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub n: usize,
    pub d: usize,
    pub point: ConcentrationPoint,
    pub bounds: BoundConfig,
    pub trials: Vec<TrialRecord>,
    pub failed_trials: usize,
    /// Tails at the configured `c₀`.
    pub tails: Vec<TailRow>,
    /// Smallest `c₀` for which the second branch alone keeps every tail
    /// frequency at or below `e^{−t}`.
    pub calibrated_c0: f64,
    /// Smallest `c₀` doing so with the first branch of `δ(t)` in place.
    pub joint_c0: f64,
    pub calibrated_tails: Vec<TailRow>,
    pub regime: RegimeReport,
    pub curves: ExpectedCurves,
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// Turns Monte Carlo curves into the constants of the deviation bounds.
///
/// `A_∞ = c_𝓜√D` comes from the dictionary envelope. `A_𝒥` is the
/// smallest slope for which `𝒥(s) = A_𝒥 s` dominates `√n·E_ℓ`, `√n·E₁` and
/// `√n·E_q/(A_∞ s)` on the grid.
pub fn calibrate_bounds(plan: &ExperimentPlan, setup: &ModelSetup, curves: &ExpectedCurves, s_tilde0: f64) -> BoundConfig {
    let d = setup.dim();
    let a_inf = setup.dict.envelope() * (d as f64).sqrt();
    let root_n = (curves.n as f64).sqrt();
    let slope = curves
        .grid
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > 0.0)
        .map(|(i, s)| {
            let el = curves.el[i] / s;
            let e1 = curves.e1[i] / s;
            let eq = (curves.eq[i] / s).max(curves.eq[i] / (a_inf * s * s));
            el.max(e1).max(eq)
        })
        .fold(0.0, f64::max);
    BoundConfig {
        a1: setup.scenario.a1,
        a2: setup.scenario.a2,
        a_j: root_n * slope,
        a_inf,
        a0: s_tilde0 * root_n,
        c0: plan.c0,
        n: curves.n,
        d,
    }
}

/// Bound constants available before any simulation, from Jensen's
/// inequality: `E‖a‖ ≤ (Σ_k P(ψ²φ_k²)/n)^{1/2}` and
/// `E‖c‖ ≤ (Σ_k Var φ_k/n)^{1/2}`. Used by `describe`.
pub fn prior_bounds(plan: &ExperimentPlan, setup: &ModelSetup) -> Result<BoundConfig> {
    let d = setup.dim();
    let sc = &setup.scenario;
    let dict = &setup.dict;
    let psi2_phi2 = crate::numerics::integrate(
        |x| {
            let mut p = vec![0.0; d];
            dict.eval_all(x, &mut p);
            let r = sc.g_star(x) - setup.target.g0(dict, x);
            4.0 * (r * r + sc.sigma(x).powi(2)) * p.iter().map(|v| v * v).sum::<f64>()
        },
        &setup.rule,
        dict.breakpoints(),
    )?;
    let var_phi = d as f64 - setup.mean_basis.iter().map(|m| m * m).sum::<f64>();
    let linear = psi2_phi2.max(0.0).sqrt();
    Ok(BoundConfig {
        a1: sc.a1,
        a2: sc.a2,
        a_j: linear.max(var_phi.max(0.0).sqrt()),
        a_inf: dict.envelope() * (d as f64).sqrt(),
        a0: linear / 2.0,
        c0: plan.c0,
        n: plan.n,
        d,
    })
}

pub(crate) fn run_trials(
    setup: &ModelSetup,
    n: usize,
    count: usize,
    s_tilde0: f64,
    seed_of: impl Fn(usize) -> u64 + Sync,
) -> Vec<TrialRecord> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let seed = seed_of(i);
            let data = sample(&setup.scenario, n, seed);
            match fit(&data, &setup.dict, &setup.constraint) {
                Ok(f) => {
                    let deviation = (f.s_hat - s_tilde0).abs();
                    TrialRecord {
                        index: i,
                        seed,
                        s_hat: f.s_hat,
                        deviation,
                        relative_deviation: if s_tilde0 > 0.0 { deviation / s_tilde0 } else { f64::NAN },
                        iterations: f.iterations,
                        converged: f.converged,
                        error: None,
                    }
                }
                Err(e) => TrialRecord {
                    index: i,
                    seed,
                    s_hat: f64::NAN,
                    deviation: f64::NAN,
                    relative_deviation: f64::NAN,
                    iterations: 0,
                    converged: false,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

/// Allowed number of exceedances at level `e^{−t}` among `m` trials.
fn allowed(t: f64, m: usize) -> usize {
    ((-t).exp() * m as f64).floor() as usize
}

/// `(k+1)`-th largest value, or 0 when there are at most `k` values.
fn order_statistic_desc(sorted_desc: &[f64], k: usize) -> f64 {
    sorted_desc.get(k).copied().unwrap_or(0.0)
}

fn tail_rows(cfg: &BoundConfig, t_grid: &[f64], s_tilde0: f64, deviations: &[f64]) -> Vec<TailRow> {
    t_grid
        .iter()
        .map(|&t| {
            let delta = delta_components(cfg, t, s_tilde0);
            let exceed = deviations.iter().filter(|d| **d > delta.value).count();
            let interval = clopper_pearson(exceed, deviations.len().max(1));
            let nominal = (-t).exp();
            TailRow {
                t,
                c0: cfg.c0,
                delta: delta.value,
                first_branch: delta.first_branch,
                bracket: delta.bracket,
                nominal,
                pass: interval.compatible_with_at_most(nominal),
                interval,
            }
        })
        .collect()
}

/// Returns `(second-branch-only c₀, joint c₀)`.
fn calibrate_c0(cfg: &BoundConfig, t_grid: &[f64], s_tilde0: f64, deviations: &[f64]) -> (f64, f64) {
    let mut sorted: Vec<f64> = deviations.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let m = sorted.len();
    let mut alone = 0.0f64;
    let mut joint = 0.0f64;
    for &t in t_grid {
        let k = allowed(t, m);
        let delta = delta_components(cfg, t, s_tilde0);
        alone = alone.max(order_statistic_desc(&sorted, k) / delta.bracket);
        let beyond: Vec<f64> = sorted.iter().copied().filter(|d| *d > delta.first_branch).collect();
        joint = joint.max(order_statistic_desc(&beyond, k) / delta.bracket);
    }
    (alone, joint)
}

/// Estimates `s̃₀` from `R` replicates, then measures the tails of
/// `|ŝ − s̃₀|` beyond `δ(t)` over `M` independent trials.
pub fn run_concentration(plan: &ExperimentPlan) -> Result<ConcentrationReport> {
    let setup = plan.setup()?;
    let grid = plan.grid(&setup);
    let curves = estimate_expected_curves(&setup, plan.n, plan.replicates, &grid, plan.seed)?;
    let point = concentration_point(&curves);
    let bounds = calibrate_bounds(plan, &setup, &curves, point.s_tilde0);

    let trials = run_trials(&setup, plan.n, plan.trials, point.s_tilde0, |i| plan.seed_for(Stream::Trials, i));
    let deviations: Vec<f64> = trials.iter().filter(|r| r.error.is_none()).map(|r| r.deviation).collect();
    let failed_trials = trials.len() - deviations.len();

    let tails = tail_rows(&bounds, &plan.t_grid, point.s_tilde0, &deviations);
    let (calibrated_c0, joint_c0) = calibrate_c0(&bounds, &plan.t_grid, point.s_tilde0, &deviations);
    let calibrated_tails = tail_rows(
        &BoundConfig {
            c0: calibrated_c0,
            ..bounds
        },
        &plan.t_grid,
        point.s_tilde0,
        &deviations,
    );
    let regime = check_regime(&bounds, plan.ratio_threshold);

    let mut checks = vec![Check::at_most("failed_trials", failed_trials as f64, 0.0)];
    for (label, rows) in [("tail", &tails), ("calibrated_tail", &calibrated_tails)] {
        for row in rows.iter() {
            checks.push(Check {
                name: format!("{label}[t={}]", row.t),
                pass: row.pass,
                value: row.interval.lower,
                threshold: row.nominal,
                gating: true,
            });
        }
    }
    checks.push(
        Check::at_least("regime", regime.conditions.iter().filter(|c| c.pass).count() as f64, regime.conditions.len() as f64)
            .informational(),
    );
    let pass = all_pass(&checks);
    Ok(ConcentrationReport {
        n: plan.n,
        d: setup.dim(),
        point,
        bounds,
        trials,
        failed_trials,
        tails,
        calibrated_c0,
        joint_c0,
        calibrated_tails,
        regime,
        curves,
        checks,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> BoundConfig {
        BoundConfig {
            a1: 1.0,
            a2: 1.0,
            a_j: 1.0,
            a_inf: 1.0,
            a0: 1.0,
            c0: 1.0,
            n: 100,
            d: 4,
        }
    }

    #[test]
    fn calibrated_c0_leaves_allowed_exceedances() {
        let c = cfg();
        let devs: Vec<f64> = (1..=100).map(|i| i as f64 * 1e-3).collect();
        let t = [1.0, 2.0];
        let (alone, joint) = calibrate_c0(&c, &t, 0.0, &devs);
        assert!(joint <= alone + 1e-15);
        let rows = tail_rows(&BoundConfig { c0: alone, ..c }, &t, 0.0, &devs);
        for r in &rows {
            assert!(r.interval.successes <= allowed(r.t, 100));
            assert!(r.interval.frequency <= r.nominal);
        }
        // Any smaller constant lets one more trial through at some t.
        let rows = tail_rows(&BoundConfig { c0: alone * 0.999, ..c }, &t, 0.0, &devs);
        assert!(rows.iter().any(|r| r.interval.successes > allowed(r.t, 100)));
    }

    #[test]
    fn first_branch_can_absorb_the_calibration() {
        let c = BoundConfig { a_j: 1e4, a_inf: 1e4, ..cfg() };
        let devs = vec![0.01; 50];
        let (alone, joint) = calibrate_c0(&c, &[1.0], 1.0, &devs);
        assert!(alone > 0.0);
        assert_eq!(joint, 0.0);
    }

    #[test]
    fn noiseless_centered_has_empty_tails() {
        let plan = ExperimentPlan {
            scenario: crate::scenario::Scenario::noiseless_centered(),
            size: 4,
            n: 256,
            trials: 20,
            replicates: 4,
            s_grid: super::super::SGridSpec { points: 10, min_ratio: 1e-3 },
            ..ExperimentPlan::shipped_default()
        };
        let r = run_concentration(&plan).unwrap();
        assert!(r.trials.iter().all(|t| t.s_hat < 1e-12), "{:?}", &r.trials[..3]);
        assert!(r.tails.iter().all(|t| t.interval.successes == 0));
        assert!(r.pass);
    }

    #[test]
    fn zero_trials_is_rejected() {
        let plan = ExperimentPlan { trials: 0, ..ExperimentPlan::shipped_default() };
        let err = run_concentration(&plan).unwrap_err();
        assert!(err.to_string().contains("plan.M"));
    }
}
