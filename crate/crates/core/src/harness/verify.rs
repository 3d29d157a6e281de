//! Checks of the margin relation, the second-order margin, the
//! representation of `ŝ`, the deviation tails and the expected curves.

use super::concentration::calibrate_bounds;
use super::stats::{clopper_pearson, BinomialInterval};
use super::{all_pass, Check, ExperimentPlan};
use crate::bounds::{lemma_dev_thresholds, BoundConfig, LemmaThresholds};
use crate::erm::{fit, ConstraintKind};
use crate::error::Result;
use crate::locproc::{
    concentration_point, estimate_expected_curves, grid_argmin, variational_s_hat, ConcentrationPoint,
    ExpectedCurves, LocalProcess,
};
use crate::model::ModelSetup;
use crate::rng::{sequential, unit_f64, Stream};
use crate::scenario::sample;
use nalgebra::DVector;
use rand_chacha::rand_core::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Absolute slack for identities that hold exactly up to round-off.
pub const IDENTITY_TOL: f64 = 1e-8;
/// Extra absolute allowance on top of the grid step in the representation check.
pub const SOLVER_TOL: f64 = 1e-6;
/// Monte Carlo comparisons allow this many standard errors.
pub const SE_FACTOR: f64 = 3.0;

struct Expected {
    curves: ExpectedCurves,
    point: ConcentrationPoint,
    bounds: BoundConfig,
}

fn expected(plan: &ExperimentPlan, setup: &ModelSetup, grid: &[f64]) -> Result<Expected> {
    let curves = estimate_expected_curves(setup, plan.n, plan.replicates, grid, plan.seed)?;
    let point = concentration_point(&curves);
    let bounds = calibrate_bounds(plan, setup, &curves, point.s_tilde0);
    Ok(Expected { curves, point, bounds })
}

// ---------------------------------------------------------------- margin

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginReport {
    pub samples: usize,
    /// `C = 2(A₁ + A₂)`
    pub c: f64,
    /// `max σ²(f − f⁰) − C²·P(f − f⁰)`
    pub max_margin_violation: f64,
    /// `max ‖g − g⁰‖² − P(f − f⁰)`
    pub max_lower_chain_violation: f64,
    /// `max σ²(f − f⁰) − C²‖g − g⁰‖²`
    pub max_upper_chain_violation: f64,
    /// `max ‖g‖_∞ − A₂` over the sampled model functions.
    pub max_model_bound_excess: f64,
    /// `max |Y_i| − A₁` over one sampled dataset.
    pub max_response_excess: f64,
    /// Largest observed `σ²(f − f⁰)/P(f − f⁰)`, to compare with `C²`.
    pub max_variance_ratio: f64,
    /// Violations with `C` replaced by `C/2`.
    pub control_violations: usize,
    pub control_max_violation: f64,
    pub checks: Vec<Check>,
    pub pass: bool,
}

struct MarginSample {
    margin: f64,
    lower: f64,
    upper: f64,
    bound: f64,
    ratio: f64,
    control: f64,
}

/// Random model direction: coordinates uniform in the box (or in the
/// radius cube, then projected), scaled by `10^{−3U}` to cover small and
/// boundary-hugging functions alike. Index 0 is `g = g⁰`.
fn random_member(setup: &ModelSetup, seed: u64, index: usize) -> DVector<f64> {
    let con = &setup.constraint;
    let d = setup.dim();
    if index == 0 {
        return con.center().clone();
    }
    let mut rng = sequential(seed);
    let scale = 10f64.powf(-3.0 * unit_f64(rng.next_u64()));
    let half = match con.kind() {
        ConstraintKind::Box => con.half_width(),
        ConstraintKind::BallCap => con.radius(),
    };
    let h = DVector::from_fn(d, |_, _| half * scale * (2.0 * unit_f64(rng.next_u64()) - 1.0));
    let beta = con.center() + h;
    match con.kind() {
        ConstraintKind::Box => beta,
        ConstraintKind::BallCap => con.project(&beta),
    }
}

/// Draws `samples` model functions and checks the variance–risk chain
/// `σ²(f − f⁰) ≤ C²‖g − g⁰‖² ≤ C²P(f − f⁰)` along with the boundedness
/// conditions. The halved-`C` control is reported without gating.
pub fn verify_margin(plan: &ExperimentPlan, samples: usize) -> Result<MarginReport> {
    let setup = plan.setup()?;
    let samples = samples.max(1);
    let pop = setup.population();
    let c = setup.scenario.c();
    let theta0 = DVector::from_column_slice(setup.theta0());
    let rows: Vec<MarginSample> = (0..samples)
        .into_par_iter()
        .map(|i| -> Result<MarginSample> {
            let beta = random_member(&setup, plan.seed_for(Stream::Margin, i), i);
            let h: Vec<f64> = (&beta - &theta0).iter().copied().collect();
            let p = pop.excess_risk(&h)?;
            let dist = pop.squared_distance(&h)?;
            let var = pop.second_moment(&h)? - p * p;
            let sup = setup.dict.sup_norm(beta.as_slice());
            Ok(MarginSample {
                margin: var - c * c * p,
                lower: dist - p,
                upper: var - c * c * dist,
                bound: sup - setup.scenario.a2,
                ratio: if p > 1e-14 { var / p } else { 0.0 },
                control: var - 0.25 * c * c * p,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max = |f: &dyn Fn(&MarginSample) -> f64| rows.iter().map(f).fold(f64::NEG_INFINITY, f64::max);

    let data = sample(&setup.scenario, plan.n, plan.seed_for(Stream::Margin, samples));
    let max_response_excess = data.ys.iter().map(|y| y.abs()).fold(0.0, f64::max) - setup.scenario.a1;

    let max_margin_violation = max(&|r| r.margin);
    let max_lower_chain_violation = max(&|r| r.lower);
    let max_upper_chain_violation = max(&|r| r.upper);
    let max_model_bound_excess = max(&|r| r.bound);
    let control_violations = rows.iter().filter(|r| r.control > IDENTITY_TOL).count();
    let checks = vec![
        Check::at_most("variance_vs_excess_risk", max_margin_violation, IDENTITY_TOL),
        Check::at_most("excess_risk_vs_distance", max_lower_chain_violation, IDENTITY_TOL),
        Check::at_most("variance_vs_distance", max_upper_chain_violation, IDENTITY_TOL),
        Check::at_most("model_sup_norm", max_model_bound_excess, 1e-9),
        Check::at_most("response_bound", max_response_excess, 1e-12),
        Check::at_least("halved_constant_control", control_violations as f64, 1.0).informational(),
    ];
    Ok(MarginReport {
        samples,
        c,
        max_margin_violation,
        max_lower_chain_violation,
        max_upper_chain_violation,
        max_model_bound_excess,
        max_response_excess,
        max_variance_ratio: max(&|r| r.ratio),
        control_violations,
        control_max_violation: max(&|r| r.control),
        pass: all_pass(&checks),
        checks,
    })
}

// ---------------------------------------------------------- second order

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderReport {
    pub trials: usize,
    /// Smallest gap over trials and grid, each trial centred on its own
    /// minimizer of `s² − Ê_{n,ℓ}(s)`.
    pub min_gap: f64,
    /// Same, centred on the Monte Carlo `s̃₀` (diagnostic).
    pub min_gap_at_expected_center: f64,
    pub s_tilde0: f64,
    /// Smallest `gap + 3·SE` on the expected curve.
    pub expected_min_slack: f64,
    pub expected_min_gap: f64,
    /// Largest midpoint-concavity defect of the mean linear curve.
    pub concavity_defect: f64,
    pub checks: Vec<Check>,
    pub pass: bool,
}

fn gap(s: f64, e: f64, center: f64, e_center: f64) -> f64 {
    s * s - e - (center * center - e_center) - (s - center).powi(2)
}

/// Largest amount by which an interior grid value falls below the chord of
/// its neighbours.
fn concavity_defect(grid: &[f64], values: &[f64]) -> f64 {
    (1..grid.len().saturating_sub(1))
        .map(|i| {
            let w = (grid[i] - grid[i - 1]) / (grid[i + 1] - grid[i - 1]);
            values[i - 1] * (1.0 - w) + values[i + 1] * w - values[i]
        })
        .fold(0.0, f64::max)
}

pub fn verify_second_order(plan: &ExperimentPlan) -> Result<SecondOrderReport> {
    let setup = plan.setup()?;
    let grid = plan.grid(&setup);
    let ex = expected(plan, &setup, &grid)?;
    let s_tilde0 = ex.point.s_tilde0;

    let per_trial: Vec<(f64, f64)> = (0..plan.check_trials)
        .into_par_iter()
        .map(|i| -> Result<(f64, f64)> {
            let data = sample(&setup.scenario, plan.n, plan.seed_for(Stream::Trials, i));
            let lp = LocalProcess::from_data(&setup, &data)?;
            let el = grid.iter().map(|s| lp.linear_sup(*s).map(|v| v.value)).collect::<Result<Vec<_>>>()?;
            let half = lp.norm_a() / 2.0;
            let center = if half <= setup.s_box() { half } else { grid_argmin(&grid, &el).s };
            let e_center = lp.linear_sup(center)?.value;
            let e_tilde = lp.linear_sup(s_tilde0)?.value;
            let own = grid.iter().zip(&el).map(|(s, e)| gap(*s, *e, center, e_center)).fold(f64::INFINITY, f64::min);
            let at_tilde = grid.iter().zip(&el).map(|(s, e)| gap(*s, *e, s_tilde0, e_tilde)).fold(f64::INFINITY, f64::min);
            Ok((own, at_tilde))
        })
        .collect::<Result<Vec<_>>>()?;
    let min_gap = per_trial.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let min_gap_at_expected_center = per_trial.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);

    let c = &ex.curves;
    let e_center = if ex.point.closed_form { c.slope_m * s_tilde0 } else { c.el[grid_argmin(&grid, &c.el).index] };
    let mut expected_min_gap = f64::INFINITY;
    let mut expected_min_slack = f64::INFINITY;
    for (i, s) in grid.iter().enumerate() {
        let g = gap(*s, c.el[i], s_tilde0, e_center);
        expected_min_gap = expected_min_gap.min(g);
        expected_min_slack = expected_min_slack.min(g + SE_FACTOR * (c.se_el[i] + c.se_m * s_tilde0));
    }
    let concavity = concavity_defect(&grid, &c.el);
    let checks = vec![
        Check::at_least("empirical_second_order_gap", min_gap, -IDENTITY_TOL),
        Check::at_least("expected_second_order_gap", expected_min_slack, -IDENTITY_TOL),
        Check::at_most("linear_curve_concavity", concavity, IDENTITY_TOL),
        Check::at_least("gap_at_expected_center", min_gap_at_expected_center, -IDENTITY_TOL).informational(),
    ];
    Ok(SecondOrderReport {
        trials: plan.check_trials,
        min_gap,
        min_gap_at_expected_center,
        s_tilde0,
        expected_min_slack,
        expected_min_gap,
        concavity_defect: concavity,
        pass: all_pass(&checks),
        checks,
    })
}

// -------------------------------------------------------- representation

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepresentationRecord {
    pub index: usize,
    pub s_hat: f64,
    pub variational: f64,
    pub discrepancy: f64,
    /// Local grid step at the variational minimizer plus the solver allowance.
    pub allowance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentationReport {
    pub trials: usize,
    pub records: Vec<RepresentationRecord>,
    pub max_discrepancy: f64,
    /// `max (discrepancy − allowance)`; nonpositive when every trial passes.
    pub max_excess: f64,
    pub max_grid_step: f64,
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// Compares `ŝ` from the fitted estimator with the grid minimizer of
/// `s² − Ê_n(s)` on the same dataset.
pub fn verify_representation(plan: &ExperimentPlan) -> Result<RepresentationReport> {
    let setup = plan.setup()?;
    let grid = plan.grid(&setup);
    let records = (0..plan.check_trials)
        .into_par_iter()
        .map(|i| -> Result<RepresentationRecord> {
            let data = sample(&setup.scenario, plan.n, plan.seed_for(Stream::Trials, i));
            let fitted = fit(&data, &setup.dict, &setup.constraint)?;
            let lp = LocalProcess::from_data(&setup, &data)?;
            let arg = variational_s_hat(&lp, &grid)?;
            let discrepancy = (fitted.s_hat - arg.s).abs();
            Ok(RepresentationRecord {
                index: i,
                s_hat: fitted.s_hat,
                variational: arg.s,
                discrepancy,
                allowance: arg.local_step + SOLVER_TOL,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_discrepancy = records.iter().map(|r| r.discrepancy).fold(0.0, f64::max);
    let max_excess = records.iter().map(|r| r.discrepancy - r.allowance).fold(f64::NEG_INFINITY, f64::max);
    let max_grid_step = grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let checks = vec![Check::at_most("representation_discrepancy", max_excess, 0.0)];
    Ok(RepresentationReport {
        trials: plan.check_trials,
        records,
        max_discrepancy,
        max_excess,
        max_grid_step,
        pass: all_pass(&checks),
        checks,
    })
}

// ------------------------------------------------------------ tail lemma

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailLemmaRow {
    pub s: f64,
    pub t: f64,
    pub expected: f64,
    pub thresholds: LemmaThresholds,
    pub nominal: f64,
    /// `Ê_n(s) ≥ E(s) + upper`
    pub upper: BinomialInterval,
    /// `Ê_{n,ℓ}(s) ≤ E(s) − lower`
    pub lower: BinomialInterval,
    /// `Ê_n(s) ≤ E(s) − lower` (diagnostic)
    pub lower_full: BinomialInterval,
    pub upper_pass: bool,
    pub lower_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailLemmaReport {
    pub trials: usize,
    pub bounds: BoundConfig,
    pub rows: Vec<TailLemmaRow>,
    pub curves: ExpectedCurves,
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// Grid indices closest to `fraction·s_box`.
fn tail_indices(grid: &[f64], s_box: f64, fractions: &[f64]) -> Vec<usize> {
    fractions
        .iter()
        .map(|f| {
            let target = f * s_box;
            (0..grid.len())
                .min_by(|a, b| (grid[*a] - target).abs().total_cmp(&(grid[*b] - target).abs()))
                .unwrap_or(0)
        })
        .collect()
}

pub fn verify_tail_lemma(plan: &ExperimentPlan) -> Result<TailLemmaReport> {
    let setup = plan.setup()?;
    let grid = plan.grid(&setup);
    let ex = expected(plan, &setup, &grid)?;
    let idx = tail_indices(&grid, setup.s_box(), &plan.tail_s_fractions);
    let s_values: Vec<f64> = idx.iter().map(|i| grid[*i]).collect();

    // Per trial: (Ê_n(s), Ê_{n,ℓ}(s)) at each selected s.
    let values: Vec<Vec<(f64, f64)>> = (0..plan.trials)
        .into_par_iter()
        .map(|i| -> Result<Vec<(f64, f64)>> {
            let data = sample(&setup.scenario, plan.n, plan.seed_for(Stream::Trials, i));
            let lp = LocalProcess::from_data(&setup, &data)?;
            s_values
                .iter()
                .map(|s| Ok((lp.full_sup(*s)?.value, lp.linear_sup(*s)?.value)))
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for (j, (&i, &s)) in idx.iter().zip(&s_values).enumerate() {
        let e = ex.curves.e[i];
        for &t in &plan.t_grid {
            let th = lemma_dev_thresholds(&ex.bounds, s, t);
            let count = |f: &dyn Fn(&(f64, f64)) -> bool| values.iter().filter(|v| f(&v[j])).count();
            let upper = clopper_pearson(count(&|v| v.0 >= e + th.upper), plan.trials);
            let lower = clopper_pearson(count(&|v| v.1 <= e - th.lower), plan.trials);
            let lower_full = clopper_pearson(count(&|v| v.0 <= e - th.lower), plan.trials);
            let nominal = (-t).exp();
            rows.push(TailLemmaRow {
                s,
                t,
                expected: e,
                thresholds: th,
                nominal,
                upper_pass: upper.compatible_with_at_most(nominal),
                lower_pass: lower.compatible_with_at_most(nominal),
                upper,
                lower,
                lower_full,
            });
        }
    }
    let mut checks = Vec::new();
    for r in &rows {
        let name = |side: &str| format!("{side}[s={:.6},t={}]", r.s, r.t);
        checks.push(Check {
            name: name("upper_tail"),
            pass: r.upper_pass,
            value: r.upper.lower,
            threshold: r.nominal,
            gating: true,
        });
        checks.push(Check {
            name: name("lower_tail"),
            pass: r.lower_pass,
            value: r.lower.lower,
            threshold: r.nominal,
            gating: true,
        });
    }
    Ok(TailLemmaReport {
        trials: plan.trials,
        bounds: ex.bounds,
        rows,
        curves: ex.curves,
        pass: all_pass(&checks),
        checks,
    })
}

// ---------------------------------------------------------------- curves

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderRow {
    pub s: f64,
    pub e1: f64,
    pub se: f64,
    /// `s·√(D/n)`
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvesReport {
    pub curves: ExpectedCurves,
    pub point: ConcentrationPoint,
    pub bounds: BoundConfig,
    pub first_order: Vec<FirstOrderRow>,
    /// Largest decrease of each mean curve beyond `3·SE` (E₁, E_ℓ, E_q, E).
    pub monotonicity_defect: [f64; 4],
    /// `max E − E_ℓ − E_q − 3·SE`
    pub subadditivity_excess: f64,
    /// `max E_ℓ(s) − A_𝒥 s/√n − 3·SE`
    pub linear_aggregate_excess: f64,
    /// `max E_q(s) − A_∞ A_𝒥 s²/√n − 3·SE`
    pub quadratic_aggregate_excess: f64,
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// Ten grid indices spread evenly over the positive part of the grid.
fn spread_indices(len: usize, count: usize) -> Vec<usize> {
    if len <= 1 {
        return vec![0];
    }
    let count = count.min(len - 1).max(1);
    let mut out: Vec<usize> = (0..count)
        .map(|j| 1 + ((len - 2) as f64 * j as f64 / (count.max(2) - 1) as f64).round() as usize)
        .collect();
    out.dedup();
    out
}

fn monotone_defect(values: &[f64], se: &[f64]) -> f64 {
    values
        .windows(2)
        .zip(se.windows(2))
        .map(|(v, e)| v[0] - v[1] - SE_FACTOR * (e[0] + e[1]))
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn verify_curves(plan: &ExperimentPlan) -> Result<CurvesReport> {
    let setup = plan.setup()?;
    let grid = plan.grid(&setup);
    let ex = expected(plan, &setup, &grid)?;
    let c = &ex.curves;
    let rate = (setup.dim() as f64 / plan.n as f64).sqrt();
    let root_n = (plan.n as f64).sqrt();
    let first_order: Vec<FirstOrderRow> = spread_indices(grid.len(), 10)
        .into_iter()
        .map(|i| FirstOrderRow {
            s: grid[i],
            e1: c.e1[i],
            se: c.se_e1[i],
            bound: grid[i] * rate,
        })
        .collect();
    let first_order_excess = first_order
        .iter()
        .map(|r| r.e1 - r.bound - SE_FACTOR * r.se)
        .fold(f64::NEG_INFINITY, f64::max);
    let monotonicity_defect = [
        monotone_defect(&c.e1, &c.se_e1),
        monotone_defect(&c.el, &c.se_el),
        monotone_defect(&c.eq, &c.se_eq),
        monotone_defect(&c.e, &c.se_e),
    ];
    let mut subadditivity_excess = f64::NEG_INFINITY;
    let mut linear_aggregate_excess = f64::NEG_INFINITY;
    let mut quadratic_aggregate_excess = f64::NEG_INFINITY;
    for (i, s) in grid.iter().enumerate() {
        subadditivity_excess =
            subadditivity_excess.max(c.e[i] - c.el[i] - c.eq[i] - SE_FACTOR * (c.se_e[i] + c.se_el[i] + c.se_eq[i]));
        let j = ex.bounds.a_j * s / root_n;
        linear_aggregate_excess = linear_aggregate_excess.max(c.el[i] - j - SE_FACTOR * c.se_el[i]);
        quadratic_aggregate_excess =
            quadratic_aggregate_excess.max(c.eq[i] - ex.bounds.a_inf * s * j - SE_FACTOR * c.se_eq[i]);
    }
    let tol = 1e-12;
    let mut checks = vec![Check::at_most("first_order_bound", first_order_excess, tol)];
    for (name, v) in ["E1", "El", "Eq", "E"].iter().zip(monotonicity_defect) {
        checks.push(Check::at_most(&format!("monotone_{name}"), v, tol));
    }
    checks.push(Check::at_most("subadditivity", subadditivity_excess, tol));
    checks.push(Check::at_most("linear_aggregate_bound", linear_aggregate_excess, tol));
    checks.push(Check::at_most("quadratic_aggregate_bound", quadratic_aggregate_excess, tol));
    Ok(CurvesReport {
        curves: ex.curves,
        point: ex.point,
        bounds: ex.bounds,
        first_order,
        monotonicity_defect,
        subadditivity_excess,
        linear_aggregate_excess,
        quadratic_aggregate_excess,
        pass: all_pass(&checks),
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::SGridSpec;
    use crate::scenario::Scenario;

    fn small(scenario: Scenario) -> ExperimentPlan {
        ExperimentPlan {
            scenario,
            size: 8,
            n: 512,
            trials: 200,
            replicates: 20,
            check_trials: 20,
            s_grid: SGridSpec { points: 60, min_ratio: 1e-3 },
            t_grid: vec![2.0],
            ..ExperimentPlan::shipped_default()
        }
    }

    #[test]
    fn margin_holds_and_saturated_control_trips() {
        let r = verify_margin(&small(Scenario::shipped_default()), 300).unwrap();
        assert!(r.pass, "{:?}", r.checks);
        let r = verify_margin(&small(Scenario::saturated()), 300).unwrap();
        assert!(r.pass);
        assert!(r.control_violations > 0, "ratio {}", r.max_variance_ratio);
    }

    #[test]
    fn center_sample_is_g0() {
        let plan = small(Scenario::shipped_default());
        let setup = plan.setup().unwrap();
        let b = random_member(&setup, 1, 0);
        assert_eq!(b.as_slice(), setup.theta0());
    }

    #[test]
    fn second_order_gap_nonnegative() {
        let r = verify_second_order(&small(Scenario::shipped_default())).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn representation_within_grid_step() {
        let r = verify_representation(&small(Scenario::shipped_default())).unwrap();
        assert!(r.pass, "max excess {}", r.max_excess);
        let r = verify_representation(&small(Scenario::noiseless_centered())).unwrap();
        assert!(r.records.iter().all(|x| x.s_hat < 1e-12 && x.variational < 1e-12), "{:?}", &r.records[..3]);
    }

    #[test]
    fn tail_lemma_and_curves() {
        let plan = small(Scenario::shipped_default());
        let r = verify_tail_lemma(&plan).unwrap();
        assert!(r.pass);
        assert_eq!(r.rows.len(), plan.tail_s_fractions.len());
        let c = verify_curves(&plan).unwrap();
        assert!(c.pass, "{:?}", c.checks);
        assert_eq!(c.first_order.len(), 10);
    }

    #[test]
    fn spread_covers_the_grid() {
        assert_eq!(spread_indices(201, 10).first(), Some(&1));
        assert_eq!(spread_indices(201, 10).last(), Some(&200));
        assert_eq!(spread_indices(201, 10).len(), 10);
    }

    #[test]
    fn concavity_of_linear_is_zero() {
        let g = [0.0, 0.1, 0.5, 1.0];
        let v: Vec<f64> = g.iter().map(|s| 3.0 * s).collect();
        assert!(concavity_defect(&g, &v) < 1e-15);
    }
}
