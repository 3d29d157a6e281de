//! Localized suprema of the empirical processes indexed by
//! `𝒢_s = {g ∈ 𝒢 : ‖g − g⁰‖ ≤ s}` and their Monte Carlo expectations.
//!
//! Writing `g − g⁰ = Σ β_k φ_k`, every process is a linear-plus-quadratic
//! form in `β`:
//!
//! ```text
//! (P_n − P)(ψ·(g − g⁰))   = a'β          a_k = P_n(ψ φ_k)
//! (P_n − P)(g − g⁰)       = c'β          c_k = (P_n − P)(φ_k)
//! (P_n − P)((g − g⁰)²)    = β'Mβ         M_jk = P_n(φ_j φ_k) − δ_jk
//! (P_n − P)(f⁰ − f_g)     = −a'β − β'Mβ
//! ```
//!
//! (`P(ψ φ_k) = 0` by residual orthogonality, checked when the
//! [`ModelSetup`] is built.) For `s ≤ s_box` the `L₂` ball lies inside the
//! model and each supremum is a trust-region subproblem. Beyond `s_box` a
//! multi-start projected ascent over ball ∩ model is used and the value is
//! flagged approximate.

use crate::error::Result;
use crate::model::ModelSetup;
use crate::numerics::projection::{dykstra, project_ball, project_box_ball};
use crate::numerics::TrsSolver;
use crate::rng::{derive_seed, sequential, Stream};
use crate::scenario::{sample, Dataset};
use nalgebra::{DMatrix, DVector};
use rand_chacha::rand_core::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Number of starts of the approximate ascent beyond `s_box`.
pub const MULTI_START: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCoefficients {
    pub a: DVector<f64>,
    pub c: DVector<f64>,
    pub m: DMatrix<f64>,
}

pub fn empirical_coefficients(data: &Dataset, setup: &ModelSetup) -> EmpiricalCoefficients {
    let d = setup.dim();
    let n = data.n() as f64;
    let dict = &setup.dict;
    let mut a = DVector::zeros(d);
    let mut c = DVector::zeros(d);
    let mut m = DMatrix::zeros(d, d);
    let mut phi = vec![0.0; d];
    for (x, y) in data.xs.iter().zip(&data.ys) {
        dict.eval_all(*x, &mut phi);
        let psi = crate::scenario::psi(setup.target.g0(dict, *x), *y);
        for j in 0..d {
            if phi[j] == 0.0 {
                continue;
            }
            a[j] += psi * phi[j];
            c[j] += phi[j];
            for k in j..d {
                m[(j, k)] += phi[j] * phi[k];
            }
        }
    }
    a /= n;
    c /= n;
    m /= n;
    for j in 0..d {
        c[j] -= setup.mean_basis[j];
        m[(j, j)] -= 1.0;
        for k in 0..j {
            m[(j, k)] = m[(k, j)];
        }
    }
    EmpiricalCoefficients { a, c, m }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Process {
    /// `Ê_{n,1}`: `max c'β`
    FirstOrder,
    /// `Ê_{n,ℓ}`: `max a'β`
    Linear,
    /// `Ê_{n,q}`: `max β'Mβ`
    Quadratic,
    /// `Ê_n`: `max −a'β − β'Mβ`
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupValue {
    pub value: f64,
    pub approximate: bool,
}

/// Per-dataset localized suprema with cached eigendecompositions.
#[derive(Debug, Clone)]
pub struct LocalProcess<'a> {
    setup: &'a ModelSetup,
    pub coef: EmpiricalCoefficients,
    norm_a: f64,
    norm_c: f64,
    quad: TrsSolver,
    full: TrsSolver,
    neg_a: DVector<f64>,
}

impl<'a> LocalProcess<'a> {
    pub fn new(setup: &'a ModelSetup, coef: EmpiricalCoefficients) -> Result<Self> {
        let quad = TrsSolver::new(&coef.m)?;
        let full = TrsSolver::new(&(-&coef.m))?;
        Ok(Self {
            setup,
            norm_a: coef.a.norm(),
            norm_c: coef.c.norm(),
            neg_a: -&coef.a,
            coef,
            quad,
            full,
        })
    }

    pub fn from_data(setup: &'a ModelSetup, data: &Dataset) -> Result<Self> {
        Self::new(setup, empirical_coefficients(data, setup))
    }

    pub fn norm_a(&self) -> f64 {
        self.norm_a
    }

    pub fn norm_c(&self) -> f64 {
        self.norm_c
    }

    /// `max(λ_max(M), 0)`.
    pub fn lambda_max_plus(&self) -> f64 {
        self.quad.lambda_max().max(0.0)
    }

    pub fn linear_sup(&self, s: f64) -> Result<SupValue> {
        self.sup(Process::Linear, s)
    }

    pub fn quad_sup(&self, s: f64) -> Result<SupValue> {
        self.sup(Process::Quadratic, s)
    }

    pub fn first_order_sup(&self, s: f64) -> Result<SupValue> {
        self.sup(Process::FirstOrder, s)
    }

    pub fn full_sup(&self, s: f64) -> Result<SupValue> {
        self.sup(Process::Full, s)
    }

    pub fn sup(&self, process: Process, s: f64) -> Result<SupValue> {
        let s = s.max(0.0);
        if s <= self.setup.s_box() * (1.0 + 1e-12) {
            let value = match process {
                Process::Linear => s * self.norm_a,
                Process::FirstOrder => s * self.norm_c,
                Process::Quadratic => s * s * self.lambda_max_plus(),
                Process::Full => self.full.solve(&self.neg_a, s)?.value,
            };
            return Ok(SupValue {
                value,
                approximate: false,
            });
        }
        Ok(SupValue {
            value: self.capped_ascent(process, s)?,
            approximate: true,
        })
    }

    fn form(&self, process: Process) -> (DVector<f64>, DMatrix<f64>) {
        let d = self.setup.dim();
        match process {
            Process::Linear => (self.coef.a.clone(), DMatrix::zeros(d, d)),
            Process::FirstOrder => (self.coef.c.clone(), DMatrix::zeros(d, d)),
            Process::Quadratic => (DVector::zeros(d), self.coef.m.clone()),
            Process::Full => (self.neg_a.clone(), -&self.coef.m),
        }
    }

    /// Multi-start projected gradient ascent of `b'h + h'Qh` over
    /// `{‖h‖ ≤ s} ∩ (𝒢 − g⁰)`.
    fn capped_ascent(&self, process: Process, s: f64) -> Result<f64> {
        let (b, q) = self.form(process);
        let d = b.len();
        let con = &self.setup.constraint;
        let center = con.center().clone();
        let zero = DVector::zeros(d);
        let is_box = con.kind() == crate::erm::ConstraintKind::Box;
        let project = |h: &DVector<f64>| -> DVector<f64> {
            if is_box {
                return project_box_ball(h, con.half_width(), s);
            }
            let ball = |x: &DVector<f64>| project_ball(x, &zero, s);
            let model = |x: &DVector<f64>| con.project(&(&center + x)) - &center;
            let projectors: [&dyn Fn(&DVector<f64>) -> DVector<f64>; 2] = [&ball, &model];
            dykstra(h, &projectors, 1e-14, 5_000).0
        };
        let objective = |h: &DVector<f64>| b.dot(h) + h.dot(&(&q * h));
        let curvature = q.iter().map(|v| v.abs()).sum::<f64>().max(1e-12);
        let step = 1.0 / (2.0 * curvature) + s / b.norm().max(1e-12);

        let mut starts = Vec::with_capacity(MULTI_START);
        starts.push(project(&TrsSolver::new(&q)?.solve(&b, s)?.maximizer));
        starts.push(zero.clone());
        let mut rng = sequential(derive_seed(0x5EED, process as u64, d as u64));
        while starts.len() < MULTI_START {
            let dir = DVector::from_fn(d, |_, _| crate::rng::unit_f64(rng.next_u64()) - 0.5);
            let n = dir.norm().max(1e-300);
            starts.push(project(&(dir * (s / n))));
        }
        let mut best = f64::NEG_INFINITY;
        for start in starts {
            let mut h = start;
            let mut value = objective(&h);
            for _ in 0..2_000 {
                let grad = &b + (&q * &h) * 2.0;
                let next = project(&(&h + grad * step));
                let next_value = objective(&next);
                let moved = (&next - &h).norm();
                if next_value >= value {
                    h = next;
                    value = next_value;
                }
                if moved <= 1e-13 * (1.0 + s) {
                    break;
                }
            }
            best = best.max(value);
        }
        Ok(best.max(0.0))
    }
}

/// `0` followed by `points` logarithmically spaced values from
/// `s_max·min_ratio` to `s_max`.
pub fn s_grid(s_max: f64, points: usize, min_ratio: f64) -> Vec<f64> {
    let mut g = vec![0.0];
    if points == 1 {
        g.push(s_max);
        return g;
    }
    let lo = (s_max * min_ratio).ln();
    let hi = s_max.ln();
    for i in 0..points {
        let t = i as f64 / (points - 1) as f64;
        g.push(if i + 1 == points { s_max } else { (lo + t * (hi - lo)).exp() });
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridArgmin {
    pub s: f64,
    pub index: usize,
    /// Minimizer at the right edge of the grid (constraint cap binding).
    pub at_edge: bool,
    /// Width of the widest grid interval adjacent to the minimizer.
    pub local_step: f64,
}

/// Grid argmin of `s² − values[i]` (first minimizer on ties).
pub fn grid_argmin(grid: &[f64], values: &[f64]) -> GridArgmin {
    let (index, _) = grid
        .iter()
        .zip(values)
        .map(|(s, v)| s * s - v)
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let left = if index > 0 { grid[index] - grid[index - 1] } else { 0.0 };
    let right = if index + 1 < grid.len() { grid[index + 1] - grid[index] } else { 0.0 };
    GridArgmin {
        s: grid[index],
        index,
        at_edge: index + 1 == grid.len() && grid.len() > 1,
        local_step: left.max(right),
    }
}

/// `argmin_{s ∈ grid} { s² − Ê_n(s) }`.
pub fn variational_s_hat(process: &LocalProcess<'_>, grid: &[f64]) -> Result<GridArgmin> {
    let values = grid
        .iter()
        .map(|s| process.full_sup(*s).map(|v| v.value))
        .collect::<Result<Vec<_>>>()?;
    Ok(grid_argmin(grid, &values))
}

/// Monte Carlo means (with standard errors) of the localized suprema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedCurves {
    pub grid: Vec<f64>,
    pub e1: Vec<f64>,
    pub el: Vec<f64>,
    pub eq: Vec<f64>,
    pub e: Vec<f64>,
    pub se_e1: Vec<f64>,
    pub se_el: Vec<f64>,
    pub se_eq: Vec<f64>,
    pub se_e: Vec<f64>,
    /// `m = E‖a‖₂`, the slope of `E_ℓ` on `[0, s_box]`.
    pub slope_m: f64,
    pub se_m: f64,
    /// `E max(λ_max(M), 0)`, the curvature of `E_q`.
    pub curvature_q: f64,
    pub se_q: f64,
    /// `E‖c‖₂`, the slope of `E₁`.
    pub slope_e1: f64,
    pub s_box: f64,
    pub replicates: usize,
    pub n: usize,
    /// Grid points where an approximate (capped) supremum was used.
    pub approximate_points: usize,
}

struct Replicate {
    e1: Vec<f64>,
    el: Vec<f64>,
    eq: Vec<f64>,
    e: Vec<f64>,
    norm_a: f64,
    norm_c: f64,
    lam: f64,
    approx: usize,
}

fn mean_se(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// Averages the per-dataset suprema over `replicates` independent datasets
/// drawn from the [`Stream::Curves`] stream of `seed`.
pub fn estimate_expected_curves(
    setup: &ModelSetup,
    n: usize,
    replicates: usize,
    grid: &[f64],
    seed: u64,
) -> Result<ExpectedCurves> {
    assert!(replicates >= 2, "at least two replicates are needed for standard errors");
    let reps: Vec<Replicate> = (0..replicates)
        .into_par_iter()
        .map(|r| -> Result<Replicate> {
            let data = sample(&setup.scenario, n, derive_seed(seed, Stream::Curves as u64, r as u64));
            let lp = LocalProcess::from_data(setup, &data)?;
            let mut out = Replicate {
                e1: Vec::with_capacity(grid.len()),
                el: Vec::with_capacity(grid.len()),
                eq: Vec::with_capacity(grid.len()),
                e: Vec::with_capacity(grid.len()),
                norm_a: lp.norm_a(),
                norm_c: lp.norm_c(),
                lam: lp.lambda_max_plus(),
                approx: 0,
            };
            for &s in grid {
                let v1 = lp.first_order_sup(s)?;
                let vl = lp.linear_sup(s)?;
                let vq = lp.quad_sup(s)?;
                let v = lp.full_sup(s)?;
                out.approx += usize::from(v.approximate);
                out.e1.push(v1.value);
                out.el.push(vl.value);
                out.eq.push(vq.value);
                out.e.push(v.value);
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;

    let g = grid.len();
    let column = |f: &dyn Fn(&Replicate) -> f64| mean_se(reps.iter().map(f).collect::<Vec<_>>().into_iter());
    let mut curves = ExpectedCurves {
        grid: grid.to_vec(),
        e1: vec![0.0; g],
        el: vec![0.0; g],
        eq: vec![0.0; g],
        e: vec![0.0; g],
        se_e1: vec![0.0; g],
        se_el: vec![0.0; g],
        se_eq: vec![0.0; g],
        se_e: vec![0.0; g],
        slope_m: 0.0,
        se_m: 0.0,
        curvature_q: 0.0,
        se_q: 0.0,
        slope_e1: 0.0,
        s_box: setup.s_box(),
        replicates,
        n,
        approximate_points: reps.iter().map(|r| r.approx).sum(),
    };
    for i in 0..g {
        (curves.e1[i], curves.se_e1[i]) = column(&|r| r.e1[i]);
        (curves.el[i], curves.se_el[i]) = column(&|r| r.el[i]);
        (curves.eq[i], curves.se_eq[i]) = column(&|r| r.eq[i]);
        (curves.e[i], curves.se_e[i]) = column(&|r| r.e[i]);
    }
    (curves.slope_m, curves.se_m) = column(&|r| r.norm_a);
    (curves.curvature_q, curves.se_q) = column(&|r| r.lam);
    curves.slope_e1 = column(&|r| r.norm_c).0;
    Ok(curves)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationPoint {
    /// `s̃₀ = argmin { s² − E_ℓ(s) }`.
    pub s_tilde0: f64,
    pub se_s_tilde0: f64,
    /// `s₀ = argmin { s² − E(s) }` on the grid.
    pub s0: f64,
    pub se_s0: f64,
    pub slope_m: f64,
    pub se_m: f64,
    pub replicates: usize,
    /// `s̃₀` obtained from the closed form `m/2`.
    pub closed_form: bool,
    pub s_tilde0_at_edge: bool,
    pub s0_at_edge: bool,
}

/// `s̃₀ = m/2` whenever that point lies in `[0, s_box]` (where
/// `E_ℓ(s) = m·s`), otherwise the grid argmin; `s₀` is always a grid argmin.
pub fn concentration_point(curves: &ExpectedCurves) -> ConcentrationPoint {
    let half = curves.slope_m / 2.0;
    let closed_form = half <= curves.s_box;
    let lin = grid_argmin(&curves.grid, &curves.el);
    let (s_tilde0, s_tilde0_at_edge) = if closed_form { (half, false) } else { (lin.s, lin.at_edge) };
    let full = grid_argmin(&curves.grid, &curves.e);
    ConcentrationPoint {
        s_tilde0,
        se_s_tilde0: curves.se_m / 2.0,
        s0: full.s,
        // The grid argmin moves with E(s); its sensitivity to the Monte Carlo
        // error is of the same order as that of the linear part.
        se_s0: (curves.se_m / 2.0).max(full.local_step / 2.0),
        slope_m: curves.slope_m,
        se_m: curves.se_m,
        replicates: curves.replicates,
        closed_form,
        s_tilde0_at_edge,
        s0_at_edge: full.at_edge,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionary::Dictionary;
    use crate::scenario::Scenario;

    fn setup(d: usize) -> ModelSetup {
        ModelSetup::new(Scenario::shipped_default(), Dictionary::histogram(d).unwrap(), 1.0).unwrap()
    }

    fn process_with<'a>(setup: &'a ModelSetup, a: &[f64], m: DMatrix<f64>) -> LocalProcess<'a> {
        let d = a.len();
        LocalProcess::new(
            setup,
            EmpiricalCoefficients {
                a: DVector::from_row_slice(a),
                c: DVector::zeros(d),
                m,
            },
        )
        .unwrap()
    }

    #[test]
    fn linear_sup_examples() {
        let st = setup(2);
        let lp = process_with(&st, &[0.3, 0.4], DMatrix::zeros(2, 2));
        let s = st.s_box();
        assert!((lp.linear_sup(s).unwrap().value - 0.5 * s).abs() < 1e-15);
        assert_eq!(lp.linear_sup(0.0).unwrap().value, 0.0);
        let half: f64 = lp.linear_sup(s / 2.0).unwrap().value;
        assert!((2.0 * half - lp.linear_sup(s).unwrap().value).abs() < 1e-15);
    }

    #[test]
    fn quad_sup_examples() {
        let st = setup(2);
        let m = DMatrix::from_diagonal(&DVector::from_row_slice(&[0.2, -0.5]));
        let lp = process_with(&st, &[0.0, 0.0], m);
        let s = st.s_box();
        assert!((lp.quad_sup(s).unwrap().value - 0.2 * s * s).abs() < 1e-15);
        let nsd = DMatrix::from_diagonal(&DVector::from_row_slice(&[-0.2, -0.5]));
        assert_eq!(process_with(&st, &[0.0, 0.0], nsd).quad_sup(s).unwrap().value, 0.0);
        assert_eq!(lp.quad_sup(0.0).unwrap().value, 0.0);
    }

    #[test]
    fn full_sup_reduces_to_linear_when_m_vanishes() {
        let st = setup(2);
        let lp = process_with(&st, &[0.3, -0.4], DMatrix::zeros(2, 2));
        for s in [0.0, 0.1, st.s_box()] {
            let f = lp.full_sup(s).unwrap().value;
            assert!((f - lp.linear_sup(s).unwrap().value).abs() < 1e-14);
        }
        let zero = process_with(&st, &[0.0, 0.0], DMatrix::zeros(2, 2));
        assert_eq!(zero.full_sup(0.3).unwrap().value, 0.0);
    }

    #[test]
    fn variational_argmin_linear_case() {
        let st = setup(2);
        let lp = process_with(&st, &[0.3, 0.4], DMatrix::zeros(2, 2));
        let grid = s_grid(st.s_box(), 200, 1e-4);
        let arg = variational_s_hat(&lp, &grid).unwrap();
        assert!((arg.s - 0.25).abs() <= arg.local_step);
        let zero = process_with(&st, &[0.0, 0.0], DMatrix::zeros(2, 2));
        assert_eq!(variational_s_hat(&zero, &grid).unwrap().s, 0.0);
    }

    #[test]
    fn grid_shape() {
        let g = s_grid(0.25, 200, 1e-4);
        assert_eq!(g.len(), 201);
        assert_eq!(g[0], 0.0);
        assert!((g[1] - 0.25e-4).abs() < 1e-18);
        assert_eq!(*g.last().unwrap(), 0.25);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn capped_path_is_flagged_and_bounded() {
        let st = setup(4);
        let lp = process_with(&st, &[0.3, 0.4, 0.0, 0.1], DMatrix::zeros(4, 4));
        let s = 2.0 * st.s_box();
        let v = lp.linear_sup(s).unwrap();
        assert!(v.approximate);
        // Exact value: maximize a'h over the box ∩ ball; the box (half width
        // 1/2) caps the two large coordinates before the ball binds.
        assert!(v.value <= s * 0.5 + 1e-12);
        assert!(v.value >= lp.linear_sup(st.s_box()).unwrap().value);
    }

    #[test]
    fn concentration_point_closed_form() {
        let curves = ExpectedCurves {
            grid: s_grid(0.25, 50, 1e-4),
            e1: vec![],
            el: s_grid(0.25, 50, 1e-4).iter().map(|s| 0.1 * s).collect(),
            eq: vec![],
            e: s_grid(0.25, 50, 1e-4).iter().map(|s| 0.1 * s).collect(),
            se_e1: vec![],
            se_el: vec![],
            se_eq: vec![],
            se_e: vec![],
            slope_m: 0.1,
            se_m: 0.002,
            curvature_q: 0.0,
            se_q: 0.0,
            slope_e1: 0.0,
            s_box: 0.25,
            replicates: 10,
            n: 100,
            approximate_points: 0,
        };
        let p = concentration_point(&curves);
        assert!((p.s_tilde0 - 0.05).abs() < 1e-15);
        assert!(p.closed_form);
        assert!((p.se_s_tilde0 - 0.001).abs() < 1e-15);
        let zero = ExpectedCurves {
            slope_m: 0.0,
            el: vec![0.0; 51],
            e: vec![0.0; 51],
            ..curves
        };
        let p = concentration_point(&zero);
        assert_eq!(p.s_tilde0, 0.0);
        assert_eq!(p.s0, 0.0);
    }

    #[test]
    fn noiseless_centered_coefficients_vanish() {
        let st = ModelSetup::new(Scenario::noiseless_centered(), Dictionary::histogram(4).unwrap(), 1.0).unwrap();
        let data = sample(&st.scenario, 200, 9);
        let coef = empirical_coefficients(&data, &st);
        assert!(coef.a.iter().all(|v| v.abs() < 1e-14));
        assert!(coef.m.transpose() == coef.m);
    }

    #[test]
    fn hand_computed_linear_coefficient() {
        // g⁰ ≡ 0 requires g* ≡ 0.
        let sc = Scenario {
            regression: crate::scenario::Regression::Constant { value: 0.0 },
            ..Scenario::noiseless_centered()
        };
        let st = ModelSetup::new(sc, Dictionary::histogram(2).unwrap(), 1.0).unwrap();
        let data = Dataset {
            xs: vec![0.1, 0.2, 0.6, 0.9],
            ys: vec![1.0, 0.0, 0.5, 0.5],
            seed: 0,
        };
        let coef = empirical_coefficients(&data, &st);
        // (1/4)·(−2)·(1.0 + 0.0)·√2
        assert!((coef.a[0] - (-0.5 * 2f64.sqrt())).abs() < 1e-15);
        assert!((coef.a[0] + 0.70711).abs() < 1e-5);
    }
}
