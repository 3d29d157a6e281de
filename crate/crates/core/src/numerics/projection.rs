//! Euclidean projections onto simple convex sets, and Dykstra's algorithm
//! for their intersections.

use nalgebra::DVector;

pub fn project_box(x: &DVector<f64>, lower: &DVector<f64>, upper: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(x.len(), (0..x.len()).map(|i| x[i].clamp(lower[i], upper[i])))
}

pub fn project_ball(x: &DVector<f64>, center: &DVector<f64>, radius: f64) -> DVector<f64> {
    let d = x - center;
    let n = d.norm();
    if n <= radius {
        x.clone()
    } else {
        center + d * (radius / n)
    }
}

/// Projection onto the slab `{β : |w'β − offset| ≤ half_width}`.
pub fn project_slab(x: &DVector<f64>, w: &DVector<f64>, offset: f64, half_width: f64) -> DVector<f64> {
    let ww = w.norm_squared();
    if ww == 0.0 {
        return x.clone();
    }
    let v = w.dot(x) - offset;
    if v > half_width {
        x - w * ((v - half_width) / ww)
    } else if v < -half_width {
        x - w * ((v + half_width) / ww)
    } else {
        x.clone()
    }
}

/// Exact projection onto `{|h_k| ≤ half_width} ∩ {‖h‖ ≤ radius}`.
///
/// The solution is `clip(y/(1+μ), ±half_width)` with the smallest `μ ≥ 0`
/// that makes it fit in the ball; `μ` is found by bisection on the
/// nonincreasing map `μ ↦ ‖clip(y/(1+μ))‖`.
pub fn project_box_ball(y: &DVector<f64>, half_width: f64, radius: f64) -> DVector<f64> {
    let clip = |mu: f64| y.map(|v| (v / (1.0 + mu)).clamp(-half_width, half_width));
    let p0 = clip(0.0);
    if p0.norm() <= radius {
        return p0;
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while clip(hi).norm() > radius {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if clip(mid).norm() > radius {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * (1.0 + hi) {
            break;
        }
    }
    clip(hi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DykstraOutcome {
    pub sweeps: usize,
    pub converged: bool,
}

/// Dykstra's alternating projections onto `∩ C_i`, each given by its
/// projector. Returns the projection of `x0` onto the intersection.
pub fn dykstra<P>(x0: &DVector<f64>, projectors: &[P], tol: f64, max_sweeps: usize) -> (DVector<f64>, DykstraOutcome)
where
    P: Fn(&DVector<f64>) -> DVector<f64>,
{
    let d = x0.len();
    let mut x = x0.clone();
    let mut increments = vec![DVector::<f64>::zeros(d); projectors.len()];
    for sweep in 1..=max_sweeps {
        let start = x.clone();
        let mut change = 0.0f64;
        for (proj, inc) in projectors.iter().zip(increments.iter_mut()) {
            let y = &x + &*inc;
            let p = proj(&y);
            let new_inc = &y - &p;
            change = change.max((&new_inc - &*inc).norm());
            *inc = new_inc;
            x = p;
        }
        if (&x - &start).norm() <= tol && change <= tol {
            return (
                x,
                DykstraOutcome {
                    sweeps: sweep,
                    converged: true,
                },
            );
        }
    }
    (
        x,
        DykstraOutcome {
            sweeps: max_sweeps,
            converged: false,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(x)
    }

    #[test]
    fn box_and_ball() {
        let p = project_box(&v(&[2.0, -3.0, 0.5]), &v(&[-1.0; 3]), &v(&[1.0; 3]));
        assert_eq!(p, v(&[1.0, -1.0, 0.5]));
        let p = project_ball(&v(&[3.0, 4.0]), &v(&[0.0, 0.0]), 1.0);
        assert!((p - v(&[0.6, 0.8])).norm() < 1e-15);
    }

    #[test]
    fn box_ball_projection_matches_dykstra() {
        let ball = |x: &DVector<f64>| project_ball(x, &v(&[0.0, 0.0, 0.0]), 0.7);
        let bx = |x: &DVector<f64>| project_box(x, &v(&[-0.5; 3]), &v(&[0.5; 3]));
        let projectors: Vec<Box<dyn Fn(&DVector<f64>) -> DVector<f64>>> = vec![Box::new(ball), Box::new(bx)];
        for y in [v(&[2.0, 0.3, -0.1]), v(&[1.0, 1.0, 1.0]), v(&[0.1, 0.2, 0.0]), v(&[-3.0, 0.6, 0.01])] {
            let exact = project_box_ball(&y, 0.5, 0.7);
            let (iter, _) = dykstra(&y, &projectors, 1e-15, 100_000);
            assert!((&exact - &iter).norm() < 1e-9, "{y} {exact} {iter}");
        }
    }

    #[test]
    fn slab_projection() {
        let p = project_slab(&v(&[3.0, 0.0]), &v(&[1.0, 0.0]), 0.0, 1.0);
        assert_eq!(p, v(&[1.0, 0.0]));
        let p = project_slab(&v(&[0.5, 7.0]), &v(&[1.0, 0.0]), 0.0, 1.0);
        assert_eq!(p, v(&[0.5, 7.0]));
    }

    #[test]
    fn dykstra_box_ball_intersection() {
        // Unit ball ∩ box [0.8, 2]² is empty near the axes; use box [−0.5, 0.5]² instead.
        let ball = |x: &DVector<f64>| project_ball(x, &v(&[0.0, 0.0]), 0.6);
        let bx = |x: &DVector<f64>| project_box(x, &v(&[-0.5, -0.5]), &v(&[0.5, 0.5]));
        let projectors: Vec<Box<dyn Fn(&DVector<f64>) -> DVector<f64>>> = vec![Box::new(ball), Box::new(bx)];
        let (p, out) = dykstra(&v(&[2.0, 0.1]), &projectors, 1e-13, 10_000);
        assert!(out.converged);
        // Exact answer: the box face x = 0.5 intersects the ball; the nearest
        // feasible point to (2, 0.1) is (0.5, 0.1).
        assert!((&p - v(&[0.5, 0.1])).norm() < 1e-10, "{p}");
        let (p, _) = dykstra(&v(&[2.0, 2.0]), &projectors, 1e-13, 10_000);
        let s = 0.6 / 2f64.sqrt();
        assert!((&p - v(&[s, s])).norm() < 1e-10, "{p}");
    }
}
