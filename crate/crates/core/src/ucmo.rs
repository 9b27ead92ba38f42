//! Riemannian gradient ascent on the product of unit circles.
//!
//! Maximizes `f(theta) = -theta^H A theta + 2 Re(theta^H b)` subject to
//! `|theta_n| = 1`. Minimizing `theta^H A theta - 2 Re(theta^H b)` is the
//! same problem with the sign flipped; everything here is stated as a
//! maximization.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{cis, lambda_max_power, ComplexMatrix, ComplexVector};

/// Tolerance on `|theta_n| = 1` for membership.
pub const MODULUS_TOL: f64 = 1e-10;

/// A point with unit-modulus entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldPoint(ComplexVector);

impl ManifoldPoint {
    pub fn new(value: ComplexVector) -> Result<Self> {
        if let Some(i) = value
            .iter()
            .position(|z| (z.norm() - 1.0).abs() > MODULUS_TOL)
        {
            return Err(Error::InvalidInput(format!(
                "entry {i} has modulus {}",
                value[i].norm()
            )));
        }
        Ok(Self(value))
    }

    pub fn from_phases(phases: &[f64]) -> Self {
        Self(ComplexVector::from_iterator(
            phases.len(),
            phases.iter().map(|&p| cis(p)),
        ))
    }

    pub fn ones(n: usize) -> Self {
        Self(ComplexVector::from_element(n, Complex64::new(1.0, 0.0)))
    }

    pub fn value(&self) -> &ComplexVector {
        &self.0
    }

    pub fn into_inner(self) -> ComplexVector {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct UcmoConfig {
    /// Fixed step; `None` selects [`auto_step_size`].
    pub step_size: Option<f64>,
    /// Stop when `|f_t - f_{t-1}| <= tol * max(1, |f_t|)`.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for UcmoConfig {
    fn default() -> Self {
        Self {
            step_size: None,
            tol: 1e-10,
            max_iters: 20_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct UcmoReport {
    pub point: ManifoldPoint,
    pub objective: f64,
    pub iterations: usize,
    /// Objective after every accepted iteration, starting with the initial point.
    pub trace: Vec<f64>,
    pub step_size: f64,
    /// Trial steps that failed to ascend and were halved.
    pub rejected_steps: usize,
    /// Complex multiply-adds spent in products with `A`.
    pub matvec_ops: u64,
}

/// `-theta^H A theta + 2 Re(theta^H b)`.
pub fn objective(a: &ComplexMatrix, b: &ComplexVector, theta: &ComplexVector) -> f64 {
    objective_with(&(a * theta), b, theta)
}

fn objective_with(a_theta: &ComplexVector, b: &ComplexVector, theta: &ComplexVector) -> f64 {
    -theta.dotc(a_theta).re + 2.0 * theta.dotc(b).re
}

/// `-2 A theta + 2 b`. The directional derivative of [`objective`] along
/// `d` is `Re(grad^H d)`.
pub fn euclidean_gradient(
    a: &ComplexMatrix,
    b: &ComplexVector,
    theta: &ComplexVector,
) -> ComplexVector {
    gradient_with(&(a * theta), b)
}

fn gradient_with(a_theta: &ComplexVector, b: &ComplexVector) -> ComplexVector {
    (b - a_theta) * Complex64::new(2.0, 0.0)
}

/// Removes the radial part of `v` at each entry: `v - Re(conj(v) theta) theta`.
pub fn project_to_tangent(point: &ManifoldPoint, v: &ComplexVector) -> ComplexVector {
    v.zip_map(&point.0, |vi, ti| vi - ti * (vi.conj() * ti).re)
}

/// Entrywise normalization of `theta + step`.
pub fn retract(point: &ManifoldPoint, step: &ComplexVector) -> Result<ManifoldPoint> {
    let moved = &point.0 + step;
    for (i, z) in moved.iter().enumerate() {
        if z.norm() < 1e-14 {
            return Err(Error::DegenerateStep { index: i });
        }
    }
    Ok(ManifoldPoint(moved.map(|z| z / z.norm())))
}

/// `0.9 / max(lambda_max(A), max_n |b_n|)`; the second term keeps the step
/// bounded when `A` is (nearly) zero.
pub fn auto_step_size(a: &ComplexMatrix, b: &ComplexVector) -> f64 {
    let lambda = lambda_max_power(a, 50, 1e-8);
    let b_inf = b.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let scale = lambda.max(b_inf);
    if scale > 0.0 {
        0.9 / scale
    } else {
        1.0
    }
}

/// Runs projected-gradient ascent with retraction from `init`.
///
/// A step that would lower the objective is retried at half the size, so
/// the trace never decreases.
pub fn run_ucmo(
    a: &ComplexMatrix,
    b: &ComplexVector,
    init: &ManifoldPoint,
    cfg: &UcmoConfig,
) -> Result<UcmoReport> {
    let n = b.len();
    if a.shape() != (n, n) || init.len() != n {
        return Err(Error::Dimension(format!(
            "A is {:?}, b has {n} entries, init has {}",
            a.shape(),
            init.len()
        )));
    }
    let base_step = match cfg.step_size {
        Some(s) if s > 0.0 => s,
        Some(s) => {
            return Err(Error::InvalidInput(format!(
                "step size {s} must be positive"
            )))
        }
        None => auto_step_size(a, b),
    };
    let per_matvec = (n * n) as u64;
    let mut ops = per_matvec;
    let mut point = init.clone();
    let mut a_theta = a * &point.0;
    let mut f = objective_with(&a_theta, b, &point.0);
    let mut trace = vec![f];
    let mut rejected = 0;

    for it in 1..=cfg.max_iters {
        let grad = project_to_tangent(&point, &gradient_with(&a_theta, b));
        let mut step = base_step;
        let mut accepted = None;
        while step >= base_step * 1e-12 {
            let cand = retract(&point, &(&grad * Complex64::new(step, 0.0)))?;
            let a_cand = a * &cand.0;
            ops += per_matvec;
            let fc = objective_with(&a_cand, b, &cand.0);
            if fc >= f {
                accepted = Some((cand, a_cand, fc));
                break;
            }
            step *= 0.5;
            rejected += 1;
        }
        let Some((cand, a_cand, fc)) = accepted else {
            // No ascent direction left at machine precision.
            return Ok(report(point, f, it - 1, trace, base_step, rejected, ops));
        };
        let delta = fc - f;
        point = cand;
        a_theta = a_cand;
        f = fc;
        trace.push(f);
        if delta.abs() <= cfg.tol * f.abs().max(1.0) {
            return Ok(report(point, f, it, trace, base_step, rejected, ops));
        }
    }
    Err(Error::NoConvergence {
        iterations: cfg.max_iters,
        residual: trace
            .len()
            .checked_sub(2)
            .map_or(f64::INFINITY, |i| (trace[i + 1] - trace[i]).abs()),
        last: point.0,
    })
}

/// Phases of `b` (zero entries map to 1) followed by `restarts` random
/// points from a fixed seed, so repeated calls see the same starts.
pub fn start_points(b: &ComplexVector, restarts: usize) -> Vec<ManifoldPoint> {
    let n = b.len();
    let first = b.map(|z| {
        if z.norm() > 0.0 {
            z / z.norm()
        } else {
            Complex64::new(1.0, 0.0)
        }
    });
    let mut points = vec![ManifoldPoint(first)];
    let mut rng = crate::rng::stream(0, &[n as u64]);
    for _ in 0..restarts {
        let phases: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..TAU)).collect();
        points.push(ManifoldPoint::from_phases(&phases));
    }
    points
}

/// Best [`run_ucmo`] outcome over [`start_points`]. Starts that run out of
/// iterations are skipped unless none converges.
pub fn run_ucmo_multistart(
    a: &ComplexMatrix,
    b: &ComplexVector,
    restarts: usize,
    cfg: &UcmoConfig,
) -> Result<UcmoReport> {
    let mut best: Option<UcmoReport> = None;
    let mut last_err = None;
    for start in start_points(b, restarts) {
        match run_ucmo(a, b, &start, cfg) {
            Ok(r) => {
                if best.as_ref().is_none_or(|x| r.objective > x.objective) {
                    best = Some(r);
                }
            }
            Err(e @ Error::NoConvergence { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    best.ok_or_else(|| last_err.expect("at least one start"))
}

fn report(
    point: ManifoldPoint,
    objective: f64,
    iterations: usize,
    trace: Vec<f64>,
    step_size: f64,
    rejected_steps: usize,
    matvec_ops: u64,
) -> UcmoReport {
    UcmoReport {
        point,
        objective,
        iterations,
        trace,
        step_size,
        rejected_steps,
        matvec_ops,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{crandn_matrix, crandn_vector};
    use crate::rng::stream;
    use crate::slot_opt::{solve_reflection_dual, DualOptions};
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_point<R: Rng>(rng: &mut R, n: usize) -> ManifoldPoint {
        let phases: Vec<f64> = (0..n)
            .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
            .collect();
        ManifoldPoint::from_phases(&phases)
    }

    fn random_psd<R: Rng>(rng: &mut R, n: usize) -> ComplexMatrix {
        let x = crandn_matrix(n, n, rng);
        &x * x.adjoint() * c(1.0 / n as f64, 0.0)
    }

    #[test]
    fn gradient_examples() {
        let mut rng = stream(30, &[]);
        let b = crandn_vector(4, &mut rng);
        let th = random_point(&mut rng, 4);
        let g = euclidean_gradient(&ComplexMatrix::zeros(4, 4), &b, th.value());
        assert!((g - &b * c(2.0, 0.0)).norm() < 1e-15);

        let a = ComplexMatrix::identity(3, 3) * c(2.0, 0.0);
        let th = ManifoldPoint::from_phases(&[0.3, 1.0, -2.0]);
        let b = &a * th.value();
        assert!(euclidean_gradient(&a, &b, th.value()).norm() < 1e-14);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = stream(31, &[]);
        for _ in 0..20 {
            let n = rng.random_range(2..16);
            let a = random_psd(&mut rng, n);
            let b = crandn_vector(n, &mut rng);
            let th = crandn_vector(n, &mut rng);
            let d = crandn_vector(n, &mut rng);
            let h = 1e-6;
            let up = objective(&a, &b, &(&th + &d * c(h, 0.0)));
            let down = objective(&a, &b, &(&th - &d * c(h, 0.0)));
            let numeric = (up - down) / (2.0 * h);
            let analytic = euclidean_gradient(&a, &b, &th).dotc(&d).re;
            assert!((numeric - analytic).abs() <= 1e-5 * analytic.abs().max(1e-3));
        }
    }

    #[test]
    fn projection_examples() {
        let mut rng = stream(32, &[]);
        let th = random_point(&mut rng, 5);
        assert!(project_to_tangent(&th, th.value()).norm() < 1e-15);
        let jt = th.value() * c(0.0, 1.0);
        assert!((project_to_tangent(&th, &jt) - &jt).norm() < 1e-15);
        for _ in 0..20 {
            let v = crandn_vector(5, &mut rng);
            let once = project_to_tangent(&th, &v);
            let twice = project_to_tangent(&th, &once);
            assert!((&once - twice).norm() < 1e-12);
            for (e, t) in once.iter().zip(th.value().iter()) {
                assert!((e.conj() * t).re.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn retraction_examples() {
        let mut rng = stream(33, &[]);
        let th = random_point(&mut rng, 4);
        assert_eq!(retract(&th, &ComplexVector::zeros(4)).unwrap(), th);
        let r = retract(&th, &crandn_vector(4, &mut rng)).unwrap();
        assert!(r.value().iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));

        let one = ManifoldPoint::ones(1);
        let r = retract(&one, &ComplexVector::from_element(1, c(-1.0, 1.0))).unwrap();
        assert!((r.value()[0] - c(0.0, 1.0)).norm() < 1e-15);

        let e = retract(&one, &ComplexVector::from_element(1, c(-1.0, 0.0)));
        assert!(matches!(e, Err(Error::DegenerateStep { index: 0 })));
    }

    #[test]
    fn membership_is_checked() {
        assert!(ManifoldPoint::new(ComplexVector::from_element(2, c(1.0, 1.0))).is_err());
        assert!(ManifoldPoint::new(ComplexVector::from_element(2, c(0.0, 1.0))).is_ok());
    }

    #[test]
    fn identity_instance_reaches_all_ones() {
        let mut rng = stream(34, &[]);
        let n = 8;
        let a = ComplexMatrix::identity(n, n);
        let b = ComplexVector::from_element(n, c(1.0, 0.0));
        let init = random_point(&mut rng, n);
        let r = run_ucmo(&a, &b, &init, &UcmoConfig::default()).unwrap();
        assert!((r.objective - n as f64).abs() < 1e-6);
        for z in r.point.value().iter() {
            assert!((z - c(1.0, 0.0)).norm() < 1e-3);
        }
    }

    #[test]
    fn zero_quadratic_aligns_phases() {
        let mut rng = stream(35, &[]);
        let b = crandn_vector(6, &mut rng);
        let r = run_ucmo(
            &ComplexMatrix::zeros(6, 6),
            &b,
            &random_point(&mut rng, 6),
            &UcmoConfig::default(),
        )
        .unwrap();
        let want: f64 = 2.0 * b.iter().map(|z| z.norm()).sum::<f64>();
        assert!((r.objective - want).abs() < 1e-6 * want);
    }

    #[test]
    fn trace_is_monotone_and_on_manifold() {
        let mut rng = stream(36, &[]);
        for _ in 0..10 {
            let n = 12;
            let a = random_psd(&mut rng, n);
            let b = crandn_vector(n, &mut rng);
            let r = run_ucmo(&a, &b, &random_point(&mut rng, n), &UcmoConfig::default()).unwrap();
            for w in r.trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-9);
            }
            assert!(r
                .point
                .value()
                .iter()
                .all(|z| (z.norm() - 1.0).abs() < MODULUS_TOL));
            assert!(r.step_size <= 1.0 / lambda_max_power(&a, 200, 1e-12));
        }
    }

    #[test]
    fn cost_per_iteration_is_quadratic() {
        let mut rng = stream(37, &[]);
        for n in [8usize, 16, 32, 64] {
            let a = random_psd(&mut rng, n);
            let b = crandn_vector(n, &mut rng);
            let r = run_ucmo(&a, &b, &random_point(&mut rng, n), &UcmoConfig::default()).unwrap();
            let products = 1 + r.iterations + r.rejected_steps;
            assert_eq!(r.matvec_ops, (products * n * n) as u64);
        }
    }

    #[test]
    fn agrees_with_dual_solver() {
        let mut rng = stream(38, &[]);
        let n = 8;
        let a = random_psd(&mut rng, n);
        let b = crandn_vector(n, &mut rng) * c(2.0, 0.0);
        let dual = solve_reflection_dual(&a, &b, &DualOptions::default()).unwrap();
        let fd = objective(&a, &b, &dual.theta);
        let r = run_ucmo(&a, &b, &ManifoldPoint::ones(n), &UcmoConfig::default()).unwrap();
        assert!((r.objective - fd).abs() <= 0.01 * fd.abs());
    }

    #[test]
    fn start_points_are_fixed() {
        let mut rng = stream(39, &[]);
        let b = crandn_vector(5, &mut rng);
        let p = start_points(&b, 3);
        assert_eq!(p.len(), 4);
        assert!((p[0].value() - b.map(|z| z / z.norm())).norm() < 1e-15);
        let q = start_points(&b, 3);
        for (x, y) in p.iter().zip(&q) {
            assert_eq!(x.value(), y.value());
        }
        let z = start_points(&ComplexVector::zeros(2), 0);
        assert!(z[0].value().iter().all(|v| *v == c(1.0, 0.0)));
    }

    #[test]
    fn multistart_never_loses_to_first_start() {
        let mut rng = stream(40, &[]);
        for _ in 0..10 {
            let n = rng.random_range(4..20);
            let a = random_psd(&mut rng, n) * c(4.0, 0.0);
            let b = crandn_vector(n, &mut rng);
            let single = run_ucmo(&a, &b, &start_points(&b, 0)[0], &UcmoConfig::default()).unwrap();
            let multi = run_ucmo_multistart(&a, &b, 5, &UcmoConfig::default()).unwrap();
            assert!(multi.objective >= single.objective);
        }
    }
}
