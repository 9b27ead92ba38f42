//! Multiplier fixed point for the reflection subproblem.
//!
//! The Lagrangian of `max -theta^H A theta + 2 Re(theta^H b)` under
//! `|theta_n|^2 = 1` is stationary at `theta = (A + diag(zeta))^{-1} b`, and
//! the multipliers must make every entry of that vector unit-modulus. The
//! solver enforces this one coordinate at a time: with the other entries
//! fixed, `(A + diag(zeta)) theta = b` in row `n` reads
//! `(A_nn + zeta_n) theta_n = r_n` with `r_n = b_n - sum_{m != n} A_nm theta_m`,
//! so `zeta_n = |r_n| - A_nn` and `theta_n = r_n / |r_n|`. Each such step
//! maximizes the objective over `theta_n` on the unit circle, so sweeps
//! never decrease it.
//!
//! At a fixed point the dual value `b^H D b + sum(zeta)` equals the primal
//! objective. If in addition `zeta >= 0` and `A + diag(zeta)` is positive
//! semidefinite, the point solves the relaxed problem `|theta_n| <= 1` and is
//! therefore globally optimal; [`DualSolution::certified`] records this.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, ComplexVector, ONE};

#[derive(Debug, Clone, Copy)]
pub struct DualOptions {
    /// Stop when `||(A + diag(zeta)) theta - b|| <= tol * ||b||`.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Extra starting points tried while no start has produced a certified
    /// solution; the best fixed point is returned.
    pub restarts: usize,
}

impl Default for DualOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_sweeps: 500,
            restarts: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DualSolution {
    /// Unit-modulus reflection vector.
    pub theta: ComplexVector,
    pub multipliers: Vec<f64>,
    /// Dual objective `b^H (A + diag(zeta))^{-1} b + sum(zeta)`; `None` when
    /// `A + diag(zeta)` is singular or indefinite.
    pub dual_value: Option<f64>,
    /// Primal objective at `theta`.
    pub objective: f64,
    pub sweeps: usize,
    /// `||(A + diag(zeta)) theta - b|| / ||b||`.
    pub stationarity: f64,
    /// Nonnegative multipliers with `A + diag(zeta)` positive semidefinite.
    pub certified: bool,
}

fn phase_of(b: &ComplexVector) -> ComplexVector {
    b.map(|z| {
        let m = z.norm();
        if m > 0.0 {
            z / m
        } else {
            ONE
        }
    })
}

fn stationarity(a: &ComplexMatrix, b: &ComplexVector, theta: &ComplexVector, zeta: &[f64]) -> f64 {
    let mut lhs = a * theta;
    for (i, z) in zeta.iter().enumerate() {
        lhs[i] += theta[i] * *z;
    }
    (lhs - b).norm() / b.norm()
}

/// Solves the reflection subproblem from the phases of `b`.
///
/// Fails with [`Error::NoConvergence`], carrying the last (unit-modulus)
/// iterate, when the stationarity residual is above `opts.tol` after
/// `opts.max_sweeps` sweeps.
pub fn solve_reflection_dual(
    a: &ComplexMatrix,
    b: &ComplexVector,
    opts: &DualOptions,
) -> Result<DualSolution> {
    solve_reflection_dual_from(a, b, None, opts)
}

/// [`solve_reflection_dual`] started from a given unit-modulus point,
/// typically the incumbent of an outer loop.
///
/// Without a certificate the fixed point may be a local optimum. The
/// solver then retries from the random points of
/// [`crate::ucmo::start_points`], up to `opts.restarts` of them, stopping at
/// the first certified one, and returns the best. A start that runs out of
/// sweeps only wins if no start converges.
pub fn solve_reflection_dual_from(
    a: &ComplexMatrix,
    b: &ComplexVector,
    start: Option<&ComplexVector>,
    opts: &DualOptions,
) -> Result<DualSolution> {
    let n = b.len();
    if a.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "A is {:?}, b has {n} entries",
            a.shape()
        )));
    }
    if b.iter().all(|z| z.norm() == 0.0) {
        return Err(Error::InvalidInput("b must be nonzero".into()));
    }
    let theta = match start {
        Some(s) if s.len() == n => phase_of(s),
        Some(s) => {
            return Err(Error::Dimension(format!(
                "start has {} entries, expected {n}",
                s.len()
            )))
        }
        None => phase_of(b),
    };
    let mut best = sweep_from(a, b, theta, opts);
    if opts.restarts == 0 || matches!(&best, Ok(s) if s.certified) {
        return best;
    }
    for start in crate::ucmo::start_points(b, opts.restarts)
        .into_iter()
        .skip(1)
    {
        let cand = sweep_from(a, b, start.into_inner(), opts);
        let better = match (&cand, &best) {
            (Ok(c), Ok(x)) => c.objective > x.objective,
            (Ok(_), Err(_)) => true,
            (
                Err(Error::NoConvergence { last: c, .. }),
                Err(Error::NoConvergence { last: x, .. }),
            ) => crate::ucmo::objective(a, b, c) > crate::ucmo::objective(a, b, x),
            _ => false,
        };
        if better {
            best = cand;
        }
        if matches!(&best, Ok(s) if s.certified) {
            break;
        }
    }
    best
}

fn sweep_from(
    a: &ComplexMatrix,
    b: &ComplexVector,
    mut theta: ComplexVector,
    opts: &DualOptions,
) -> Result<DualSolution> {
    let n = b.len();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    let mut zeta = vec![0.0; n];
    // a_theta tracks A theta across single-entry changes.
    let mut a_theta = a * &theta;
    let mut sweeps = 0;
    loop {
        for i in 0..n {
            let r = b[i] - (a_theta[i] - a[(i, i)] * theta[i]);
            let m = r.norm();
            zeta[i] = m - diag[i];
            if m == 0.0 {
                continue;
            }
            let next = r / m;
            let delta = next - theta[i];
            if delta != Complex64::new(0.0, 0.0) {
                a_theta.axpy(delta, &a.column(i), ONE);
                theta[i] = next;
            }
        }
        sweeps += 1;
        // Refresh to keep round-off from accumulating in the running product.
        a_theta = a * &theta;
        let res = stationarity(a, b, &theta, &zeta);
        if res <= opts.tol {
            return Ok(finish(a, b, theta, zeta, sweeps, res));
        }
        if sweeps >= opts.max_sweeps {
            return Err(Error::NoConvergence {
                iterations: sweeps,
                residual: res,
                last: theta,
            });
        }
    }
}

fn finish(
    a: &ComplexMatrix,
    b: &ComplexVector,
    theta: ComplexVector,
    zeta: Vec<f64>,
    sweeps: usize,
    stationarity: f64,
) -> DualSolution {
    let mut shifted = a.clone();
    for (i, z) in zeta.iter().enumerate() {
        shifted[(i, i)] += Complex64::new(*z, 0.0);
    }
    let scale = zeta.iter().map(|z| z.abs()).fold(0.0, f64::max) + a.norm();
    let mut loaded = shifted.clone();
    for i in 0..zeta.len() {
        loaded[(i, i)] += Complex64::new(1e-9 * scale, 0.0);
    }
    let certified = zeta.iter().all(|&z| z >= -1e-9 * scale) && loaded.cholesky().is_some();
    let dual_value = shifted
        .cholesky()
        .map(|c| b.dotc(&c.solve(b)).re + zeta.iter().sum::<f64>());
    DualSolution {
        objective: crate::ucmo::objective(a, b, &theta),
        theta,
        multipliers: zeta,
        dual_value,
        sweeps,
        stationarity,
        certified,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{crandn_matrix, crandn_vector};
    use crate::rng::stream;
    use crate::slot_opt::quadratic_objective;
    use crate::slot_opt::testing::random_theta;

    #[test]
    fn zero_quadratic_aligns_phases() {
        let mut rng = stream(20, &[]);
        let b = crandn_vector(6, &mut rng);
        let a = ComplexMatrix::zeros(6, 6);
        let sol = solve_reflection_dual(&a, &b, &DualOptions::default()).unwrap();
        assert!(sol.certified);
        for i in 0..6 {
            assert!((sol.multipliers[i] - b[i].norm()).abs() < 1e-9 * b[i].norm());
            assert!((sol.theta[i] - b[i] / b[i].norm()).norm() < 1e-9);
        }
    }

    #[test]
    fn identity_quadratic() {
        let a = ComplexMatrix::identity(5, 5);
        let b = ComplexVector::from_element(5, Complex64::new(2.0, 0.0));
        let sol = solve_reflection_dual(&a, &b, &DualOptions::default()).unwrap();
        for i in 0..5 {
            assert!((sol.multipliers[i] - 1.0).abs() < 1e-9);
            assert!((sol.theta[i] - ONE).norm() < 1e-9);
        }
    }

    #[test]
    fn random_instances_satisfy_optimality_conditions() {
        let mut rng = stream(21, &[]);
        let mut certified = 0;
        for trial in 0..20 {
            let n = 4 + trial % 12;
            let x = crandn_matrix(n, n, &mut rng);
            let a = &x * x.adjoint() * Complex64::new(0.1, 0.0);
            let b = crandn_vector(n, &mut rng) * Complex64::new(3.0, 0.0);
            let sol = solve_reflection_dual(&a, &b, &DualOptions::default()).unwrap();
            assert!(sol.stationarity <= 1e-8);
            for t in sol.theta.iter() {
                assert!((t.norm() - 1.0).abs() < 1e-12);
            }
            let primal = quadratic_objective(&a, &b, &sol.theta);
            assert!((primal - sol.objective).abs() < 1e-12 * primal.abs());
            if let Some(dual) = sol.dual_value {
                assert!((primal - dual).abs() <= 1e-6 * primal.abs().max(1.0));
            }
            if sol.certified {
                certified += 1;
                for _ in 0..100 {
                    let th = random_theta(&mut rng, n);
                    assert!(quadratic_objective(&a, &b, &th) <= primal + 1e-9);
                }
            }
        }
        assert!(certified >= 5, "only {certified} certified");
    }

    #[test]
    fn sweeps_never_lower_the_objective() {
        let mut rng = stream(23, &[]);
        let x = crandn_matrix(16, 4, &mut rng);
        let a = &x * x.adjoint();
        let b = crandn_vector(16, &mut rng);
        let start = random_theta(&mut rng, 16);
        let mut prev = quadratic_objective(&a, &b, &start);
        let mut point = start;
        for _ in 0..20 {
            let opts = DualOptions {
                tol: 0.0,
                max_sweeps: 1,
                restarts: 0,
            };
            let next = match solve_reflection_dual_from(&a, &b, Some(&point), &opts) {
                Err(Error::NoConvergence { last, .. }) => last,
                Ok(s) => s.theta,
                Err(e) => panic!("{e}"),
            };
            let f = quadratic_objective(&a, &b, &next);
            assert!(f >= prev - 1e-12 * prev.abs());
            prev = f;
            point = next;
        }
    }

    #[test]
    fn restarts_never_lose_to_a_single_start() {
        let mut rng = stream(24, &[]);
        for _ in 0..20 {
            let n = 12;
            let x = crandn_matrix(n, n, &mut rng);
            let a = &x * x.adjoint() * Complex64::new(1.0 / n as f64, 0.0);
            let b = crandn_vector(n, &mut rng);
            let single = DualOptions {
                restarts: 0,
                ..DualOptions::default()
            };
            let one = solve_reflection_dual(&a, &b, &single).unwrap();
            let many = solve_reflection_dual(&a, &b, &DualOptions::default()).unwrap();
            assert!(many.objective >= one.objective);
            assert!(many.stationarity <= 1e-8);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let a = ComplexMatrix::identity(3, 3);
        assert!(
            solve_reflection_dual(&a, &ComplexVector::zeros(3), &DualOptions::default()).is_err()
        );
        assert!(solve_reflection_dual(
            &a,
            &ComplexVector::from_element(2, ONE),
            &DualOptions::default()
        )
        .is_err());
    }

    #[test]
    fn reports_non_convergence_with_last_iterate() {
        let mut rng = stream(22, &[]);
        let x = crandn_matrix(8, 8, &mut rng);
        let a = &x * x.adjoint();
        let b = crandn_vector(8, &mut rng);
        let opts = DualOptions {
            tol: 0.0,
            max_sweeps: 2,
            restarts: 0,
        };
        match solve_reflection_dual(&a, &b, &opts) {
            Err(Error::NoConvergence {
                iterations, last, ..
            }) => {
                assert_eq!(iterations, 2);
                assert_eq!(last.len(), 8);
            }
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }
}
