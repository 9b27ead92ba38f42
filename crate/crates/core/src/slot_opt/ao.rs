//! Alternating optimization of precoder and reflection vector.

use num_complex::Complex64;

use super::{
    assemble_reflection_quadratic, sinr, solve_reflection_dual_from, transmit_power, update_alpha,
    update_beta, update_precoder, update_rho, weighted_sum_rate, DualOptions, SlotProblem,
};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, ComplexVector, ONE};
use crate::ucmo::{run_ucmo, ManifoldPoint, UcmoConfig};

/// How the reflection block is updated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReflectionSolver {
    Dual,
    Ucmo,
    /// Keep the initial reflection vector; only the precoder is optimized.
    Fixed,
}

#[derive(Debug, Clone, Copy)]
pub struct AoOptions {
    pub solver: ReflectionSolver,
    /// Stop when the relative change of the sum-rate drops below this.
    pub tol: f64,
    pub max_iters: usize,
    pub dual: DualOptions,
    pub ucmo: UcmoConfig,
}

impl AoOptions {
    pub fn new(solver: ReflectionSolver) -> Self {
        Self {
            solver,
            tol: 1e-6,
            max_iters: 200,
            dual: DualOptions {
                restarts: 0,
                ..DualOptions::default()
            },
            ucmo: UcmoConfig {
                tol: 1e-9,
                max_iters: 2000,
                ..UcmoConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct AoState {
    pub w: ComplexMatrix,
    pub theta: ComplexVector,
    pub alpha: Vec<f64>,
    pub beta: Vec<Complex64>,
    pub rho: Vec<Complex64>,
    /// Weighted sum-rate before the first iteration and after each one.
    pub objective_trace: Vec<f64>,
}

impl AoState {
    /// Latest weighted sum-rate.
    pub fn sum_rate(&self) -> f64 {
        self.objective_trace.last().copied().unwrap_or(0.0)
    }

    pub fn iterations(&self) -> usize {
        self.objective_trace.len().saturating_sub(1)
    }
}

/// Matched-filter precoder with equal power per user, at the given
/// reflection vector (all ones when `None`).
pub fn initial_state(problem: &SlotProblem, theta: Option<ComplexVector>) -> Result<AoState> {
    let theta = theta.unwrap_or_else(|| ComplexVector::from_element(problem.elements(), ONE));
    let h = problem.effective_channel(&theta)?;
    let k = problem.users();
    let per_user = (problem.power() / k as f64).sqrt();
    let mut w = h;
    for mut col in w.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col.scale_mut(per_user / n);
        }
    }
    Ok(AoState {
        w,
        theta,
        alpha: vec![0.0; k],
        beta: vec![Complex64::new(0.0, 0.0); k],
        rho: vec![Complex64::new(0.0, 0.0); k],
        objective_trace: Vec::new(),
    })
}

fn check_feasible(problem: &SlotProblem, state: &AoState) -> Result<()> {
    let tr = transmit_power(&state.w);
    if tr > problem.power() * (1.0 + 1e-8) {
        return Err(Error::InvalidInput(format!(
            "initial precoder uses {tr} W, budget is {} W",
            problem.power()
        )));
    }
    if let Some(i) = state
        .theta
        .iter()
        .position(|z| (z.norm() - 1.0).abs() > 1e-6)
    {
        return Err(Error::InvalidInput(format!(
            "initial reflection entry {i} has modulus {}",
            state.theta[i].norm()
        )));
    }
    Ok(())
}

fn reflection_candidate(
    a: &ComplexMatrix,
    b: &ComplexVector,
    current: &ComplexVector,
    opts: &AoOptions,
) -> Result<Option<ComplexVector>> {
    if b.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        return Ok(None);
    }
    let out = match opts.solver {
        ReflectionSolver::Fixed => return Ok(None),
        ReflectionSolver::Dual => {
            solve_reflection_dual_from(a, b, Some(current), &opts.dual).map(|s| s.theta)
        }
        ReflectionSolver::Ucmo => {
            let start = ManifoldPoint::new(current.map(|z| z / z.norm()))?;
            run_ucmo(a, b, &start, &opts.ucmo).map(|r| r.point.into_inner())
        }
    };
    match out {
        Ok(t) => Ok(Some(t)),
        // A non-converged iterate is still a valid candidate; the caller
        // only accepts it if it improves the surrogate.
        Err(Error::NoConvergence { last, .. }) => Ok(Some(last)),
        Err(e) => Err(e),
    }
}

/// Runs alternating optimization from `init`.
///
/// Each iteration sets the SINR auxiliaries, updates the precoder through
/// its quadratic transform, then updates the reflection vector through
/// its own quadratic transform evaluated at the new precoder. A reflection
/// candidate is kept only if it does not lower the reflection surrogate,
/// which makes the sum-rate trace non-decreasing.
pub fn run_ao(problem: &SlotProblem, init: AoState, opts: &AoOptions) -> Result<AoState> {
    check_feasible(problem, &init)?;
    let mut state = init;
    let mut f = weighted_sum_rate(problem, &state.w, &state.theta)?;
    state.objective_trace = vec![f];
    for _ in 0..opts.max_iters {
        let alpha = update_alpha(&sinr(problem, &state.w, &state.theta)?);
        let beta = update_beta(problem, &state.w, &state.theta, &alpha)?;
        let w = update_precoder(problem, &state.theta, &alpha, &beta)?.w;
        let mut theta = state.theta.clone();
        let mut rho = state.rho.clone();
        if opts.solver != ReflectionSolver::Fixed {
            rho = update_rho(problem, &w, &theta, &alpha)?;
            let q = assemble_reflection_quadratic(problem, &w, &alpha, &rho)?;
            if let Some(cand) = reflection_candidate(&q.a, &q.b, &theta, opts)? {
                if q.objective(&cand) >= q.objective(&theta) {
                    theta = cand;
                }
            }
        }
        let next = weighted_sum_rate(problem, &w, &theta)?;
        state.w = w;
        state.theta = theta;
        state.alpha = alpha;
        state.beta = beta;
        state.rho = rho;
        state.objective_trace.push(next);
        let change = (next - f).abs();
        f = next;
        if change <= opts.tol * f.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(state)
}
