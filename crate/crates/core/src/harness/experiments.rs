//! Seeded experiment runners.
//!
//! Every trial draws from its own RNG streams keyed by `(purpose, sweep
//! point, trial)`, so trials run in parallel and results are aggregated in
//! `(point, trial)` order regardless of the thread count.

use rayon::prelude::*;

use super::config::ScenarioConfig;
use super::output::{ExperimentResult, ResultRow};
use super::scenario::{
    frame_ensemble, place_users, random_phases, slot_channels, unit_vector, BsIrsModel,
};
use crate::error::{Error, Result};
use crate::linalg::ComplexVector;
use crate::reflection::{dof_spectrum, quantize, significant_eigenvalues, ReflectionPattern};
use crate::rng::{purpose, stream};
use crate::slot_opt::{
    initial_state, run_ao, weighted_sum_rate, zf_precoder, AoOptions, ReflectionSolver, SlotProblem,
};
use crate::two_timescale::{aasr_over, generate_samples, run_rspso, SlotScheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Sumrate,
    Rank,
    Aasr,
    AoTrace,
}

impl Experiment {
    pub const ALL: [Experiment; 4] = [Self::Sumrate, Self::Rank, Self::Aasr, Self::AoTrace];

    pub fn name(self) -> &'static str {
        match self {
            Self::Sumrate => "sumrate",
            Self::Rank => "rank",
            Self::Aasr => "aasr",
            Self::AoTrace => "ao-trace",
        }
    }

    pub fn run(self, cfg: &ScenarioConfig) -> Result<ExperimentResult> {
        cfg.validate()?;
        match self {
            Self::Sumrate => run_sumrate_vs_elements(cfg),
            Self::Rank => run_rank_analysis(cfg),
            Self::Aasr => run_aasr_vs_rho(cfg),
            Self::AoTrace => run_ao_trace(cfg),
        }
    }
}

/// Sum-rate schemes in output order.
pub fn sumrate_schemes(cfg: &ScenarioConfig) -> Vec<String> {
    let mut s: Vec<String> = ["ao_dual", "ao_ucmo", "no_irs", "random_zf"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    s.extend(cfg.sumrate.bits.iter().map(|b| format!("quantized_{b}bit")));
    s
}

fn ao_options(cfg: &ScenarioConfig, solver: ReflectionSolver) -> AoOptions {
    AoOptions {
        tol: cfg.ao.tol,
        max_iters: cfg.ao.max_iters,
        ..AoOptions::new(solver)
    }
}

fn slot_problem(
    cfg: &ScenarioConfig,
    antennas: usize,
    elements: usize,
    key: &[u64],
) -> Result<SlotProblem> {
    let s = &cfg.system;
    let trial = *key.last().expect("trial index");
    let users = place_users(
        cfg,
        s.users,
        &mut stream(cfg.seed, &[purpose::PLACEMENT, trial]),
    );
    let mut path = vec![purpose::CHANNEL];
    path.extend_from_slice(key);
    let ch = slot_channels(
        cfg,
        users,
        antennas,
        s.irs_units,
        elements,
        BsIrsModel::Geometric {
            nlos_paths: cfg.channel.bs_irs_nlos_paths,
        },
        cfg.channel.direct_link,
        &mut stream(cfg.seed, &path),
    )?;
    SlotProblem::unweighted(ch.links, ch.direct, 1.0, s.power_watts())
}

/// Rates of every scheme of [`sumrate_schemes`] on one channel draw.
fn sumrate_trial(
    cfg: &ScenarioConfig,
    antennas: usize,
    elements: usize,
    key: &[u64],
) -> Result<Vec<f64>> {
    let problem = slot_problem(cfg, antennas, elements, key)?;
    let power = problem.power();
    let solve = |solver, theta: Option<ComplexVector>| -> Result<f64> {
        let init = initial_state(&problem, theta)?;
        Ok(run_ao(&problem, init, &ao_options(cfg, solver))?.sum_rate())
    };

    let dual = run_ao(
        &problem,
        initial_state(&problem, None)?,
        &ao_options(cfg, ReflectionSolver::Dual),
    )?;
    let ucmo = solve(ReflectionSolver::Ucmo, None)?;

    let no_irs = match problem.direct() {
        Some(d) => {
            let p = SlotProblem::unweighted(Vec::new(), Some(d.clone()), 1.0, power)?;
            let init = initial_state(&p, None)?;
            run_ao(&p, init, &ao_options(cfg, ReflectionSolver::Fixed))?.sum_rate()
        }
        None => 0.0,
    };

    let mut path = vec![purpose::BASELINE];
    path.extend_from_slice(key);
    let theta = unit_vector(&random_phases(
        problem.elements(),
        &mut stream(cfg.seed, &path),
    ));
    let w = zf_precoder(&problem.effective_channel(&theta)?, power)?;
    let random_zf = weighted_sum_rate(&problem, &w, &theta)?;

    let mut rates = vec![dual.sum_rate(), ucmo, no_irs, random_zf];
    let continuous = ReflectionPattern::from_unit_vector(&dual.theta);
    for &bits in &cfg.sumrate.bits {
        let q = quantize(&continuous, bits)?.unit_vector();
        rates.push(solve(ReflectionSolver::Fixed, Some(q))?);
    }
    Ok(rates)
}

/// Sum-rate against elements per unit, plus the optional antenna sweep.
///
/// Users are placed once per trial index, so every sweep point of a trial
/// serves the same user positions.
pub fn run_sumrate_vs_elements(cfg: &ScenarioConfig) -> Result<ExperimentResult> {
    let s = &cfg.system;
    let mut points: Vec<(&str, usize, usize)> = cfg
        .sumrate
        .elements
        .iter()
        .map(|&n| ("elements", s.bs_antennas, n))
        .collect();
    points.extend(
        cfg.sumrate
            .antennas
            .iter()
            .map(|&nt| ("antennas", nt, s.elements_per_unit)),
    );
    let sweep_id = |var: &str| if var == "elements" { 0 } else { 1 };

    let tasks: Vec<(usize, u64)> = (0..points.len())
        .flat_map(|p| (0..cfg.trials as u64).map(move |t| (p, t)))
        .collect();
    let outcomes: Vec<Result<Vec<f64>>> = tasks
        .par_iter()
        .map(|&(p, trial)| {
            let (var, nt, n) = points[p];
            let value = if var == "elements" { n } else { nt };
            sumrate_trial(cfg, nt, n, &[sweep_id(var), value as u64, trial])
        })
        .collect();
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let schemes = sumrate_schemes(cfg);
    let mut rows = Vec::new();
    for (p, chunk) in outcomes.chunks(cfg.trials).enumerate() {
        let (var, nt, n) = points[p];
        let value = if var == "elements" { n } else { nt };
        for (j, name) in schemes.iter().enumerate() {
            let samples: Vec<f64> = chunk.iter().map(|r| r[j]).collect();
            rows.push(ResultRow::from_samples(var, value as f64, name, &samples));
        }
    }
    Ok(ExperimentResult::new(Experiment::Sumrate.name(), cfg, rows))
}

/// Normalized eigenvalue spectrum of the effective channel for 1 to
/// `rank.max_units` IRS units with rank-one BS-IRS links, no direct link
/// and random phases. Unless `rank.independent_angles` is off, each unit's
/// link leaves the BS at a random angle inside its own sector.
///
/// Rows per unit count: `eig_j` (mean j-th normalized eigenvalue),
/// `significant` (mean count above the threshold) and `significant_min`.
pub fn run_rank_analysis(cfg: &ScenarioConfig) -> Result<ExperimentResult> {
    let s = &cfg.system;
    let max_units = cfg.rank.max_units;
    let model = if cfg.rank.independent_angles {
        BsIrsModel::RandomAngles { sectors: max_units }
    } else {
        BsIrsModel::Geometric { nlos_paths: 0 }
    };
    let tasks: Vec<(usize, u64)> = (1..=max_units)
        .flat_map(|i| (0..cfg.trials as u64).map(move |t| (i, t)))
        .collect();
    let spectra: Vec<Result<Vec<f64>>> = tasks
        .par_iter()
        .map(|&(units, trial)| {
            let users = place_users(
                cfg,
                s.users,
                &mut stream(cfg.seed, &[purpose::PLACEMENT, trial]),
            );
            let mut rng = stream(cfg.seed, &[purpose::CHANNEL, units as u64, trial]);
            let ch = slot_channels(
                cfg,
                users,
                s.bs_antennas,
                units,
                s.elements_per_unit,
                model,
                false,
                &mut rng,
            )?;
            let problem = SlotProblem::unweighted(ch.links, None, 1.0, 1.0)?;
            let theta = unit_vector(&random_phases(problem.elements(), &mut rng));
            dof_spectrum(&problem.effective_channel(&theta)?)
        })
        .collect();
    let spectra = spectra.into_iter().collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    let mut previous = 0.0;
    for (i, chunk) in spectra.chunks(cfg.trials).enumerate() {
        let units = (i + 1) as f64;
        for j in 0..s.bs_antennas {
            let samples: Vec<f64> = chunk.iter().map(|e| e[j]).collect();
            rows.push(ResultRow::from_samples(
                "irs_units",
                units,
                &format!("eig_{}", j + 1),
                &samples,
            ));
        }
        let counts: Vec<f64> = chunk
            .iter()
            .map(|e| significant_eigenvalues(e, cfg.rank.threshold) as f64)
            .collect();
        let row = ResultRow::from_samples("irs_units", units, "significant", &counts);
        if row.mean < previous {
            warnings.push(format!(
                "mean significant eigenvalues drop at {} units",
                i + 1
            ));
        }
        previous = row.mean;
        rows.push(row);
        let min = counts.iter().copied().fold(f64::INFINITY, f64::min);
        rows.push(ResultRow {
            trials: counts.len(),
            ..ResultRow::single("irs_units", units, "significant_min", min)
        });
    }
    let mut result = ExperimentResult::new(Experiment::Rank.name(), cfg, rows);
    result.warnings = warnings;
    Ok(result)
}

/// AASR against the temporal correlation of the user links.
///
/// Each trial fixes the user position, the line-of-sight components and
/// all random streams across the correlation sweep, so the points of one
/// trial differ only in the correlation. The swarm's phases are scored on
/// `aasr.evaluation_frames` fresh frames with every slot scheme.
pub fn run_aasr_vs_rho(cfg: &ScenarioConfig) -> Result<ExperimentResult> {
    let rho = cfg.aasr.rho_values()?;
    let frame = cfg.frame();
    let tasks: Vec<(usize, u64)> = (0..rho.len())
        .flat_map(|p| (0..cfg.trials as u64).map(move |t| (p, t)))
        .collect();
    let outcomes: Vec<Result<Vec<f64>>> = tasks
        .par_iter()
        .map(|&(p, trial)| {
            let user = place_users(cfg, 1, &mut stream(cfg.seed, &[purpose::PLACEMENT, trial]))[0];
            let ensemble = frame_ensemble(
                cfg,
                rho[p],
                user,
                &mut stream(cfg.seed, &[purpose::CHANNEL, trial]),
            )?;
            let report = run_rspso(
                &frame,
                &ensemble,
                &cfg.pso,
                &mut stream(cfg.seed, &[purpose::PSO, trial]),
            )?;
            let eval = generate_samples(
                &ensemble,
                &frame,
                cfg.aasr.evaluation_frames,
                &mut stream(cfg.seed, &[purpose::EVALUATION, trial]),
            )?;
            SlotScheme::ALL
                .iter()
                .map(|&scheme| {
                    Ok(aasr_over(&report.best_theta, &eval, eval.samples(), &frame, scheme)?.mean)
                })
                .collect()
        })
        .collect();
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for (p, chunk) in outcomes.chunks(cfg.trials).enumerate() {
        for (j, scheme) in SlotScheme::ALL.iter().enumerate() {
            let samples: Vec<f64> = chunk.iter().map(|r| r[j]).collect();
            rows.push(ResultRow::from_samples(
                "rho",
                rho[p],
                scheme.name(),
                &samples,
            ));
        }
    }
    Ok(ExperimentResult::new(Experiment::Aasr.name(), cfg, rows))
}

/// Allowed decrease of an AO trace step, relative to the objective.
pub const MONOTONICITY_TOL: f64 = 1e-9;
/// Allowed relative gap between the final objectives of the two solvers.
pub const CROSS_SOLVER_TOL: f64 = 0.01;

/// First step at which `trace` decreases by more than the tolerance.
pub fn first_decrease(trace: &[f64]) -> Option<usize> {
    trace
        .windows(2)
        .position(|w| w[1] < w[0] - MONOTONICITY_TOL * w[0].abs().max(1.0))
        .map(|i| i + 1)
}

/// Per-iteration AO objective of one seeded slot with both reflection
/// solvers. Decreasing traces or over-long runs are violations; a final
/// gap between the solvers above 1% is reported as a warning.
pub fn run_ao_trace(cfg: &ScenarioConfig) -> Result<ExperimentResult> {
    let s = &cfg.system;
    let problem = slot_problem(cfg, s.bs_antennas, s.elements_per_unit, &[2, 0, 0])?;
    let runs: Vec<Result<(ReflectionSolver, Vec<f64>)>> =
        [ReflectionSolver::Dual, ReflectionSolver::Ucmo]
            .par_iter()
            .map(|&solver| {
                let init = initial_state(&problem, None)?;
                Ok((
                    solver,
                    run_ao(&problem, init, &ao_options(cfg, solver))?.objective_trace,
                ))
            })
            .collect();

    let mut rows = Vec::new();
    let mut violations = Vec::new();
    let mut finals = Vec::new();
    for run in runs {
        let (solver, trace) = run?;
        let name = match solver {
            ReflectionSolver::Dual => "ao_dual",
            ReflectionSolver::Ucmo => "ao_ucmo",
            ReflectionSolver::Fixed => unreachable!("not traced"),
        };
        for (i, &v) in trace.iter().enumerate() {
            rows.push(ResultRow::single("iteration", i as f64, name, v));
        }
        if let Some(i) = first_decrease(&trace) {
            violations.push(format!(
                "{name}: objective decreased at iteration {i}: {} -> {}",
                trace[i - 1],
                trace[i]
            ));
        }
        if trace.len() > cfg.ao.max_iters + 1 {
            violations.push(format!(
                "{name}: {} iterations exceed the limit",
                trace.len() - 1
            ));
        }
        finals.push(
            *trace
                .last()
                .ok_or_else(|| Error::InvalidInput("empty trace".into()))?,
        );
    }
    let mut result = ExperimentResult::new(Experiment::AoTrace.name(), cfg, rows);
    let gap =
        (finals[0] - finals[1]).abs() / finals[0].abs().max(finals[1].abs()).max(f64::MIN_POSITIVE);
    if gap > CROSS_SOLVER_TOL {
        result.warnings.push(format!(
            "final objectives differ by {:.3}% (dual {}, ucmo {})",
            100.0 * gap,
            finals[0],
            finals[1]
        ));
    }
    result.violations = violations;
    Ok(result)
}
