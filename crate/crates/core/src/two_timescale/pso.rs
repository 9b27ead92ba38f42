//! Particle swarm search over IRS phases with a recursively sampled
//! fitness.

use std::f64::consts::PI;

use rand::distr::Open01;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::beamforming::SlotScheme;
use super::samples::{aasr_over, generate_samples, FrameConfig, FrameSamples, SlotSample};
use crate::error::{ensure, Result};
use crate::geometry_channel::ChannelEnsemble;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsoParams {
    pub swarm: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub iterations: usize,
    /// Number of mini-batches the sample set is split into.
    pub batches: usize,
    /// Samples per mini-batch.
    pub batch_size: usize,
}

impl Default for PsoParams {
    fn default() -> Self {
        Self {
            swarm: 30,
            inertia: 0.7,
            cognitive: 1.5,
            social: 1.5,
            iterations: 50,
            batches: 50,
            batch_size: 20,
        }
    }
}

impl PsoParams {
    pub fn total_samples(&self) -> usize {
        self.batches * self.batch_size
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.swarm >= 1, || {
            "swarm must have at least one particle".into()
        })?;
        ensure(self.batches >= 1 && self.batch_size >= 1, || {
            format!("{} batches of {} samples", self.batches, self.batch_size)
        })?;
        for (name, v) in [
            ("inertia", self.inertia),
            ("cognitive", self.cognitive),
            ("social", self.social),
        ] {
            ensure(v >= 0.0 && v.is_finite(), || {
                format!("{name} must be non-negative, got {v}")
            })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    /// Phases in `(-pi, pi]`.
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
    /// Running fitness estimate of this particle.
    pub surrogate: f64,
}

impl Particle {
    /// Particle at rest at `position`, with no recorded fitness.
    pub fn at_rest(position: Vec<f64>) -> Self {
        let n = position.len();
        Self {
            best_position: position.clone(),
            position,
            velocity: vec![0.0; n],
            best_fitness: f64::NEG_INFINITY,
            surrogate: 0.0,
        }
    }
}

/// Clamps a phase to `(-pi, pi]`. The lower boundary maps to `pi`, the same
/// point on the circle.
fn clamp_phase(x: f64) -> f64 {
    if x > PI || x <= -PI {
        PI
    } else {
        x
    }
}

/// One velocity and position update. A single pair of uniform weights is
/// drawn per call.
pub fn pso_step<R: Rng + ?Sized>(
    particle: &Particle,
    global_best: &[f64],
    params: &PsoParams,
    rng: &mut R,
) -> Particle {
    let e1: f64 = rng.sample(Open01);
    let e2: f64 = rng.sample(Open01);
    let mut next = particle.clone();
    for i in 0..next.position.len() {
        let x = particle.position[i];
        let v = params.inertia * particle.velocity[i]
            + params.cognitive * e1 * (particle.best_position[i] - x)
            + params.social * e2 * (global_best[i] - x);
        next.velocity[i] = v;
        next.position[i] = clamp_phase(x + v);
    }
    next
}

/// Decay weight of the newest batch at iteration `i`: `i^-0.2`.
pub fn surrogate_weight(iteration: usize) -> f64 {
    (iteration as f64).powf(-0.2)
}

/// `(1 - mu) J_prev + mu batch_rate` with `mu = i^-0.2`.
pub fn surrogate_fitness(prev: f64, batch_rate: f64, iteration: usize) -> f64 {
    let mu = surrogate_weight(iteration.max(1));
    (1.0 - mu) * prev + mu * batch_rate
}

/// Per-evaluation cost model:
/// `4 (N_t + K) N^2 + 4 M N_t K + 4 M^2 K + 4 M^3 + M^2 + M`.
pub fn flops_f1(antennas: u64, users: u64, elements: u64, streams: u64) -> u64 {
    4 * (antennas + users) * elements * elements
        + 4 * streams * antennas * users
        + 4 * streams * streams * users
        + 4 * streams.pow(3)
        + streams * streams
        + streams
}

/// How a particle's fitness is computed each iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitnessMode {
    /// Recursive average over one mini-batch per iteration.
    RecursiveSampling,
    /// Average over all samples every iteration.
    FullBatch,
}

#[derive(Debug, Clone)]
pub struct PsoReport {
    pub best_theta: Vec<f64>,
    pub best_fitness: f64,
    /// Global best fitness after initialization and after each iteration.
    pub fitness_trace: Vec<f64>,
    /// Slot samples evaluated per iteration, summed over the swarm; entry 0
    /// is the initialization.
    pub samples_per_iteration: Vec<usize>,
    /// Streams dropped for rank deficiency over all evaluations.
    pub dropped_streams: usize,
    /// Total cost in units of [`flops_f1`].
    pub flops: u64,
    pub particles: Vec<Particle>,
}

fn argmax_first(particles: &[Particle]) -> usize {
    let mut best = 0;
    for (i, p) in particles.iter().enumerate() {
        if p.best_fitness > particles[best].best_fitness {
            best = i;
        }
    }
    best
}

fn evaluate(
    positions: &[Vec<f64>],
    frame_samples: &FrameSamples,
    batch: &[SlotSample],
    frame: &FrameConfig,
) -> Result<Vec<(f64, usize)>> {
    positions
        .par_iter()
        .map(|theta| {
            aasr_over(theta, frame_samples, batch, frame, SlotScheme::SvdZf)
                .map(|e| (e.mean, e.dropped_streams))
        })
        .collect()
}

/// Runs the swarm on pre-drawn samples.
///
/// Fitness evaluation of the particles runs on the current rayon pool;
/// best-position bookkeeping follows particle index order, so results do
/// not depend on the number of threads.
pub fn run_pso_with_samples<R: Rng + ?Sized>(
    frame: &FrameConfig,
    samples: &FrameSamples,
    params: &PsoParams,
    mode: FitnessMode,
    rng: &mut R,
) -> Result<PsoReport> {
    params.validate()?;
    frame.validate(samples.antennas(), samples.users())?;
    ensure(samples.len() == params.total_samples(), || {
        format!(
            "{} samples, expected {} batches of {}",
            samples.len(),
            params.batches,
            params.batch_size
        )
    })?;
    let n = samples.elements();
    let f1 = flops_f1(
        samples.antennas() as u64,
        samples.users() as u64,
        n as u64,
        frame.streams as u64,
    );
    let batch_for = |iteration: usize| -> Result<&[SlotSample]> {
        match mode {
            FitnessMode::FullBatch => Ok(samples.samples()),
            // Initialization and iteration 1 both use the first batch.
            FitnessMode::RecursiveSampling => {
                samples.batch(iteration.saturating_sub(1) % params.batches, params.batches)
            }
        }
    };

    let mut particles: Vec<Particle> = (0..params.swarm)
        .map(|_| {
            let pos = (0..n)
                .map(|_| clamp_phase(PI - 2.0 * PI * rng.sample::<f64, _>(Open01)))
                .collect();
            Particle::at_rest(pos)
        })
        .collect();
    let mut dropped = 0;
    let mut evaluated = 0usize;
    let mut samples_per_iteration = Vec::with_capacity(params.iterations + 1);

    let batch = batch_for(0)?;
    let positions: Vec<Vec<f64>> = particles.iter().map(|p| p.position.clone()).collect();
    for (p, (value, d)) in particles
        .iter_mut()
        .zip(evaluate(&positions, samples, batch, frame)?)
    {
        p.surrogate = value;
        p.best_fitness = value;
        dropped += d;
    }
    samples_per_iteration.push(batch.len() * params.swarm);
    evaluated += batch.len() * params.swarm;
    let mut g = argmax_first(&particles);
    let mut global = particles[g].best_position.clone();
    let mut fitness_trace = vec![particles[g].best_fitness];

    for it in 1..=params.iterations {
        for p in particles.iter_mut() {
            *p = pso_step(p, &global, params, rng);
        }
        let batch = batch_for(it)?;
        let positions: Vec<Vec<f64>> = particles.iter().map(|p| p.position.clone()).collect();
        let values = evaluate(&positions, samples, batch, frame)?;
        for (p, (value, d)) in particles.iter_mut().zip(values) {
            dropped += d;
            p.surrogate = match mode {
                FitnessMode::RecursiveSampling => surrogate_fitness(p.surrogate, value, it),
                FitnessMode::FullBatch => value,
            };
            if p.surrogate > p.best_fitness {
                p.best_fitness = p.surrogate;
                p.best_position = p.position.clone();
            }
        }
        samples_per_iteration.push(batch.len() * params.swarm);
        evaluated += batch.len() * params.swarm;
        g = argmax_first(&particles);
        global = particles[g].best_position.clone();
        fitness_trace.push(particles[g].best_fitness);
    }

    Ok(PsoReport {
        best_theta: global,
        best_fitness: particles[g].best_fitness,
        fitness_trace,
        samples_per_iteration,
        dropped_streams: dropped,
        flops: evaluated as u64 * f1,
        particles,
    })
}

/// Draws `B = batches * batch_size` samples from the statistical CSI and
/// runs the recursive-sampling swarm. `B` must be a multiple of the frame
/// length; each trajectory then covers the whole frame.
pub fn run_rspso<R: Rng + ?Sized>(
    frame: &FrameConfig,
    s_csi: &ChannelEnsemble,
    params: &PsoParams,
    rng: &mut R,
) -> Result<PsoReport> {
    params.validate()?;
    let total = params.total_samples();
    ensure(total.is_multiple_of(frame.slots), || {
        format!(
            "{total} samples do not cover whole frames of {} slots",
            frame.slots
        )
    })?;
    let samples = generate_samples(s_csi, frame, total / frame.slots, rng)?;
    run_pso_with_samples(frame, &samples, params, FitnessMode::RecursiveSampling, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::two_timescale::samples::testing::random_ensemble;

    fn frame(slots: usize, streams: usize) -> FrameConfig {
        FrameConfig {
            slots,
            delay: 1,
            streams,
            power: 4.0,
            noise: 1.0,
        }
    }

    #[test]
    fn step_examples() {
        let mut rng = stream(80, &[]);
        let p = Particle {
            position: vec![0.1, -0.2],
            velocity: vec![0.3, 0.4],
            best_position: vec![1.0, 1.0],
            best_fitness: 0.0,
            surrogate: 0.0,
        };
        let frozen = PsoParams {
            inertia: 0.0,
            cognitive: 0.0,
            social: 0.0,
            ..PsoParams::default()
        };
        let next = pso_step(&p, &[2.0, 2.0], &frozen, &mut rng);
        assert_eq!(next.velocity, vec![0.0, 0.0]);
        assert_eq!(next.position, p.position);

        let at_best = Particle {
            best_position: p.position.clone(),
            ..p.clone()
        };
        let next = pso_step(&at_best, &p.position, &PsoParams::default(), &mut rng);
        for i in 0..2 {
            assert!((next.velocity[i] - 0.7 * p.velocity[i]).abs() < 1e-15);
        }

        let edge = Particle {
            position: vec![PI - 0.5, -PI + 0.5],
            velocity: vec![1.0, -1.0],
            best_position: vec![PI - 0.5, -PI + 0.5],
            best_fitness: 0.0,
            surrogate: 0.0,
        };
        let inertial = PsoParams {
            inertia: 1.0,
            ..PsoParams::default()
        };
        let next = pso_step(&edge, &edge.position, &inertial, &mut rng);
        assert_eq!(next.position, vec![PI, PI]);
    }

    #[test]
    fn positions_stay_in_range() {
        let mut rng = stream(81, &[]);
        let mut p = Particle::at_rest(vec![0.0; 6]);
        let params = PsoParams {
            inertia: 1.2,
            ..PsoParams::default()
        };
        for i in 0..200 {
            let target: Vec<f64> = (0..6).map(|j| ((i * 7 + j) as f64).sin() * 3.0).collect();
            p.best_position = target.iter().map(|t| -t).collect();
            p = pso_step(&p, &target, &params, &mut rng);
            assert!(p.position.iter().all(|&x| x > -PI && x <= PI));
        }
    }

    #[test]
    fn surrogate_examples() {
        assert_eq!(surrogate_fitness(123.0, 4.5, 1), 4.5);
        let mut j = 2.5;
        for i in 1..100 {
            j = surrogate_fitness(j, 2.5, i);
            assert!((j - 2.5).abs() < 1e-12);
        }
        assert!((surrogate_weight(32) - 0.5).abs() < 1e-15);
        assert!((surrogate_fitness(1.0, 3.0, 32) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn flops_examples() {
        assert_eq!(flops_f1(4, 2, 8, 2), 1670);
        assert_eq!(flops_f1(1, 1, 1, 1), 22);
        let base = flops_f1(4, 2, 8, 2);
        let doubled = flops_f1(4, 2, 16, 2);
        assert_eq!(doubled - base, 3 * 4 * 6 * 64);
    }

    #[test]
    fn single_frozen_particle_returns_start() {
        let mut rng = stream(82, &[]);
        let ens = random_ensemble(&mut rng, 4, 6, 2, 0.5, 0.9);
        let params = PsoParams {
            swarm: 1,
            inertia: 0.0,
            cognitive: 0.0,
            social: 0.0,
            iterations: 5,
            batches: 5,
            batch_size: 2,
        };
        let f = frame(5, 2);
        let samples = generate_samples(&ens, &f, 2, &mut rng).unwrap();
        let mut r1 = stream(83, &[]);
        let rep = run_pso_with_samples(
            &f,
            &samples,
            &params,
            FitnessMode::RecursiveSampling,
            &mut r1,
        )
        .unwrap();
        let mut r2 = stream(83, &[]);
        let start: Vec<f64> = (0..6)
            .map(|_| clamp_phase(PI - 2.0 * PI * r2.sample::<f64, _>(Open01)))
            .collect();
        assert_eq!(rep.best_theta, start);
    }

    #[test]
    fn sample_counters_and_monotone_bests() {
        let mut rng = stream(84, &[]);
        let ens = random_ensemble(&mut rng, 4, 8, 2, 0.5, 0.8);
        let params = PsoParams {
            swarm: 6,
            iterations: 10,
            batches: 10,
            batch_size: 4,
            ..PsoParams::default()
        };
        let f = frame(10, 2);
        let samples = generate_samples(&ens, &f, 4, &mut rng).unwrap();
        let rs = run_pso_with_samples(
            &f,
            &samples,
            &params,
            FitnessMode::RecursiveSampling,
            &mut stream(85, &[]),
        )
        .unwrap();
        let full = run_pso_with_samples(
            &f,
            &samples,
            &params,
            FitnessMode::FullBatch,
            &mut stream(85, &[]),
        )
        .unwrap();
        assert!(rs.samples_per_iteration.iter().all(|&s| s == 6 * 4));
        assert!(full.samples_per_iteration.iter().all(|&s| s == 6 * 40));
        assert_eq!(full.flops, 10 * rs.flops);
        assert_eq!(rs.flops, 11 * 6 * 4 * flops_f1(4, 2, 8, 2));
        for w in rs.fitness_trace.windows(2) {
            assert!(w[1] >= w[0]);
        }
        for w in full.fitness_trace.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn rspso_rejects_partial_frames() {
        let mut rng = stream(86, &[]);
        let ens = random_ensemble(&mut rng, 4, 4, 2, 0.5, 0.8);
        let params = PsoParams {
            batches: 3,
            batch_size: 3,
            ..PsoParams::default()
        };
        assert!(run_rspso(&frame(4, 1), &ens, &params, &mut rng).is_err());
    }

    #[test]
    fn near_best_one_bit_pattern_on_deterministic_channel() {
        let mut rng = stream(87, &[]);
        for n in [4usize, 8] {
            let ens = random_ensemble(&mut rng, 4, n, 2, 1.0, 1.0);
            let f = frame(10, 1);
            assert_eq!(f.streams, 1);
            let params = PsoParams {
                swarm: 20,
                iterations: 10,
                batches: 10,
                batch_size: 1,
                ..PsoParams::default()
            };
            let rep = run_rspso(&f, &ens, &params, &mut rng).unwrap();
            let samples = generate_samples(&ens, &f, 1, &mut rng).unwrap();
            let fit = |t: &[f64]| {
                aasr_over(t, &samples, &samples.samples()[..1], &f, SlotScheme::SvdZf)
                    .unwrap()
                    .mean
            };
            let mut best = f64::NEG_INFINITY;
            for mask in 0..(1u32 << n) {
                let t: Vec<f64> = (0..n)
                    .map(|i| if mask >> i & 1 == 1 { PI } else { 0.0 })
                    .collect();
                best = best.max(fit(&t));
            }
            let got = fit(&rep.best_theta);
            assert!(got >= 0.98 * best, "N={n}: {got} vs 1-bit {best}");
        }
    }

    #[test]
    fn same_result_on_any_thread_count() {
        let mut rng = stream(88, &[]);
        let ens = random_ensemble(&mut rng, 4, 8, 2, 0.3, 0.7);
        let params = PsoParams {
            swarm: 8,
            iterations: 4,
            batches: 4,
            batch_size: 3,
            ..PsoParams::default()
        };
        let f = frame(4, 2);
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| run_rspso(&f, &ens, &params, &mut stream(89, &[])).unwrap())
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.best_theta, b.best_theta);
        assert_eq!(a.fitness_trace, b.fitness_trace);
    }
}
