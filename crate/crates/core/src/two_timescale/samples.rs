//! Frame configuration, outdated/current channel samples and the AASR.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::beamforming::{frame_effective_channel, slot_rate, SlotScheme};
use crate::error::{ensure, Error, Result};
use crate::geometry_channel::{ChannelEnsemble, RicianProcess};
use crate::linalg::{cis, crandn_matrix, ComplexMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameConfig {
    /// Slots per frame.
    pub slots: usize,
    /// CSI delay in slots.
    pub delay: usize,
    pub streams: usize,
    pub power: f64,
    pub noise: f64,
}

impl FrameConfig {
    pub fn validate(&self, antennas: usize, users: usize) -> Result<()> {
        ensure(self.slots >= 1, || "a frame needs at least one slot".into())?;
        ensure(
            self.streams >= 1 && self.streams <= antennas.min(users),
            || {
                format!(
                    "{} streams with {antennas} BS antennas and {users} receive antennas",
                    self.streams
                )
            },
        )?;
        ensure(self.power > 0.0 && self.power.is_finite(), || {
            format!("power budget must be positive, got {}", self.power)
        })?;
        ensure(self.noise > 0.0 && self.noise.is_finite(), || {
            format!("noise power must be positive, got {}", self.noise)
        })
    }
}

/// Direct (`N_t x K`) and IRS-user (`N x K`) channels at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSnapshot {
    pub direct: ComplexMatrix,
    pub reflected: ComplexMatrix,
}

/// The channel known at the BS (`delay` slots old) and the channel the
/// slot is actually transmitted over.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotSample {
    pub outdated: ChannelSnapshot,
    pub current: ChannelSnapshot,
}

/// Channel samples for one frame: `trajectories` independent AR paths of
/// `slots` slots each, stored slot-major (all trajectories of slot 1 first).
#[derive(Debug, Clone)]
pub struct FrameSamples {
    g: ComplexMatrix,
    slots: usize,
    trajectories: usize,
    samples: Vec<SlotSample>,
}

impl FrameSamples {
    pub fn new(
        g: ComplexMatrix,
        slots: usize,
        trajectories: usize,
        samples: Vec<SlotSample>,
    ) -> Result<Self> {
        ensure(samples.len() == slots * trajectories, || {
            format!(
                "{} samples for {slots} slots x {trajectories} trajectories",
                samples.len()
            )
        })?;
        for s in &samples {
            for snap in [&s.outdated, &s.current] {
                if snap.direct.nrows() != g.nrows()
                    || snap.reflected.nrows() != g.ncols()
                    || snap.direct.ncols() != snap.reflected.ncols()
                {
                    return Err(Error::Dimension(format!(
                        "G {:?}, direct {:?}, reflected {:?}",
                        g.shape(),
                        snap.direct.shape(),
                        snap.reflected.shape()
                    )));
                }
            }
        }
        Ok(Self {
            g,
            slots,
            trajectories,
            samples,
        })
    }

    pub fn bs_irs(&self) -> &ComplexMatrix {
        &self.g
    }
    pub fn slots(&self) -> usize {
        self.slots
    }
    pub fn trajectories(&self) -> usize {
        self.trajectories
    }
    pub fn samples(&self) -> &[SlotSample] {
        &self.samples
    }
    pub fn len(&self) -> usize {
        self.samples.len()
    }
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
    pub fn antennas(&self) -> usize {
        self.g.nrows()
    }
    pub fn elements(&self) -> usize {
        self.g.ncols()
    }
    pub fn users(&self) -> usize {
        self.samples.first().map_or(0, |s| s.current.direct.ncols())
    }

    /// Batch `index` of `batches` equal contiguous batches.
    pub fn batch(&self, index: usize, batches: usize) -> Result<&[SlotSample]> {
        ensure(batches >= 1 && self.samples.len().is_multiple_of(batches), || {
            format!(
                "{} samples do not split into {batches} batches",
                self.samples.len()
            )
        })?;
        ensure(index < batches, || format!("batch {index} of {batches}"))?;
        let size = self.samples.len() / batches;
        Ok(&self.samples[index * size..(index + 1) * size])
    }

    /// `G diag(exp(j theta))`.
    pub fn weighted_bs_irs(&self, theta: &[f64]) -> Result<ComplexMatrix> {
        ensure(theta.len() == self.g.ncols(), || {
            format!("{} phases for {} elements", theta.len(), self.g.ncols())
        })?;
        let mut g = self.g.clone();
        for (j, t) in theta.iter().enumerate() {
            let c = cis(*t);
            for z in g.column_mut(j).iter_mut() {
                *z *= c;
            }
        }
        Ok(g)
    }
}

fn snapshot(h_d: &RicianProcess, h_r: &RicianProcess) -> ChannelSnapshot {
    ChannelSnapshot {
        direct: h_d.sample(),
        reflected: h_r.sample(),
    }
}

/// Draws `trajectories` frames from the statistical CSI in `ensemble`.
///
/// The NLoS parts follow `H[t] = rho H[t - delay] + Delta[t]` with the
/// correlation stored in each process. Every trajectory starts from a
/// stationary draw `delay` slots before the frame, so slot 1 already has a
/// valid outdated estimate. With `delay = 0` the BS knows the current
/// channel and consecutive slots are independent draws.
pub fn generate_samples<R: Rng + ?Sized>(
    ensemble: &ChannelEnsemble,
    frame: &FrameConfig,
    trajectories: usize,
    rng: &mut R,
) -> Result<FrameSamples> {
    let (nt, k) = ensemble.h_d.shape();
    frame.validate(nt, k)?;
    ensure(trajectories >= 1, || {
        "at least one trajectory is required".into()
    })?;
    let lag = frame.delay;
    let mut per_traj: Vec<Vec<SlotSample>> = Vec::with_capacity(trajectories);
    for _ in 0..trajectories {
        let mut h_d = ensemble.h_d.with_nlos(crandn_matrix(nt, k, rng))?;
        let (n, _) = ensemble.h_r.shape();
        let mut h_r = ensemble.h_r.with_nlos(crandn_matrix(n, k, rng))?;
        let mut slots = Vec::with_capacity(frame.slots);
        if lag == 0 {
            for t in 0..frame.slots {
                if t > 0 {
                    h_d = h_d.with_nlos(crandn_matrix(nt, k, rng))?;
                    h_r = h_r.with_nlos(crandn_matrix(n, k, rng))?;
                }
                let s = snapshot(&h_d, &h_r);
                slots.push(SlotSample {
                    outdated: s.clone(),
                    current: s,
                });
            }
        } else {
            // Ring buffer of the last `lag` states; entry `t % lag` holds
            // slot `t - lag` when slot `t` is produced.
            let mut ring: Vec<(RicianProcess, RicianProcess)> = Vec::with_capacity(lag);
            ring.push((h_d, h_r));
            for _ in 1..lag {
                let d = ensemble.h_d.with_nlos(crandn_matrix(nt, k, rng))?;
                let r = ensemble.h_r.with_nlos(crandn_matrix(n, k, rng))?;
                ring.push((d, r));
            }
            for t in 0..frame.slots {
                let slot = t % lag;
                let (old_d, old_r) = &ring[slot];
                let outdated = snapshot(old_d, old_r);
                let mut d = old_d.clone();
                let mut r = old_r.clone();
                d.step(rng);
                r.step(rng);
                let current = snapshot(&d, &r);
                ring[slot] = (d, r);
                slots.push(SlotSample { outdated, current });
            }
        }
        per_traj.push(slots);
    }
    let mut samples = Vec::with_capacity(trajectories * frame.slots);
    let mut iters: Vec<_> = per_traj.into_iter().map(|v| v.into_iter()).collect();
    for _ in 0..frame.slots {
        for it in iters.iter_mut() {
            samples.push(it.next().expect("every trajectory has all slots"));
        }
    }
    FrameSamples::new(ensemble.g.clone(), frame.slots, trajectories, samples)
}

/// Monte-Carlo AASR estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AasrEstimate {
    /// Mean per-slot sum-rate, bits/s/Hz.
    pub mean: f64,
    /// Standard error of the mean over samples.
    pub std_error: f64,
    pub samples: usize,
    /// Streams that could not be served, summed over samples.
    pub dropped_streams: usize,
}

/// Average rate of `scheme` over `samples` with the IRS phases `theta`.
pub fn aasr_over(
    theta: &[f64],
    g: &FrameSamples,
    samples: &[SlotSample],
    frame: &FrameConfig,
    scheme: SlotScheme,
) -> Result<AasrEstimate> {
    frame.validate(g.antennas(), g.users())?;
    let g_phi = g.weighted_bs_irs(theta)?;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut dropped = 0;
    for s in samples {
        let old = frame_effective_channel(&g_phi, &s.outdated.direct, &s.outdated.reflected);
        let cur = frame_effective_channel(&g_phi, &s.current.direct, &s.current.reflected);
        let out = slot_rate(&old, &cur, frame.streams, frame.noise, frame.power, scheme)?;
        sum += out.rate;
        sum_sq += out.rate * out.rate;
        dropped += out.dropped_streams;
    }
    let n = samples.len();
    ensure(n > 0, || "no samples".into())?;
    let mean = sum / n as f64;
    let std_error = if n > 1 {
        let var = ((sum_sq - n as f64 * mean * mean) / (n - 1) as f64).max(0.0);
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    Ok(AasrEstimate {
        mean,
        std_error,
        samples: n,
        dropped_streams: dropped,
    })
}

/// AASR of the SVD-ZF scheme over every sample of the frame.
pub fn aasr(theta: &[f64], samples: &FrameSamples, frame: &FrameConfig) -> Result<AasrEstimate> {
    aasr_over(theta, samples, samples.samples(), frame, SlotScheme::SvdZf)
}
