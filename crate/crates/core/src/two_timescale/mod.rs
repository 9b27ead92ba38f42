//! Two-timescale transmission: the IRS is configured once per frame from
//! statistical CSI, while the BS and receiver beamform every slot from
//! outdated instantaneous CSI.
//!
//! [`run_rspso`] picks the frame's phases by particle swarm search whose
//! fitness is a recursively averaged mini-batch estimate of the average
//! sum-rate. Slot-level rates come from [`slot_rate`].

mod beamforming;
mod pso;
mod samples;

pub use beamforming::{
    combined_channel, frame_effective_channel, per_slot_rate, slot_rate, stream_noise_factors,
    water_filling, zf_receiver, SlotOutcome, SlotScheme, MAX_CONDITION,
};
pub use pso::{
    flops_f1, pso_step, run_pso_with_samples, run_rspso, surrogate_fitness, surrogate_weight,
    FitnessMode, Particle, PsoParams, PsoReport,
};
pub use samples::{
    aasr, aasr_over, generate_samples, AasrEstimate, ChannelSnapshot, FrameConfig, FrameSamples,
    SlotSample,
};
