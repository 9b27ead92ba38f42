//! Simulation and optimization toolkit for IRS-assisted MIMO downlinks.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry_channel`]: array geometry, steering vectors, path loss and
//!   the (temporally correlated) channel models.
//! - [`reflection`]: reflection patterns, impedance mapping, array gain,
//!   quantization and effective channels.
//! - [`slot_opt`]: per-slot weighted sum-rate maximization by alternating
//!   optimization with quadratic-transform auxiliaries.
//! - [`ucmo`]: gradient ascent on the product of unit circles.
//! - [`two_timescale`]: frame-level reflection design from statistical CSI
//!   (recursive-sampling PSO) with slot-level SVD-ZF beamforming.
//! - [`harness`]: seeded experiment runners and CSV/JSON output.

pub mod error;
pub mod geometry_channel;
pub mod harness;
pub mod linalg;
pub mod reflection;
pub mod rng;
pub mod slot_opt;
pub mod two_timescale;
pub mod ucmo;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, ComplexVector};
