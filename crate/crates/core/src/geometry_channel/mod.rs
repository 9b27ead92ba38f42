//! Array geometry, steering vectors, path loss, and channel models.
//!
//! Steering phases use `exp(-j 2 pi b^T e / lambda)` everywhere, with element
//! offsets ordered x-fastest (`(1,1), (2,1), ..., (Nx,1), (1,2), ...`).

mod bessel;
mod fading;
mod geometry;
mod pathloss;
mod paths;

pub use bessel::bessel_j0;
pub use fading::{ar_step, jakes_correlation, sample_channel, ChannelEnsemble, RicianProcess};
pub use geometry::{
    direction_from_angles, direction_in_plane, steering_vector, unit_direction, ArrayGeometry, Vec3,
};
pub use pathloss::{product_path_loss, PathLossParams};
pub use paths::{rank_one_bs_irs, saleh_valenzuela, PathKind, PathSpec};
