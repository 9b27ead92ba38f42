//! Deployment geometry and channel draws for the experiments.
//!
//! The BS sits at the origin with a half-wavelength ULA along y, so its
//! broadside faces the user hotspot. IRS units are UPAs in the y-z plane.
//! All channels are scaled by `1/sigma`, so every experiment runs at unit
//! noise power.

use std::f64::consts::{PI, TAU};

use rand::Rng;

use super::config::ScenarioConfig;
use crate::error::Result;
use crate::geometry_channel::{
    direction_from_angles, saleh_valenzuela, unit_direction, ArrayGeometry, ChannelEnsemble,
    PathKind, PathSpec, RicianProcess, Vec3,
};
use crate::linalg::{cis, crandn, crandn_matrix, ComplexMatrix};
use crate::reflection::IrsLink;

/// `(rows, columns)` of an `n`-element IRS: the most nearly square
/// factorization with at least as many columns as rows.
pub fn irs_shape(n: usize) -> (usize, usize) {
    let mut rows = (n as f64).sqrt().floor() as usize;
    while rows > 1 && !n.is_multiple_of(rows) {
        rows -= 1;
    }
    let rows = rows.max(1);
    (rows, n / rows)
}

fn ula_along_y(n: usize, wavelength: f64) -> Result<ArrayGeometry> {
    let d = wavelength / 2.0;
    ArrayGeometry::new(
        (0..n).map(|i| [0.0, i as f64 * d, 0.0]).collect(),
        wavelength,
        (n, 1),
    )
}

pub fn bs_array(cfg: &ScenarioConfig, antennas: usize) -> Result<ArrayGeometry> {
    ula_along_y(antennas, cfg.geometry.wavelength_m)
}

/// IRS UPA in the y-z plane, y index running fastest.
pub fn irs_array(cfg: &ScenarioConfig, elements: usize) -> Result<ArrayGeometry> {
    let (rows, cols) = irs_shape(elements);
    let d = cfg.geometry.wavelength_m / 2.0;
    let offsets = (0..rows)
        .flat_map(|z| (0..cols).map(move |y| [0.0, y as f64 * d, z as f64 * d]))
        .collect();
    ArrayGeometry::new(offsets, cfg.geometry.wavelength_m, (cols, rows))
}

pub fn bs_position(cfg: &ScenarioConfig) -> Vec3 {
    [0.0, 0.0, cfg.geometry.bs_height_m]
}

pub fn irs_position(cfg: &ScenarioConfig, unit: usize) -> Vec3 {
    let [x, y] = cfg.geometry.irs_position(unit);
    [x, y, cfg.geometry.irs_height_m]
}

/// Points uniform in the user disk.
pub fn place_users<R: Rng + ?Sized>(cfg: &ScenarioConfig, count: usize, rng: &mut R) -> Vec<Vec3> {
    let g = &cfg.geometry;
    (0..count)
        .map(|_| {
            let r = g.user_radius_m * rng.random::<f64>().sqrt();
            let phi = rng.random_range(0.0..TAU);
            [
                g.user_center_m[0] + r * phi.cos(),
                g.user_center_m[1] + r * phi.sin(),
                g.user_height_m,
            ]
        })
        .collect()
}

fn distance(a: &Vec3, b: &Vec3) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Amplitude `sqrt(c (d/d0)^-alpha)`, with `d` floored at `d0`.
fn hop_amplitude(cfg: &ScenarioConfig, gain: f64, exponent: f64, d: f64) -> f64 {
    let d0 = cfg.channel.reference_distance_m;
    (gain * (d.max(d0) / d0).powf(-exponent)).sqrt()
}

fn noise_scale(cfg: &ScenarioConfig) -> f64 {
    1.0 / cfg.system.noise_watts().sqrt()
}

fn random_direction<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    direction_from_angles(rng.random_range(0.0..PI), rng.random_range(0.0..TAU))
}

/// Sparse BS-IRS channel of one unit: a geometric LoS path and
/// `nlos_paths` scattered paths with random directions.
pub fn bs_irs_channel<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    bs: &ArrayGeometry,
    irs: &ArrayGeometry,
    unit: usize,
    nlos_paths: usize,
    rng: &mut R,
) -> Result<ComplexMatrix> {
    let from = bs_position(cfg);
    let to = irs_position(cfg, unit);
    let c = &cfg.channel;
    let amp = hop_amplitude(cfg, c.bs_irs_gain, c.bs_irs_exponent, distance(&from, &to));
    let mut paths = vec![PathSpec::along(
        unit_direction(&from, &to)?,
        cis(rng.random_range(0.0..TAU)) * amp,
        PathKind::LoS,
    )];
    push_scattered_paths(cfg, &mut paths, amp, nlos_paths, rng);
    saleh_valenzuela(bs, irs, &paths)
}

/// Rank-one BS-IRS channel with a random departure direction inside the
/// unit's own sector and a random arrival direction; the gain follows the
/// unit's distance from the BS.
///
/// The BS array axis is y, so only the y component `u` of the departure
/// direction matters. `u` is uniform on the middle half of the unit's
/// sector, the sectors splitting `[-1, 1)` evenly; this keeps neighbouring
/// units apart even across the `u = -1 ~ 1` wrap of a half-wavelength ULA.
pub fn random_angle_bs_irs_channel<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    bs: &ArrayGeometry,
    irs: &ArrayGeometry,
    unit: usize,
    sectors: usize,
    rng: &mut R,
) -> Result<ComplexMatrix> {
    let c = &cfg.channel;
    let d = distance(&bs_position(cfg), &irs_position(cfg, unit));
    let amp = hop_amplitude(cfg, c.bs_irs_gain, c.bs_irs_exponent, d);
    let width = 2.0 / sectors.max(unit + 1) as f64;
    let u: f64 = -1.0 + width * (unit as f64 + 0.25 + 0.5 * rng.random::<f64>());
    let path = PathSpec {
        departure: [(1.0 - u * u).max(0.0).sqrt(), u, 0.0],
        arrival: random_direction(rng),
        gain: cis(rng.random_range(0.0..TAU)) * amp,
        kind: PathKind::LoS,
    };
    saleh_valenzuela(bs, irs, &[path])
}

fn push_scattered_paths<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    paths: &mut Vec<PathSpec>,
    amp: f64,
    nlos_paths: usize,
    rng: &mut R,
) {
    let c = &cfg.channel;
    let nlos_amp = amp * 10f64.powf(c.nlos_relative_db / 20.0) / (nlos_paths.max(1) as f64).sqrt();
    for _ in 0..nlos_paths {
        paths.push(PathSpec {
            departure: random_direction(rng),
            arrival: random_direction(rng),
            gain: crandn(rng) * nlos_amp,
            kind: PathKind::NLoS,
        });
    }
}

/// IRS-user channel (`N x K`): a LoS steering column per user.
pub fn irs_user_channel<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    irs: &ArrayGeometry,
    unit: usize,
    users: &[Vec3],
    rng: &mut R,
) -> Result<ComplexMatrix> {
    let at = irs_position(cfg, unit);
    let c = &cfg.channel;
    let mut h = ComplexMatrix::zeros(irs.len(), users.len());
    for (k, u) in users.iter().enumerate() {
        let amp = hop_amplitude(cfg, c.irs_user_gain, c.irs_user_exponent, distance(&at, u))
            * noise_scale(cfg);
        let col = irs.steering_vector(&unit_direction(&at, u)?)?
            * (cis(rng.random_range(0.0..TAU)) * amp);
        h.set_column(k, &col);
    }
    Ok(h)
}

/// IRS-user channel whose per-user directions are drawn at random; every
/// user gets the path loss of the user disk center.
pub fn random_angle_irs_user_channel<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    irs: &ArrayGeometry,
    unit: usize,
    users: usize,
    rng: &mut R,
) -> Result<ComplexMatrix> {
    let g = &cfg.geometry;
    let c = &cfg.channel;
    let center = [g.user_center_m[0], g.user_center_m[1], g.user_height_m];
    let d = distance(&irs_position(cfg, unit), &center);
    let amp = hop_amplitude(cfg, c.irs_user_gain, c.irs_user_exponent, d) * noise_scale(cfg);
    let mut h = ComplexMatrix::zeros(irs.len(), users);
    for k in 0..users {
        let col =
            irs.steering_vector(&random_direction(rng))? * (cis(rng.random_range(0.0..TAU)) * amp);
        h.set_column(k, &col);
    }
    Ok(h)
}

/// Rayleigh BS-user channel (`N_t x K`) with distance-based path loss.
pub fn direct_channel<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    antennas: usize,
    users: &[Vec3],
    rng: &mut R,
) -> ComplexMatrix {
    let bs = bs_position(cfg);
    let c = &cfg.channel;
    let mut h = crandn_matrix(antennas, users.len(), rng);
    for (k, u) in users.iter().enumerate() {
        let amp = hop_amplitude(cfg, c.direct_gain, c.direct_exponent, distance(&bs, u))
            * noise_scale(cfg);
        h.column_mut(k).scale_mut(amp);
    }
    h
}

/// Channels of a multi-user slot.
#[derive(Debug, Clone)]
pub struct SlotChannels {
    pub users: Vec<Vec3>,
    pub links: Vec<IrsLink>,
    pub direct: Option<ComplexMatrix>,
}

/// How the reflected channels of a slot are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsIrsModel {
    /// Geometric LoS path plus this many scattered paths.
    Geometric { nlos_paths: usize },
    /// Single BS-IRS path at random directions, one departure sector per
    /// unit out of this many, and IRS-user paths at random directions with
    /// a common path loss. Only the unit distances come from the geometry.
    RandomAngles { sectors: usize },
}

/// Draws every unit's BS-IRS and IRS-user channels and, if enabled, the
/// direct link, for users already placed.
pub fn slot_channels<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    users: Vec<Vec3>,
    antennas: usize,
    units: usize,
    elements: usize,
    model: BsIrsModel,
    with_direct: bool,
    rng: &mut R,
) -> Result<SlotChannels> {
    let bs = bs_array(cfg, antennas)?;
    let irs = irs_array(cfg, elements)?;
    let mut links = Vec::with_capacity(units);
    for unit in 0..units {
        let g = match model {
            BsIrsModel::Geometric { nlos_paths } => {
                bs_irs_channel(cfg, &bs, &irs, unit, nlos_paths, rng)?
            }
            BsIrsModel::RandomAngles { sectors } => {
                random_angle_bs_irs_channel(cfg, &bs, &irs, unit, sectors, rng)?
            }
        };
        let h = match model {
            BsIrsModel::Geometric { .. } => irs_user_channel(cfg, &irs, unit, &users, rng)?,
            BsIrsModel::RandomAngles { .. } => {
                random_angle_irs_user_channel(cfg, &irs, unit, users.len(), rng)?
            }
        };
        links.push(IrsLink::new(g, h)?);
    }
    let direct = with_direct.then(|| direct_channel(cfg, antennas, &users, rng));
    Ok(SlotChannels {
        users,
        links,
        direct,
    })
}

/// Statistical CSI of the single-user two-timescale link: a static LoS
/// BS-IRS channel (first IRS unit) and Rician direct and IRS-user links
/// towards a `K`-antenna receiver, normalized to unit noise.
pub fn frame_ensemble<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    rho: f64,
    user: Vec3,
    rng: &mut R,
) -> Result<ChannelEnsemble> {
    let s = &cfg.system;
    let c = &cfg.channel;
    let bs = bs_array(cfg, s.bs_antennas)?;
    let irs = irs_array(cfg, s.elements_per_unit)?;
    let mu = ula_along_y(s.users, cfg.geometry.wavelength_m)?;
    let g = bs_irs_channel(cfg, &bs, &irs, 0, 0, rng)?;

    let at_irs = irs_position(cfg, 0);
    let e = unit_direction(&at_irs, &user)?;
    let h_r_los = irs.steering_vector(&e)?
        * mu.steering_vector(&e)?.adjoint()
        * cis(rng.random_range(0.0..TAU));
    let l_ur = hop_amplitude(
        cfg,
        c.irs_user_gain,
        c.irs_user_exponent,
        distance(&at_irs, &user),
    )
    .powi(2)
        / s.noise_watts();

    let at_bs = bs_position(cfg);
    let e = unit_direction(&at_bs, &user)?;
    let h_d_los = bs.steering_vector(&e)?
        * mu.steering_vector(&e)?.adjoint()
        * cis(rng.random_range(0.0..TAU));
    let l_bu = if c.direct_link {
        hop_amplitude(
            cfg,
            c.direct_gain,
            c.direct_exponent,
            distance(&at_bs, &user),
        )
        .powi(2)
            / s.noise_watts()
    } else {
        0.0
    };

    let kappa = cfg.aasr.kappa;
    let zeros_d = ComplexMatrix::zeros(h_d_los.nrows(), h_d_los.ncols());
    let zeros_r = ComplexMatrix::zeros(h_r_los.nrows(), h_r_los.ncols());
    ChannelEnsemble::new(
        g,
        RicianProcess::new(kappa, l_bu, h_d_los, zeros_d, rho)?,
        RicianProcess::new(kappa, l_ur, h_r_los, zeros_r, rho)?,
    )
}

/// Uniform random phases for `n` elements.
pub fn random_phases<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.0..TAU)).collect()
}

pub(crate) fn unit_vector(phases: &[f64]) -> crate::linalg::ComplexVector {
    crate::linalg::ComplexVector::from_iterator(phases.len(), phases.iter().map(|&t| cis(t)))
}
