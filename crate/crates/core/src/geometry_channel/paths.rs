use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::geometry::{direction_from_angles, direction_in_plane, ArrayGeometry, Vec3};
use crate::error::{ensure, Result};
use crate::linalg::ComplexMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathKind {
    LoS,
    NLoS,
}

/// One propagation path of the BS-IRS link: departure direction at the BS,
/// arrival direction at the IRS and a complex gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSpec {
    pub departure: Vec3,
    pub arrival: Vec3,
    pub gain: Complex64,
    pub kind: PathKind,
}

impl PathSpec {
    /// Path that is seen along the same global direction by both arrays.
    pub fn along(direction: Vec3, gain: Complex64, kind: PathKind) -> Self {
        Self {
            departure: direction,
            arrival: direction,
            gain,
            kind,
        }
    }
}

/// Sparse multipath BS-IRS channel `G = sum_l nu_l a_B(e_l) a_I(e_l)^H`,
/// shaped `N_t x N`.
pub fn saleh_valenzuela(
    bs: &ArrayGeometry,
    irs: &ArrayGeometry,
    paths: &[PathSpec],
) -> Result<ComplexMatrix> {
    ensure(!paths.is_empty(), || {
        "at least one path is required".to_string()
    })?;
    let mut g = ComplexMatrix::zeros(bs.len(), irs.len());
    for p in paths {
        let a = bs.steering_vector(&p.departure)?;
        let b = irs.steering_vector(&p.arrival)?;
        g += (a * p.gain) * b.adjoint();
    }
    Ok(g)
}

/// Rank-one BS-IRS channel `sqrt(L) a(aod) b(elev, azim)^H`.
///
/// `aod` is measured from the BS array axis (x), the IRS arrival uses
/// [`direction_from_angles`].
pub fn rank_one_bs_irs(
    bs: &ArrayGeometry,
    irs: &ArrayGeometry,
    aod: f64,
    aoa_elevation: f64,
    aoa_azimuth: f64,
    l_br: f64,
) -> Result<ComplexMatrix> {
    ensure(l_br > 0.0 && l_br.is_finite(), || {
        format!("large-scale fading must be positive, got {l_br}")
    })?;
    let a = bs.steering_vector(&direction_in_plane(aod))?;
    let b = irs.steering_vector(&direction_from_angles(aoa_elevation, aoa_azimuth))?;
    Ok((a * Complex64::new(l_br.sqrt(), 0.0)) * b.adjoint())
}
