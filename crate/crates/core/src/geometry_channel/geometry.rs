use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::linalg::ComplexVector;

pub type Vec3 = [f64; 3];

const UNIT_TOL: f64 = 1e-12;

fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// Element positions and carrier wavelength of a planar (or linear) array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    offsets: Vec<Vec3>,
    wavelength: f64,
    shape: (usize, usize),
}

impl ArrayGeometry {
    pub fn new(offsets: Vec<Vec3>, wavelength: f64, shape: (usize, usize)) -> Result<Self> {
        ensure(shape.0 > 0 && shape.1 > 0, || {
            format!("empty array shape {shape:?}")
        })?;
        ensure(offsets.len() == shape.0 * shape.1, || {
            format!("{} offsets for shape {:?}", offsets.len(), shape)
        })?;
        ensure(wavelength > 0.0 && wavelength.is_finite(), || {
            format!("wavelength must be positive, got {wavelength}")
        })?;
        Ok(Self {
            offsets,
            wavelength,
            shape,
        })
    }

    /// Uniform linear array along the x axis, first element at the origin.
    pub fn ula(n: usize, wavelength: f64, spacing: f64) -> Result<Self> {
        Self::upa(n, 1, wavelength, spacing)
    }

    /// Uniform planar array in the xoy plane, x index running fastest.
    pub fn upa(nx: usize, ny: usize, wavelength: f64, spacing: f64) -> Result<Self> {
        ensure(spacing > 0.0, || {
            format!("spacing must be positive, got {spacing}")
        })?;
        let offsets = (0..ny)
            .flat_map(|y| (0..nx).map(move |x| [x as f64 * spacing, y as f64 * spacing, 0.0]))
            .collect();
        Self::new(offsets, wavelength, (nx, ny))
    }

    pub fn half_wavelength_ula(n: usize, wavelength: f64) -> Result<Self> {
        Self::ula(n, wavelength, wavelength / 2.0)
    }

    pub fn half_wavelength_upa(nx: usize, ny: usize, wavelength: f64) -> Result<Self> {
        Self::upa(nx, ny, wavelength, wavelength / 2.0)
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn offsets(&self) -> &[Vec3] {
        &self.offsets
    }

    pub fn steering_vector(&self, direction: &Vec3) -> Result<ComplexVector> {
        steering_vector(self, direction)
    }
}

/// Array response `exp(-j 2 pi b^T e / lambda)` for a unit direction `e`.
pub fn steering_vector(geom: &ArrayGeometry, direction: &Vec3) -> Result<ComplexVector> {
    let n = norm(direction);
    if (n - 1.0).abs() > UNIT_TOL {
        return Err(Error::InvalidInput(format!(
            "direction must be a unit vector, norm is {n}"
        )));
    }
    let k = 2.0 * std::f64::consts::PI / geom.wavelength;
    Ok(ComplexVector::from_iterator(
        geom.len(),
        geom.offsets
            .iter()
            .map(|b| Complex64::from_polar(1.0, -k * dot(b, direction))),
    ))
}

/// Unit vector from polar angle `elevation` (measured from +z) and
/// `azimuth` (measured from +x in the xoy plane).
pub fn direction_from_angles(elevation: f64, azimuth: f64) -> Vec3 {
    let (se, ce) = elevation.sin_cos();
    let (sa, ca) = azimuth.sin_cos();
    [se * ca, se * sa, ce]
}

/// Unit vector in the xoy plane at `angle` from the +x axis. For a ULA along
/// x this is the angle from the array axis; `pi/2` is broadside.
pub fn direction_in_plane(angle: f64) -> Vec3 {
    let (s, c) = angle.sin_cos();
    [c, s, 0.0]
}

/// Unit vector pointing from `from` to `to`.
pub fn unit_direction(from: &Vec3, to: &Vec3) -> Result<Vec3> {
    let d = [to[0] - from[0], to[1] - from[1], to[2] - from[2]];
    let n = norm(&d);
    ensure(n > 0.0, || {
        "coincident points have no direction".to_string()
    })?;
    Ok([d[0] / n, d[1] / n, d[2] / n])
}
