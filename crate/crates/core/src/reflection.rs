//! Reflection patterns and the channels they shape.
//!
//! Phases are stored in radians, normalized to `[0, 2pi)`. Effective
//! channels use the transmit-side orientation `H_d + sum_i G_i Phi_i H_i`
//! (`N_t x K`); the receive-side form is its conjugate transpose.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::geometry_channel::ArrayGeometry;
use crate::linalg::{cis, hermitian_eigenvalues_desc, ComplexMatrix, ComplexVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Resolution {
    Continuous,
    Bits(u32),
}

/// Per-element phase shifts of one IRS unit.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionPattern {
    phases: Vec<f64>,
    resolution: Resolution,
}

pub fn wrap_phase(x: f64) -> f64 {
    let w = x.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

impl ReflectionPattern {
    pub fn new(phases: impl IntoIterator<Item = f64>) -> Self {
        Self {
            phases: phases.into_iter().map(wrap_phase).collect(),
            resolution: Resolution::Continuous,
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(std::iter::repeat_n(0.0, n))
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self::new((0..n).map(|_| rng.random_range(0.0..TAU)))
    }

    /// Pattern whose reflection coefficients are the phases of `v`.
    pub fn from_unit_vector(v: &ComplexVector) -> Self {
        Self::new(v.iter().map(|z| z.arg()))
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn resolution(&self) -> Resolution {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    /// `exp(j theta)`.
    pub fn unit_vector(&self) -> ComplexVector {
        ComplexVector::from_iterator(self.len(), self.phases.iter().map(|&t| cis(t)))
    }

    /// `Phi = diag(exp(j theta))`.
    pub fn matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_diagonal(&self.unit_vector())
    }
}

/// Passive reactive load on one port of a single-connected impedance network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReactanceElement {
    pub reactance: f64,
    pub reference_impedance: f64,
}

/// `(jX - Z0) / (jX + Z0)`, unit modulus for any finite reactance.
pub fn scattering_coefficient(elem: &ReactanceElement) -> Result<Complex64> {
    let z0 = elem.reference_impedance;
    ensure(z0 > 0.0 && z0.is_finite(), || {
        format!("reference impedance must be positive, got {z0}")
    })?;
    let jx = Complex64::new(0.0, elem.reactance);
    Ok((jx - z0) / (jx + z0))
}

fn check_lengths(a: usize, b: usize, c: usize) -> Result<()> {
    if a == b && b == c {
        Ok(())
    } else {
        Err(Error::Dimension(format!("lengths {a}, {b}, {c} differ")))
    }
}

/// `|sum_n exp(j (phi_i + theta - phi_d))|^2`.
pub fn array_gain(
    pattern: &ReflectionPattern,
    incident_phases: &[f64],
    departure_phases: &[f64],
) -> Result<f64> {
    check_lengths(pattern.len(), incident_phases.len(), departure_phases.len())?;
    let s: Complex64 = pattern
        .phases
        .iter()
        .zip(incident_phases)
        .zip(departure_phases)
        .map(|((t, pi), pd)| cis(pi + t - pd))
        .sum();
    Ok(s.norm_sqr())
}

/// Co-phasing pattern `theta_n = phi_d - phi_i`, which reaches gain `N^2`.
pub fn optimal_pattern(
    incident_phases: &[f64],
    departure_phases: &[f64],
) -> Result<ReflectionPattern> {
    if incident_phases.len() != departure_phases.len() {
        return Err(Error::Dimension(format!(
            "{} incident vs {} departure phases",
            incident_phases.len(),
            departure_phases.len()
        )));
    }
    Ok(ReflectionPattern::new(
        incident_phases
            .iter()
            .zip(departure_phases)
            .map(|(i, d)| d - i),
    ))
}

/// Snaps each phase to the nearest point of `{2 pi i / 2^B}`; exact ties go to
/// the smaller index.
pub fn quantize(pattern: &ReflectionPattern, bits: u32) -> Result<ReflectionPattern> {
    ensure((1..=30).contains(&bits), || {
        format!("bits must be in 1..=30, got {bits}")
    })?;
    let levels = 1u64 << bits;
    let step = TAU / levels as f64;
    let phases = pattern
        .phases
        .iter()
        .map(|&t| {
            let q = t / step;
            let lo = q.floor();
            let idx = if q - lo > 0.5 { lo + 1.0 } else { lo } as u64 % levels;
            idx as f64 * step
        })
        .collect();
    Ok(ReflectionPattern {
        phases,
        resolution: Resolution::Bits(bits),
    })
}

/// Channels of one IRS unit: `g` is BS-IRS (`N_t x N`), `h` is IRS-users (`N x K`).
#[derive(Debug, Clone)]
pub struct IrsLink {
    pub g: ComplexMatrix,
    pub h: ComplexMatrix,
}

impl IrsLink {
    pub fn new(g: ComplexMatrix, h: ComplexMatrix) -> Result<Self> {
        if g.ncols() != h.nrows() {
            return Err(Error::Dimension(format!(
                "G is {}x{}, H is {}x{}",
                g.nrows(),
                g.ncols(),
                h.nrows(),
                h.ncols()
            )));
        }
        Ok(Self { g, h })
    }

    pub fn elements(&self) -> usize {
        self.g.ncols()
    }

    /// `G diag(phi) H`.
    pub fn cascaded(&self, phi: &ComplexVector) -> ComplexMatrix {
        let mut scaled = self.h.clone();
        for (r, mut row) in scaled.row_iter_mut().enumerate() {
            row *= phi[r];
        }
        &self.g * scaled
    }
}

/// A set of IRS units managed by one controller.
#[derive(Debug, Clone)]
pub struct DistributedIrs {
    units: Vec<(ArrayGeometry, ReflectionPattern)>,
}

impl DistributedIrs {
    pub fn new(units: Vec<(ArrayGeometry, ReflectionPattern)>) -> Result<Self> {
        if let Some((g0, _)) = units.first() {
            let n = g0.len();
            for (g, p) in &units {
                if g.len() != n || p.len() != n {
                    return Err(Error::Dimension(format!(
                        "all units must have {n} elements (got geometry {}, pattern {})",
                        g.len(),
                        p.len()
                    )));
                }
            }
        }
        Ok(Self { units })
    }

    pub fn units(&self) -> &[(ArrayGeometry, ReflectionPattern)] {
        &self.units
    }

    pub fn patterns(&self) -> Vec<ReflectionPattern> {
        self.units.iter().map(|(_, p)| p.clone()).collect()
    }

    pub fn effective_channel(
        &self,
        links: &[IrsLink],
        direct: Option<&ComplexMatrix>,
    ) -> Result<ComplexMatrix> {
        effective_channel(links, &self.patterns(), direct)
    }
}

/// `H_d + sum_i G_i Phi_i H_i`, shaped `N_t x K`.
pub fn effective_channel(
    links: &[IrsLink],
    patterns: &[ReflectionPattern],
    direct: Option<&ComplexMatrix>,
) -> Result<ComplexMatrix> {
    if links.len() != patterns.len() {
        return Err(Error::Dimension(format!(
            "{} links but {} patterns",
            links.len(),
            patterns.len()
        )));
    }
    let shape = match (direct, links.first()) {
        (Some(d), _) => d.shape(),
        (None, Some(l)) => (l.g.nrows(), l.h.ncols()),
        (None, None) => {
            return Err(Error::InvalidInput(
                "no IRS units and no direct link".to_string(),
            ))
        }
    };
    let mut acc = direct
        .cloned()
        .unwrap_or_else(|| ComplexMatrix::zeros(shape.0, shape.1));
    for (link, pattern) in links.iter().zip(patterns) {
        if pattern.len() != link.elements() || (link.g.nrows(), link.h.ncols()) != shape {
            return Err(Error::Dimension(format!(
                "unit with G {:?}, H {:?}, pattern {} does not fit {:?}",
                link.g.shape(),
                link.h.shape(),
                pattern.len(),
                shape
            )));
        }
        acc += link.cascaded(&pattern.unit_vector());
    }
    Ok(acc)
}

/// Normalized eigenvalues of `H H^H`, descending, first entry 1.
pub fn dof_spectrum(effective: &ComplexMatrix) -> Result<Vec<f64>> {
    let gram = effective * effective.adjoint();
    let ev = hermitian_eigenvalues_desc(&gram);
    let top = ev.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return Err(Error::InvalidInput(
            "zero channel has no spectrum".to_string(),
        ));
    }
    Ok(ev.into_iter().map(|e| (e / top).max(0.0)).collect())
}

/// Entries of a normalized spectrum above `threshold`.
pub fn significant_eigenvalues(spectrum: &[f64], threshold: f64) -> usize {
    spectrum.iter().filter(|&&e| e > threshold).count()
}

/// Phase of the incident/departure steering entries as used by
/// [`array_gain`]: `2 pi b^T e / lambda`.
pub fn geometric_phases(geom: &ArrayGeometry, direction: &[f64; 3]) -> Result<Vec<f64>> {
    let a = geom.steering_vector(direction)?;
    Ok(a.iter().map(|z| -z.arg()).collect())
}
