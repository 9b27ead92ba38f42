use num_complex::Complex64;
use rand::Rng;

use super::bessel::bessel_j0;
use crate::error::{ensure, Error, Result};
use crate::linalg::{crandn_matrix, ComplexMatrix};

/// Rician channel with an AR(1) NLoS component:
/// `H[t] = sqrt(L) (kappa H_los + sqrt(1 - kappa^2) H_nlos[t])`,
/// `H_nlos[t] = rho H_nlos[t - 1] + Delta[t]`, `Delta ~ CN(0, (1 - rho^2) I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RicianProcess {
    kappa: f64,
    large_scale: f64,
    los: ComplexMatrix,
    nlos: ComplexMatrix,
    rho: f64,
}

impl RicianProcess {
    pub fn new(
        kappa: f64,
        large_scale: f64,
        los: ComplexMatrix,
        nlos: ComplexMatrix,
        rho: f64,
    ) -> Result<Self> {
        ensure((0.0..=1.0).contains(&kappa), || {
            format!("kappa {kappa} outside [0, 1]")
        })?;
        ensure((0.0..=1.0).contains(&rho), || {
            format!("rho {rho} outside [0, 1]")
        })?;
        ensure(large_scale >= 0.0 && large_scale.is_finite(), || {
            format!("large-scale fading must be non-negative, got {large_scale}")
        })?;
        if los.shape() != nlos.shape() {
            return Err(Error::Dimension(format!(
                "LoS {:?} vs NLoS {:?}",
                los.shape(),
                nlos.shape()
            )));
        }
        Ok(Self {
            kappa,
            large_scale,
            los,
            nlos,
            rho,
        })
    }

    /// Process whose NLoS state is drawn from the stationary CN(0, I) law.
    pub fn stationary<R: Rng + ?Sized>(
        kappa: f64,
        large_scale: f64,
        los: ComplexMatrix,
        rho: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let nlos = crandn_matrix(los.nrows(), los.ncols(), rng);
        Self::new(kappa, large_scale, los, nlos, rho)
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    pub fn large_scale(&self) -> f64 {
        self.large_scale
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn los(&self) -> &ComplexMatrix {
        &self.los
    }
    pub fn nlos(&self) -> &ComplexMatrix {
        &self.nlos
    }
    pub fn shape(&self) -> (usize, usize) {
        self.los.shape()
    }

    /// Same statistics, different NLoS state.
    pub fn with_nlos(&self, nlos: ComplexMatrix) -> Result<Self> {
        Self::new(
            self.kappa,
            self.large_scale,
            self.los.clone(),
            nlos,
            self.rho,
        )
    }

    /// Advances the NLoS state by one AR(1) step in place. The innovation is
    /// always drawn, so streams stay aligned across different `rho`.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let (r, c) = self.nlos.shape();
        let delta = crandn_matrix(r, c, rng);
        let s = (1.0 - self.rho * self.rho).max(0.0).sqrt();
        self.nlos = ar_combine(&self.nlos, &delta, self.rho, s);
    }

    pub fn sample(&self) -> ComplexMatrix {
        let a = self.large_scale.sqrt();
        let b = (1.0 - self.kappa * self.kappa).max(0.0).sqrt();
        (&self.los * Complex64::new(a * self.kappa, 0.0))
            + (&self.nlos * Complex64::new(a * b, 0.0))
    }
}

/// `rho * prev + scale * innovation`.
pub(crate) fn ar_combine(
    prev: &ComplexMatrix,
    innovation: &ComplexMatrix,
    rho: f64,
    scale: f64,
) -> ComplexMatrix {
    prev * Complex64::new(rho, 0.0) + innovation * Complex64::new(scale, 0.0)
}

pub fn ar_step<R: Rng + ?Sized>(process: &RicianProcess, rng: &mut R) -> RicianProcess {
    let mut next = process.clone();
    next.step(rng);
    next
}

pub fn sample_channel(process: &RicianProcess) -> ComplexMatrix {
    process.sample()
}

/// Jakes temporal correlation `J0(2 pi f_d tau)`.
pub fn jakes_correlation(doppler_hz: f64, delay_s: f64) -> Result<f64> {
    ensure(doppler_hz >= 0.0 && delay_s >= 0.0, || {
        format!("Doppler {doppler_hz} and delay {delay_s} must be non-negative")
    })?;
    Ok(bessel_j0(2.0 * std::f64::consts::PI * doppler_hz * delay_s))
}

/// The channel triple `{G, H_d, H_r}`: a static BS-IRS link and Rician
/// direct and reflected user links.
#[derive(Debug, Clone)]
pub struct ChannelEnsemble {
    pub g: ComplexMatrix,
    pub h_d: RicianProcess,
    pub h_r: RicianProcess,
}

impl ChannelEnsemble {
    pub fn new(g: ComplexMatrix, h_d: RicianProcess, h_r: RicianProcess) -> Result<Self> {
        let (nt, n) = g.shape();
        let (dr, dc) = h_d.shape();
        let (rr, rc) = h_r.shape();
        if n != rr || nt != dr || dc != rc {
            return Err(Error::Dimension(format!(
                "G {nt}x{n}, H_d {dr}x{dc}, H_r {rr}x{rc}"
            )));
        }
        Ok(Self { g, h_d, h_r })
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.h_d.step(rng);
        self.h_r.step(rng);
    }
}
