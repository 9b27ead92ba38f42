//! Slot-level beamforming from outdated CSI: hybrid SVD-ZF, plain outdated
//! SVD and the perfect-CSI SVD benchmark, each with water-filling.

use num_complex::Complex64;

use crate::error::{ensure, Error, Result};
use crate::linalg::{hermitian_eigenvalues_desc, sorted_svd, ComplexMatrix, RANK_RTOL};

/// Largest condition number of `Ȟ Ȟ^H` accepted by the ZF receiver.
pub const MAX_CONDITION: f64 = 1e12;

/// `V^H H̃`: the `M x K` channel the receiver sees behind the precoder `V`
/// (`N_t x M`). `effective` is the transmit-side `N_t x K` channel.
pub fn combined_channel(
    effective: &ComplexMatrix,
    precoder: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    if effective.nrows() != precoder.nrows() {
        return Err(Error::Dimension(format!(
            "channel {:?} vs precoder {:?}",
            effective.shape(),
            precoder.shape()
        )));
    }
    Ok(precoder.adjoint() * effective)
}

fn gram_inverse(combined: &ComplexMatrix) -> Result<ComplexMatrix> {
    let r = combined * combined.adjoint();
    let ev = hermitian_eigenvalues_desc(&r);
    let (max, min) = match (ev.first(), ev.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(Error::RankDeficient("no streams".into())),
    };
    if !(min > 0.0) || max / min >= MAX_CONDITION {
        return Err(Error::RankDeficient(format!(
            "combined channel Gram matrix has eigenvalues {max:.3e} .. {min:.3e}"
        )));
    }
    r.cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::RankDeficient("Cholesky factorization failed".into()))
}

/// ZF combiner `(Ȟ Ȟ^H)^{-1} Ȟ` (`M x K`). Applied to the received vector it
/// returns the transmitted streams plus filtered noise: `W Ȟ^H = I`.
pub fn zf_receiver(combined: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(gram_inverse(combined)? * combined)
}

/// Diagonal of `(Ȟ Ȟ^H)^{-1}`: the noise enhancement of each ZF stream.
pub fn stream_noise_factors(combined: &ComplexMatrix) -> Result<Vec<f64>> {
    let inv = gram_inverse(combined)?;
    Ok((0..inv.nrows()).map(|m| inv[(m, m)].re).collect())
}

/// Optimal powers for parallel channels with noise levels `noise * f_m`
/// under `sum p = power`.
///
/// The active set is found exactly: levels are sorted ascending and the
/// largest prefix whose common water level exceeds its last entry is kept.
pub fn water_filling(f: &[f64], noise: f64, power: f64) -> Result<Vec<f64>> {
    ensure(!f.is_empty(), || "no streams".into())?;
    ensure(f.iter().all(|&x| x > 0.0 && x.is_finite()), || {
        format!("noise factors must be positive and finite: {f:?}")
    })?;
    ensure(noise > 0.0 && power >= 0.0, || {
        format!("noise {noise} must be positive and power {power} non-negative")
    })?;
    let levels: Vec<f64> = f.iter().map(|x| noise * x).collect();
    let mut order: Vec<usize> = (0..f.len()).collect();
    order.sort_by(|&a, &b| levels[a].total_cmp(&levels[b]));
    let mut prefix = 0.0;
    let mut water = 0.0;
    for (k, &idx) in order.iter().enumerate() {
        let candidate = (power + prefix + levels[idx]) / (k + 1) as f64;
        if k > 0 && candidate <= levels[idx] {
            break;
        }
        prefix += levels[idx];
        water = candidate;
    }
    Ok(levels.iter().map(|&l| (water - l).max(0.0)).collect())
}

/// `sum_m log2(1 + p_m / (noise f_m))`.
pub fn per_slot_rate(f: &[f64], p: &[f64], noise: f64) -> f64 {
    f.iter()
        .zip(p)
        .map(|(&fm, &pm)| (pm / (noise * fm)).ln_1p())
        .sum::<f64>()
        / std::f64::consts::LN_2
}

/// Small-timescale transmission scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SlotScheme {
    /// SVD precoder from outdated CSI, ZF receiver from the current
    /// combined channel, water-filling on the ZF noise factors.
    SvdZf,
    /// SVD precoder and combiner both from outdated CSI; residual
    /// inter-stream interference is treated as noise.
    OutdatedSvd,
    /// SVD precoder and combiner from the current channel.
    UpperBound,
}

impl SlotScheme {
    pub const ALL: [SlotScheme; 3] = [
        SlotScheme::SvdZf,
        SlotScheme::OutdatedSvd,
        SlotScheme::UpperBound,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SlotScheme::SvdZf => "svd_zf",
            SlotScheme::OutdatedSvd => "outdated_svd",
            SlotScheme::UpperBound => "upper_bound",
        }
    }
}

/// Rate of one slot and the number of requested streams that could not be
/// served.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotOutcome {
    pub rate: f64,
    pub dropped_streams: usize,
}

/// Singular values above the rank threshold, capped at `streams`.
fn usable_streams(s: &[f64], streams: usize) -> usize {
    let top = s.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return 0;
    }
    s.iter()
        .take(streams)
        .filter(|&&x| x > RANK_RTOL * top)
        .count()
}

fn svd_water_filling(
    s: &[f64],
    used: usize,
    noise: f64,
    power: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let f: Vec<f64> = s[..used].iter().map(|x| 1.0 / (x * x)).collect();
    let p = water_filling(&f, noise, power)?;
    Ok((f, p))
}

/// Rate of one slot given the outdated and current effective channels
/// (`N_t x K` each).
pub fn slot_rate(
    outdated: &ComplexMatrix,
    current: &ComplexMatrix,
    streams: usize,
    noise: f64,
    power: f64,
    scheme: SlotScheme,
) -> Result<SlotOutcome> {
    if outdated.shape() != current.shape() {
        return Err(Error::Dimension(format!(
            "outdated {:?} vs current {:?}",
            outdated.shape(),
            current.shape()
        )));
    }
    let (nt, k) = current.shape();
    ensure(streams >= 1 && streams <= nt.min(k), || {
        format!("{streams} streams on a {nt}x{k} channel")
    })?;
    let basis = if scheme == SlotScheme::UpperBound {
        current
    } else {
        outdated
    };
    let svd = sorted_svd(basis);
    let used = usable_streams(&svd.singular_values, streams);
    if used == 0 {
        return Ok(SlotOutcome {
            rate: 0.0,
            dropped_streams: streams,
        });
    }
    match scheme {
        SlotScheme::UpperBound => {
            let (f, p) = svd_water_filling(&svd.singular_values, used, noise, power)?;
            Ok(SlotOutcome {
                rate: per_slot_rate(&f, &p, noise),
                dropped_streams: streams - used,
            })
        }
        SlotScheme::OutdatedSvd => {
            let (_, p) = svd_water_filling(&svd.singular_values, used, noise, power)?;
            let tx = svd.u.columns(0, used);
            let rx = svd.v.columns(0, used);
            // Stream-to-stream gains after the outdated combiner.
            let e = rx.adjoint() * current.adjoint() * tx;
            let mut rate = 0.0;
            for m in 0..used {
                let mut interference = noise;
                for j in (0..used).filter(|&j| j != m) {
                    interference += p[j] * e[(m, j)].norm_sqr();
                }
                rate += (p[m] * e[(m, m)].norm_sqr() / interference).ln_1p();
            }
            Ok(SlotOutcome {
                rate: rate / std::f64::consts::LN_2,
                dropped_streams: streams - used,
            })
        }
        SlotScheme::SvdZf => {
            let precoder = svd.u.columns(0, used).into_owned();
            let combined = combined_channel(current, &precoder)?;
            // Drop the weakest precoder directions until ZF is well posed.
            for m in (1..=used).rev() {
                let rows = combined.rows(0, m).into_owned();
                match stream_noise_factors(&rows) {
                    Ok(f) => {
                        let p = water_filling(&f, noise, power)?;
                        return Ok(SlotOutcome {
                            rate: per_slot_rate(&f, &p, noise),
                            dropped_streams: streams - m,
                        });
                    }
                    Err(Error::RankDeficient(_)) => continue,
                    Err(e) => return Err(e),
                }
            }
            Ok(SlotOutcome {
                rate: 0.0,
                dropped_streams: streams,
            })
        }
    }
}

/// `H_d + G diag(phi) H_r` with `phi = exp(j theta)`.
pub fn frame_effective_channel(
    g_phi: &ComplexMatrix,
    direct: &ComplexMatrix,
    reflected: &ComplexMatrix,
) -> ComplexMatrix {
    let mut h = direct.clone();
    h.gemm(
        Complex64::new(1.0, 0.0),
        g_phi,
        reflected,
        Complex64::new(1.0, 0.0),
    );
    h
}
