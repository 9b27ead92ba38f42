//! Per-slot weighted sum-rate maximization.
//!
//! The sum-rate is lifted with one SINR auxiliary per user, after which the
//! precoder and the reflection vector are each updated through a quadratic
//! transform. [`run_ao`] cycles the blocks until the objective settles.
//!
//! Reflection coefficients of all units are stacked into one vector
//! `theta` (unit 0 first). With `G_i` of shape `N_t x N_i` and `H_i` of
//! shape `N_i x K`, user `k` sees `h_k^H w_j = c_kj + theta^H v_kj` where
//! `c_kj` is the direct-link term and `v_kj[n] = conj(H_i[n, k]) (G_i^H w_j)[n]`.

mod ao;
mod dual;

pub use ao::{initial_state, run_ao, AoOptions, AoState, ReflectionSolver};
pub use dual::{solve_reflection_dual, solve_reflection_dual_from, DualOptions, DualSolution};

use num_complex::Complex64;

use crate::error::{ensure, Error, Result};
use crate::linalg::{hermitian_part, ComplexMatrix, ComplexVector, ZERO};
use crate::reflection::{IrsLink, ReflectionPattern};

pub use crate::ucmo::objective as quadratic_objective;

/// Channels, user weights, noise power and power budget of one slot.
#[derive(Debug, Clone)]
pub struct SlotProblem {
    links: Vec<IrsLink>,
    direct: Option<ComplexMatrix>,
    weights: Vec<f64>,
    noise: f64,
    power: f64,
    antennas: usize,
    users: usize,
}

impl SlotProblem {
    pub fn new(
        links: Vec<IrsLink>,
        direct: Option<ComplexMatrix>,
        weights: Vec<f64>,
        noise: f64,
        power: f64,
    ) -> Result<Self> {
        let (antennas, users) = match (&direct, links.first()) {
            (Some(d), _) => d.shape(),
            (None, Some(l)) => (l.g.nrows(), l.h.ncols()),
            (None, None) => {
                return Err(Error::InvalidInput(
                    "a slot needs at least one IRS unit or a direct link".into(),
                ))
            }
        };
        for (i, l) in links.iter().enumerate() {
            if (l.g.nrows(), l.h.ncols()) != (antennas, users) {
                return Err(Error::Dimension(format!(
                    "unit {i}: G {:?}, H {:?} do not match {antennas} antennas, {users} users",
                    l.g.shape(),
                    l.h.shape()
                )));
            }
        }
        ensure(weights.len() == users, || {
            format!("{} weights for {users} users", weights.len())
        })?;
        ensure(weights.iter().all(|&w| w > 0.0 && w.is_finite()), || {
            "weights must be positive".into()
        })?;
        ensure(noise > 0.0 && noise.is_finite(), || {
            format!("noise power must be positive, got {noise}")
        })?;
        ensure(power > 0.0 && power.is_finite(), || {
            format!("power budget must be positive, got {power}")
        })?;
        Ok(Self {
            links,
            direct,
            weights,
            noise,
            power,
            antennas,
            users,
        })
    }

    /// Same problem with equal unit weights.
    pub fn unweighted(
        links: Vec<IrsLink>,
        direct: Option<ComplexMatrix>,
        noise: f64,
        power: f64,
    ) -> Result<Self> {
        let users = match (&direct, links.first()) {
            (Some(d), _) => d.ncols(),
            (None, Some(l)) => l.h.ncols(),
            (None, None) => 0,
        };
        Self::new(links, direct, vec![1.0; users], noise, power)
    }

    pub fn links(&self) -> &[IrsLink] {
        &self.links
    }

    pub fn direct(&self) -> Option<&ComplexMatrix> {
        self.direct.as_ref()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn users(&self) -> usize {
        self.users
    }

    /// Total number of reflecting elements over all units.
    pub fn elements(&self) -> usize {
        self.links.iter().map(IrsLink::elements).sum()
    }

    fn check_theta(&self, theta: &ComplexVector) -> Result<()> {
        if theta.len() != self.elements() {
            return Err(Error::Dimension(format!(
                "reflection vector has {} entries, expected {}",
                theta.len(),
                self.elements()
            )));
        }
        Ok(())
    }

    fn check_precoder(&self, w: &ComplexMatrix) -> Result<()> {
        if w.shape() != (self.antennas, self.users) {
            return Err(Error::Dimension(format!(
                "precoder is {:?}, expected {:?}",
                w.shape(),
                (self.antennas, self.users)
            )));
        }
        Ok(())
    }

    /// Effective channel `H_d + sum_i G_i diag(theta_i) H_i`, `N_t x K`.
    pub fn effective_channel(&self, theta: &ComplexVector) -> Result<ComplexMatrix> {
        self.check_theta(theta)?;
        let mut acc = self
            .direct
            .clone()
            .unwrap_or_else(|| ComplexMatrix::zeros(self.antennas, self.users));
        let mut offset = 0;
        for link in &self.links {
            let n = link.elements();
            let phi = theta.rows(offset, n).into_owned();
            acc += link.cascaded(&phi);
            offset += n;
        }
        Ok(acc)
    }

    /// Splits a stacked reflection vector into one pattern per unit.
    pub fn split_theta(&self, theta: &ComplexVector) -> Result<Vec<ReflectionPattern>> {
        self.check_theta(theta)?;
        let mut offset = 0;
        Ok(self
            .links
            .iter()
            .map(|l| {
                let n = l.elements();
                let p = ReflectionPattern::from_unit_vector(&theta.rows(offset, n).into_owned());
                offset += n;
                p
            })
            .collect())
    }

    pub fn stack_patterns(&self, patterns: &[ReflectionPattern]) -> Result<ComplexVector> {
        if patterns.len() != self.links.len()
            || patterns
                .iter()
                .zip(&self.links)
                .any(|(p, l)| p.len() != l.elements())
        {
            return Err(Error::Dimension(
                "patterns do not match the IRS units".into(),
            ));
        }
        let entries: Vec<Complex64> = patterns
            .iter()
            .flat_map(|p| p.unit_vector().iter().copied().collect::<Vec<_>>())
            .collect();
        Ok(ComplexVector::from_vec(entries))
    }

    /// `gains[(k, j)] = h_k^H w_j`.
    pub fn gains(&self, w: &ComplexMatrix, theta: &ComplexVector) -> Result<ComplexMatrix> {
        self.check_precoder(w)?;
        Ok(self.effective_channel(theta)?.adjoint() * w)
    }
}

/// Transmit power `tr(W W^H)`.
pub fn transmit_power(w: &ComplexMatrix) -> f64 {
    w.norm_squared()
}

pub fn sinr_from_gains(gains: &ComplexMatrix, noise: f64) -> Vec<f64> {
    (0..gains.nrows())
        .map(|k| {
            let row = gains.row(k);
            let interference: f64 = row
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .map(|(_, g)| g.norm_sqr())
                .sum();
            row[k].norm_sqr() / (interference + noise)
        })
        .collect()
}

pub fn sinr(problem: &SlotProblem, w: &ComplexMatrix, theta: &ComplexVector) -> Result<Vec<f64>> {
    Ok(sinr_from_gains(&problem.gains(w, theta)?, problem.noise))
}

/// `sum_k weights_k log2(1 + sinr_k)`.
pub fn rate_from_sinr(weights: &[f64], sinr: &[f64]) -> f64 {
    weights
        .iter()
        .zip(sinr)
        .map(|(w, g)| w * (1.0 + g).log2())
        .sum()
}

pub fn weighted_sum_rate(
    problem: &SlotProblem,
    w: &ComplexMatrix,
    theta: &ComplexVector,
) -> Result<f64> {
    Ok(rate_from_sinr(&problem.weights, &sinr(problem, w, theta)?))
}

/// The optimal SINR auxiliary is the SINR itself.
pub fn update_alpha(sinr: &[f64]) -> Vec<f64> {
    sinr.to_vec()
}

/// Sum-rate lifted by the SINR auxiliaries; equals the weighted sum-rate
/// when `alpha == sinr`.
pub fn lifted_rate(weights: &[f64], alpha: &[f64], sinr: &[f64]) -> f64 {
    let nats: f64 = weights
        .iter()
        .zip(alpha.iter().zip(sinr))
        .map(|(w, (a, g))| w * ((1.0 + a).ln() - a + (1.0 + a) * g / (1.0 + g)))
        .sum();
    nats / std::f64::consts::LN_2
}

fn boosted_weights(weights: &[f64], alpha: &[f64]) -> Vec<f64> {
    weights
        .iter()
        .zip(alpha)
        .map(|(w, a)| w * (1.0 + a))
        .collect()
}

/// Stationary point of the quadratic transform in each user's auxiliary.
fn transform_auxiliary(gains: &ComplexMatrix, boosted: &[f64], noise: f64) -> Vec<Complex64> {
    (0..gains.nrows())
        .map(|k| {
            let row = gains.row(k);
            let total: f64 = row.iter().map(|g| g.norm_sqr()).sum::<f64>() + noise;
            row[k] * (boosted[k].sqrt() / total)
        })
        .collect()
}

fn transform_value(gains: &ComplexMatrix, boosted: &[f64], aux: &[Complex64], noise: f64) -> f64 {
    (0..gains.nrows())
        .map(|k| {
            let row = gains.row(k);
            let total: f64 = row.iter().map(|g| g.norm_sqr()).sum::<f64>() + noise;
            2.0 * boosted[k].sqrt() * (aux[k].conj() * row[k]).re - aux[k].norm_sqr() * total
        })
        .sum()
}

fn check_users(problem: &SlotProblem, len: usize, what: &str) -> Result<()> {
    if len != problem.users {
        return Err(Error::Dimension(format!(
            "{what} has {len} entries, expected {}",
            problem.users
        )));
    }
    Ok(())
}

/// Precoder-side quadratic-transform auxiliaries.
pub fn update_beta(
    problem: &SlotProblem,
    w: &ComplexMatrix,
    theta: &ComplexVector,
    alpha: &[f64],
) -> Result<Vec<Complex64>> {
    check_users(problem, alpha.len(), "alpha")?;
    let gains = problem.gains(w, theta)?;
    Ok(transform_auxiliary(
        &gains,
        &boosted_weights(&problem.weights, alpha),
        problem.noise,
    ))
}

/// Quadratic-transform surrogate of the precoder subproblem.
pub fn precoder_surrogate(
    problem: &SlotProblem,
    w: &ComplexMatrix,
    theta: &ComplexVector,
    alpha: &[f64],
    beta: &[Complex64],
) -> Result<f64> {
    check_users(problem, alpha.len(), "alpha")?;
    check_users(problem, beta.len(), "beta")?;
    let gains = problem.gains(w, theta)?;
    Ok(transform_value(
        &gains,
        &boosted_weights(&problem.weights, alpha),
        beta,
        problem.noise,
    ))
}

/// Result of the power-constrained precoder update.
#[derive(Debug, Clone)]
pub struct PrecoderUpdate {
    pub w: ComplexMatrix,
    /// Multiplier of the power constraint; zero when the budget is slack.
    pub multiplier: f64,
}

/// Maximizes the precoder surrogate under `tr(W W^H) <= P`.
///
/// `w_k = sqrt(boost_k) beta_k (mu I + sum_i |beta_i|^2 h_i h_i^H)^{-1} h_k`.
/// The inverse is applied through an eigendecomposition so the transmit
/// power is an explicit, decreasing function of `mu`, which is then
/// bisected.
pub fn update_precoder(
    problem: &SlotProblem,
    theta: &ComplexVector,
    alpha: &[f64],
    beta: &[Complex64],
) -> Result<PrecoderUpdate> {
    check_users(problem, alpha.len(), "alpha")?;
    check_users(problem, beta.len(), "beta")?;
    let h = problem.effective_channel(theta)?;
    let boosted = boosted_weights(&problem.weights, alpha);
    let mut weighted = h.clone();
    let mut rhs = h;
    for k in 0..problem.users {
        weighted.column_mut(k).scale_mut(beta[k].norm());
        let s = beta[k] * boosted[k].sqrt();
        rhs.column_mut(k).iter_mut().for_each(|x| *x *= s);
    }
    let gram = hermitian_part(&(&weighted * weighted.adjoint()));
    let eig = gram.symmetric_eigen();
    let coeffs = eig.eigenvectors.adjoint() * &rhs;
    let lambda_max = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let nt = problem.antennas;
    let keep: Vec<bool> = eig
        .eigenvalues
        .iter()
        .map(|&l| lambda_max > 0.0 && l > 1e-12 * lambda_max)
        .collect();
    let row_energy: Vec<f64> = (0..nt)
        .map(|i| coeffs.row(i).iter().map(|c| c.norm_sqr()).sum())
        .collect();
    let power_at = |mu: f64| -> f64 {
        (0..nt)
            .filter(|&i| keep[i])
            .map(|i| row_energy[i] / (eig.eigenvalues[i] + mu).powi(2))
            .sum()
    };

    let budget = problem.power;
    let multiplier = if power_at(0.0) <= budget {
        0.0
    } else {
        // power(mu) <= E / mu^2 and power(mu) >= E / (lambda_max + mu)^2.
        let energy: f64 = (0..nt).filter(|&i| keep[i]).map(|i| row_energy[i]).sum();
        let root = (energy / budget).sqrt();
        let mut lo = (root - lambda_max).max(0.0);
        let mut hi = root;
        while power_at(hi) > budget {
            hi *= 2.0;
        }
        for _ in 0..200 {
            if budget - power_at(hi) <= 1e-13 * budget || hi - lo <= 1e-15 * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if power_at(mid) > budget {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };

    let mut scaled = coeffs;
    for i in 0..nt {
        let f = if keep[i] {
            1.0 / (eig.eigenvalues[i] + multiplier)
        } else {
            0.0
        };
        scaled.row_mut(i).scale_mut(f);
    }
    Ok(PrecoderUpdate {
        w: eig.eigenvectors * scaled,
        multiplier,
    })
}

/// Reflection-side quadratic-transform auxiliaries, evaluated at the
/// current precoder and reflection vector.
pub fn update_rho(
    problem: &SlotProblem,
    w: &ComplexMatrix,
    theta: &ComplexVector,
    alpha: &[f64],
) -> Result<Vec<Complex64>> {
    update_beta(problem, w, theta, alpha)
}

/// Quadratic-transform surrogate of the reflection subproblem.
pub fn reflection_surrogate(
    problem: &SlotProblem,
    w: &ComplexMatrix,
    theta: &ComplexVector,
    alpha: &[f64],
    rho: &[Complex64],
) -> Result<f64> {
    precoder_surrogate(problem, w, theta, alpha, rho)
}

/// `-theta^H A theta + 2 Re(theta^H b) + constant` as a function of the
/// stacked reflection vector.
#[derive(Debug, Clone)]
pub struct ReflectionQuadratic {
    pub a: ComplexMatrix,
    pub b: ComplexVector,
    /// Terms independent of `theta` (direct link and noise).
    pub constant: f64,
}

impl ReflectionQuadratic {
    /// The `theta`-dependent part, the quantity the reflection solvers maximize.
    pub fn objective(&self, theta: &ComplexVector) -> f64 {
        quadratic_objective(&self.a, &self.b, theta)
    }

    /// Equals [`reflection_surrogate`] at the same state.
    pub fn surrogate(&self, theta: &ComplexVector) -> f64 {
        self.objective(theta) + self.constant
    }
}

/// Vectors `v_kj` for all `(k, j)`, column `k * K + j`.
fn cascade_vectors(problem: &SlotProblem, w: &ComplexMatrix) -> ComplexMatrix {
    let k_users = problem.users;
    let mut v = ComplexMatrix::zeros(problem.elements(), k_users * k_users);
    let mut offset = 0;
    for link in &problem.links {
        let gw = link.g.adjoint() * w;
        for n in 0..link.elements() {
            for k in 0..k_users {
                let h = link.h[(n, k)].conj();
                for j in 0..k_users {
                    v[(offset + n, k * k_users + j)] = h * gw[(n, j)];
                }
            }
        }
        offset += link.elements();
    }
    v
}

/// Builds `A` and `b` so that the reflection surrogate equals
/// `-theta^H A theta + 2 Re(theta^H b) + constant`.
pub fn assemble_reflection_quadratic(
    problem: &SlotProblem,
    w: &ComplexMatrix,
    alpha: &[f64],
    rho: &[Complex64],
) -> Result<ReflectionQuadratic> {
    problem.check_precoder(w)?;
    check_users(problem, alpha.len(), "alpha")?;
    check_users(problem, rho.len(), "rho")?;
    let k_users = problem.users;
    let boosted = boosted_weights(&problem.weights, alpha);
    let v = cascade_vectors(problem, w);
    let direct = problem
        .direct
        .as_ref()
        .map(|d| d.adjoint() * w)
        .unwrap_or_else(|| ComplexMatrix::zeros(k_users, k_users));

    let mut scaled = v.clone();
    for k in 0..k_users {
        let m = rho[k].norm();
        for j in 0..k_users {
            scaled.column_mut(k * k_users + j).scale_mut(m);
        }
    }
    let a = hermitian_part(&(&scaled * scaled.adjoint()));

    let mut b = ComplexVector::zeros(problem.elements());
    let mut constant = 0.0;
    for k in 0..k_users {
        let r2 = rho[k].norm_sqr();
        let sw = boosted[k].sqrt();
        b.axpy(
            rho[k].conj() * sw,
            &v.column(k * k_users + k),
            Complex64::new(1.0, 0.0),
        );
        let mut direct_energy = 0.0;
        for j in 0..k_users {
            let c = direct[(k, j)];
            direct_energy += c.norm_sqr();
            if c != ZERO {
                b.axpy(
                    -c.conj() * r2,
                    &v.column(k * k_users + j),
                    Complex64::new(1.0, 0.0),
                );
            }
        }
        constant +=
            2.0 * sw * (rho[k].conj() * direct[(k, k)]).re - r2 * (direct_energy + problem.noise);
    }
    Ok(ReflectionQuadratic { a, b, constant })
}

/// Zero-forcing precoder with unit-norm columns and equal power per user.
pub fn zf_precoder(h_eff: &ComplexMatrix, power: f64) -> Result<ComplexMatrix> {
    let (nt, k) = h_eff.shape();
    if k > nt {
        return Err(Error::RankDeficient(format!(
            "zero-forcing {k} users needs at least {k} antennas, have {nt}"
        )));
    }
    let gram = h_eff.adjoint() * h_eff;
    let inv = gram
        .try_inverse()
        .ok_or_else(|| Error::RankDeficient("effective channel has dependent columns".into()))?;
    let mut w = h_eff * inv;
    let per_user = (power / k as f64).sqrt();
    for mut col in w.column_iter_mut() {
        let n = col.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::RankDeficient("zero-forcing column vanished".into()));
        }
        col.scale_mut(per_user / n);
    }
    Ok(w)
}
