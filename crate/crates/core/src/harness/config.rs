//! Scenario configuration, read from TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry_channel::jakes_correlation;
use crate::two_timescale::{FrameConfig, PsoParams};

/// `10^((dBm - 30) / 10)` watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub bs_antennas: usize,
    pub irs_units: usize,
    pub elements_per_unit: usize,
    /// Single-antenna users in the slot experiments; receive antennas of
    /// the single user in the two-timescale experiment.
    pub users: usize,
    /// Data streams in the two-timescale experiment.
    pub streams: usize,
    pub power_dbm: f64,
    pub noise_dbm: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            bs_antennas: 8,
            irs_units: 2,
            elements_per_unit: 16,
            users: 3,
            streams: 2,
            power_dbm: 30.0,
            noise_dbm: -80.0,
        }
    }
}

impl SystemConfig {
    pub fn power_watts(&self) -> f64 {
        dbm_to_watts(self.power_dbm)
    }
    pub fn noise_watts(&self) -> f64 {
        dbm_to_watts(self.noise_dbm)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub wavelength_m: f64,
    pub bs_height_m: f64,
    pub irs_height_m: f64,
    pub user_height_m: f64,
    pub user_center_m: [f64; 2],
    pub user_radius_m: f64,
    /// Horizontal IRS unit positions; defaults to `(35, 5 i)` for unit `i = 1, 2, ...`.
    pub irs_positions_m: Option<Vec<[f64; 2]>>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            wavelength_m: 0.0107,
            bs_height_m: 10.0,
            irs_height_m: 5.0,
            user_height_m: 1.5,
            user_center_m: [40.0, 0.0],
            user_radius_m: 10.0,
            irs_positions_m: None,
        }
    }
}

impl GeometryConfig {
    pub fn irs_position(&self, unit: usize) -> [f64; 2] {
        match &self.irs_positions_m {
            Some(p) => p[unit],
            None => [35.0, 5.0 * (unit + 1) as f64],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    /// Reference-distance gain and exponent of the BS-IRS hop.
    pub bs_irs_gain: f64,
    pub bs_irs_exponent: f64,
    /// Reference-distance gain and exponent of the IRS-user hop.
    pub irs_user_gain: f64,
    pub irs_user_exponent: f64,
    pub direct_link: bool,
    pub direct_gain: f64,
    pub direct_exponent: f64,
    pub reference_distance_m: f64,
    /// Non-line-of-sight paths of each BS-IRS channel.
    pub bs_irs_nlos_paths: usize,
    /// Power of the NLoS paths relative to the LoS path, dB.
    pub nlos_relative_db: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            bs_irs_gain: 1e-3,
            bs_irs_exponent: 2.0,
            irs_user_gain: 1e-3,
            irs_user_exponent: 2.2,
            direct_link: true,
            direct_gain: 1e-3,
            direct_exponent: 3.5,
            reference_distance_m: 1.0,
            bs_irs_nlos_paths: 2,
            nlos_relative_db: -10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AoConfig {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for AoConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iters: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SumrateConfig {
    /// Elements per IRS unit at each sweep point.
    pub elements: Vec<usize>,
    /// Optional second sweep over BS antennas at the base element count.
    pub antennas: Vec<usize>,
    /// Phase resolutions of the quantized variants.
    pub bits: Vec<u32>,
}

impl Default for SumrateConfig {
    fn default() -> Self {
        Self {
            elements: vec![4, 8, 16, 32],
            antennas: Vec::new(),
            bits: vec![1, 2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankConfig {
    pub max_units: usize,
    pub threshold: f64,
    /// Draw every path direction of the reflected links at random, with
    /// each unit's BS departure inside its own angular sector, instead of
    /// taking the directions from the deployment geometry.
    pub independent_angles: bool,
}

impl Default for RankConfig {
    fn default() -> Self {
        Self {
            max_units: 4,
            threshold: 1e-3,
            independent_angles: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AasrConfig {
    pub kappa: f64,
    /// CSI delay in slots.
    pub delay_slots: usize,
    /// Temporal correlation values to sweep. Ignored when `doppler_hz` is set.
    pub rho: Vec<f64>,
    /// Maximum Doppler shift; with `slot_duration_s` it fixes a single
    /// correlation `J0(2 pi f_d delay T_slot)`.
    pub doppler_hz: Option<f64>,
    pub slot_duration_s: Option<f64>,
    /// Fresh frames drawn per trial to score the chosen phases.
    pub evaluation_frames: usize,
}

impl Default for AasrConfig {
    fn default() -> Self {
        Self {
            kappa: 0.5,
            delay_slots: 1,
            rho: (0..=10).map(|i| i as f64 / 10.0).collect(),
            doppler_hz: None,
            slot_duration_s: None,
            evaluation_frames: 10,
        }
    }
}

impl AasrConfig {
    /// Correlation values actually swept.
    pub fn rho_values(&self) -> Result<Vec<f64>> {
        match (self.doppler_hz, self.slot_duration_s) {
            (Some(fd), Some(ts)) => Ok(vec![
                jakes_correlation(fd, ts * self.delay_slots as f64)?.clamp(0.0, 1.0)
            ]),
            (None, None) => Ok(self.rho.clone()),
            _ => Err(Error::Config(
                "doppler_hz and slot_duration_s must be given together".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub trials: usize,
    pub system: SystemConfig,
    pub geometry: GeometryConfig,
    pub channel: ChannelConfig,
    pub ao: AoConfig,
    pub pso: PsoParams,
    pub sumrate: SumrateConfig,
    pub rank: RankConfig,
    pub aasr: AasrConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            trials: 30,
            system: SystemConfig::default(),
            geometry: GeometryConfig::default(),
            channel: ChannelConfig::default(),
            ao: AoConfig::default(),
            pso: PsoParams::default(),
            sumrate: SumrateConfig::default(),
            rank: RankConfig::default(),
            aasr: AasrConfig::default(),
        }
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Config(msg()))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    check(v > 0.0 && v.is_finite(), || {
        format!("{name} must be positive, got {v}")
    })
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.system;
        check(self.trials >= 1, || "trials must be at least 1".into())?;
        for (name, v) in [
            ("bs_antennas", s.bs_antennas),
            ("irs_units", s.irs_units),
            ("elements_per_unit", s.elements_per_unit),
            ("users", s.users),
            ("streams", s.streams),
        ] {
            check(v >= 1, || format!("system.{name} must be positive"))?;
        }
        check(s.users <= s.bs_antennas, || {
            format!(
                "{} users need at least as many BS antennas, have {}",
                s.users, s.bs_antennas
            )
        })?;
        check(s.streams <= s.bs_antennas.min(s.users), || {
            format!("{} streams exceed min(bs_antennas, users)", s.streams)
        })?;
        check(s.power_dbm.is_finite() && s.noise_dbm.is_finite(), || {
            "powers must be finite".into()
        })?;

        let g = &self.geometry;
        positive("geometry.wavelength_m", g.wavelength_m)?;
        positive("geometry.user_radius_m", g.user_radius_m)?;
        if let Some(p) = &g.irs_positions_m {
            let needed = s.irs_units.max(self.rank.max_units);
            check(p.len() >= needed, || {
                format!("{} IRS positions given, {needed} needed", p.len())
            })?;
        }

        let c = &self.channel;
        for (name, v) in [
            ("bs_irs_gain", c.bs_irs_gain),
            ("bs_irs_exponent", c.bs_irs_exponent),
            ("irs_user_gain", c.irs_user_gain),
            ("irs_user_exponent", c.irs_user_exponent),
            ("direct_gain", c.direct_gain),
            ("direct_exponent", c.direct_exponent),
            ("reference_distance_m", c.reference_distance_m),
        ] {
            positive(&format!("channel.{name}"), v)?;
        }

        positive("ao.tol", self.ao.tol)?;
        check(self.ao.max_iters >= 1, || {
            "ao.max_iters must be positive".into()
        })?;
        self.pso
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        check(self.pso.iterations >= 1, || {
            "pso.iterations must be positive".into()
        })?;
        check(self.pso.total_samples().is_multiple_of(self.pso.iterations), || {
            format!(
                "pso.batches * pso.batch_size = {} must be a multiple of the frame length pso.iterations = {}",
                self.pso.total_samples(),
                self.pso.iterations
            )
        })?;

        check(!self.sumrate.elements.is_empty(), || {
            "sumrate.elements is empty".into()
        })?;
        check(self.sumrate.elements.iter().all(|&n| n >= 1), || {
            "sumrate.elements must be positive".into()
        })?;
        check(self.sumrate.antennas.iter().all(|&n| n >= s.users), || {
            "sumrate.antennas entries must be at least system.users".into()
        })?;
        check(
            self.sumrate.bits.iter().all(|b| (1..=16).contains(b)),
            || "sumrate.bits must be in 1..=16".into(),
        )?;

        check(self.rank.max_units >= 1, || {
            "rank.max_units must be positive".into()
        })?;
        positive("rank.threshold", self.rank.threshold)?;

        let a = &self.aasr;
        check((0.0..=1.0).contains(&a.kappa), || {
            format!("aasr.kappa {} outside [0, 1]", a.kappa)
        })?;
        let rho = a.rho_values()?;
        check(!rho.is_empty(), || "aasr.rho is empty".into())?;
        check(rho.iter().all(|r| (0.0..=1.0).contains(r)), || {
            "aasr.rho values must lie in [0, 1]".into()
        })?;
        check(a.evaluation_frames >= 1, || {
            "aasr.evaluation_frames must be positive".into()
        })?;
        Ok(())
    }

    /// Frame configuration of the two-timescale experiment; the frame
    /// length equals the number of swarm iterations.
    pub fn frame(&self) -> FrameConfig {
        FrameConfig {
            slots: self.pso.iterations,
            delay: self.aasr.delay_slots,
            streams: self.system.streams,
            power: self.system.power_watts(),
            noise: 1.0,
        }
    }

    /// Canonical JSON form; the basis of [`ScenarioConfig::sha256`].
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn sha256(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
