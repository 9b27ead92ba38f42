//! Experiment results and their CSV/JSON form.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use super::config::ScenarioConfig;
use crate::error::Result;

pub const CSV_HEADER: &str = "sweep_var,value,scheme,mean,stderr,trials";

/// One aggregated sweep point of one scheme.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub sweep_var: String,
    pub value: f64,
    pub scheme: String,
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

impl ResultRow {
    pub fn from_samples(sweep_var: &str, value: f64, scheme: &str, samples: &[f64]) -> Self {
        let (mean, stderr) = mean_and_stderr(samples);
        Self {
            sweep_var: sweep_var.to_string(),
            value,
            scheme: scheme.to_string(),
            mean,
            stderr,
            trials: samples.len(),
        }
    }

    /// A single deterministic value (one trial, no spread).
    pub fn single(sweep_var: &str, value: f64, scheme: &str, mean: f64) -> Self {
        Self {
            sweep_var: sweep_var.to_string(),
            value,
            scheme: scheme.to_string(),
            mean,
            stderr: 0.0,
            trials: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub experiment: String,
    pub seed: u64,
    pub config_sha256: String,
    /// Seconds since the Unix epoch when the run finished.
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub metadata: Metadata,
    pub rows: Vec<ResultRow>,
    /// Property violations found while running; non-empty means failure.
    pub violations: Vec<String>,
    /// Checks that did not hold but do not fail the run.
    pub warnings: Vec<String>,
}

impl ExperimentResult {
    pub fn new(experiment: &str, cfg: &ScenarioConfig, rows: Vec<ResultRow>) -> Self {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            metadata: Metadata {
                experiment: experiment.to_string(),
                seed: cfg.seed,
                config_sha256: cfg.sha256(),
                timestamp,
            },
            rows,
            violations: Vec::new(),
            warnings: Vec::new(),
        }
    }

    /// Rows of one scheme in sweep order.
    pub fn scheme_rows(&self, scheme: &str) -> Vec<&ResultRow> {
        self.rows.iter().filter(|r| r.scheme == scheme).collect()
    }

    pub fn row(&self, scheme: &str, value: f64) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.scheme == scheme && r.value == value)
    }

    /// CSV text: a comment line with experiment, seed and config hash,
    /// the header, then one line per row.
    pub fn to_csv(&self) -> String {
        let m = &self.metadata;
        let mut out = format!(
            "# experiment={} seed={} config_sha256={}\n{CSV_HEADER}\n",
            m.experiment, m.seed, m.config_sha256
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.sweep_var,
                format_g12(r.value),
                r.scheme,
                format_g12(r.mean),
                format_g12(r.stderr),
                r.trials
            );
        }
        out
    }

    pub fn to_json(&self, cfg: &ScenarioConfig) -> String {
        #[derive(Serialize)]
        struct Sidecar<'a> {
            #[serde(flatten)]
            metadata: &'a Metadata,
            config: &'a ScenarioConfig,
            violations: &'a [String],
            warnings: &'a [String],
        }
        let mut s = serde_json::to_string_pretty(&Sidecar {
            metadata: &self.metadata,
            config: cfg,
            violations: &self.violations,
            warnings: &self.warnings,
        })
        .expect("result serializes");
        s.push('\n');
        s
    }

    /// Writes `<experiment>.csv` and `<experiment>.json` into `dir`.
    pub fn write(&self, dir: &Path, cfg: &ScenarioConfig) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let csv = dir.join(format!("{}.csv", self.metadata.experiment));
        let json = dir.join(format!("{}.json", self.metadata.experiment));
        std::fs::write(&csv, self.to_csv())?;
        std::fs::write(&json, self.to_json(cfg))?;
        Ok((csv, json))
    }
}

/// Mean and standard error `s / sqrt(n)` with the `n - 1` sample variance;
/// the error is 0 for a single sample.
pub fn mean_and_stderr(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// `printf("%.12g")`.
pub fn format_g12(x: f64) -> String {
    const P: i32 = 12;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..P).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (P - 1 - exp) as usize, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
