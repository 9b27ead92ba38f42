use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

/// Reference-distance path-loss constants for the two hops of a cascaded
/// IRS link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossParams {
    pub c1: f64,
    pub c2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub d0: f64,
}

impl PathLossParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.c1, self.c2, self.alpha1, self.alpha2, self.d0];
        ensure(all.iter().all(|v| *v > 0.0 && v.is_finite()), || {
            format!("path-loss parameters must be positive: {self:?}")
        })
    }
}

/// Received-power factor of the cascaded link, which decays with the
/// product of the hop distances: `c1 c2 (d1/d0)^-a1 (d2/d0)^-a2`.
pub fn product_path_loss(p: &PathLossParams, d1: f64, d2: f64) -> Result<f64> {
    p.validate()?;
    ensure(d1 >= p.d0 && d2 >= p.d0, || {
        format!("distances ({d1}, {d2}) below reference distance {}", p.d0)
    })?;
    Ok(p.c1 * p.c2 * (d1 / p.d0).powf(-p.alpha1) * (d2 / p.d0).powf(-p.alpha2))
}
