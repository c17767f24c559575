use serde::{Deserialize, Serialize};

use crate::error::{CwError, Result};

/// Density-to-stiffness interpolation `s(mu) = mu^p + (1 - mu^p) E_min/E_0`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SimpParams {
    pub exponent: f64,
    /// E_min / E_0
    pub min_stiffness_ratio: f64,
}

impl Default for SimpParams {
    fn default() -> Self {
        Self {
            exponent: 3.0,
            min_stiffness_ratio: 1e-9,
        }
    }
}

impl SimpParams {
    pub fn validated(self) -> Result<Self> {
        if !(self.exponent >= 1.0) {
            return Err(CwError::Config(format!(
                "SIMP exponent must be >= 1, got {}",
                self.exponent
            )));
        }
        if !(self.min_stiffness_ratio > 0.0 && self.min_stiffness_ratio < 1.0) {
            return Err(CwError::Config(format!(
                "E_min/E_0 must lie in (0, 1), got {}",
                self.min_stiffness_ratio
            )));
        }
        Ok(self)
    }

    pub fn value(&self, mu: f64) -> f64 {
        let mp = mu.powf(self.exponent);
        mp + (1.0 - mp) * self.min_stiffness_ratio
    }

    pub fn derivative(&self, mu: f64) -> f64 {
        self.exponent * mu.powf(self.exponent - 1.0) * (1.0 - self.min_stiffness_ratio)
    }

    pub fn values(&self, mu: &[f64]) -> Vec<f64> {
        mu.iter().map(|&m| self.value(m)).collect()
    }
}
