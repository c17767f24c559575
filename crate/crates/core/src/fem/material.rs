use serde::{Deserialize, Serialize};

use crate::error::{CwError, Result};

/// Isotropic plane-stress material.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneStressMaterial {
    /// Young's modulus in Pa.
    pub young_modulus: f64,
    /// Poisson's ratio (dimensionless).
    pub poisson_ratio: f64,
}

impl PlaneStressMaterial {
    pub fn new(young_modulus: f64, poisson_ratio: f64) -> Result<Self> {
        if !(young_modulus > 0.0 && young_modulus.is_finite()) {
            return Err(CwError::Config(format!(
                "young_modulus must be positive and finite, got {young_modulus}"
            )));
        }
        if !(0.0..0.5).contains(&poisson_ratio) {
            return Err(CwError::Config(format!(
                "poisson_ratio must be in [0, 0.5), got {poisson_ratio}"
            )));
        }
        Ok(Self {
            young_modulus,
            poisson_ratio,
        })
    }

    /// Plane-stress constitutive matrix relating [eps_xx, eps_yy, gamma_xy]
    /// to [sig_xx, sig_yy, tau_xy].
    pub fn constitutive(&self) -> nalgebra::Matrix3<f64> {
        let e = self.young_modulus;
        let nu = self.poisson_ratio;
        let c = e / (1.0 - nu * nu);
        nalgebra::Matrix3::new(
            c,
            c * nu,
            0.0,
            c * nu,
            c,
            0.0,
            0.0,
            0.0,
            c * (1.0 - nu) / 2.0,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(PlaneStressMaterial::new(-1.0, 0.3).is_err());
        assert!(PlaneStressMaterial::new(1.0, 0.5).is_err());
        assert!(PlaneStressMaterial::new(1.0, -0.1).is_err());
        assert!(PlaneStressMaterial::new(69e9, 0.3).is_ok());
    }
}
