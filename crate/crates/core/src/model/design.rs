use crate::error::{CwError, Result};

/// Per-component density design variables plus the volume budget.
#[derive(Debug, Clone)]
pub struct DesignState {
    pub densities: Vec<f64>,
    pub volumes: Vec<f64>,
    pub lower_bound: f64,
    pub volume_limit: f64,
}

impl DesignState {
    pub fn new(
        densities: Vec<f64>,
        volumes: Vec<f64>,
        lower_bound: f64,
        volume_limit: f64,
    ) -> Result<Self> {
        if densities.len() != volumes.len() {
            return Err(CwError::Contract(format!(
                "{} densities vs {} volumes",
                densities.len(),
                volumes.len()
            )));
        }
        if !(lower_bound > 0.0 && lower_bound <= 1.0) {
            return Err(CwError::Config(format!(
                "density lower bound must lie in (0, 1], got {lower_bound}"
            )));
        }
        for (i, &m) in densities.iter().enumerate() {
            if !(lower_bound..=1.0).contains(&m) {
                return Err(CwError::Config(format!(
                    "density {i} = {m} outside [{lower_bound}, 1]"
                )));
            }
        }
        Ok(Self {
            densities,
            volumes,
            lower_bound,
            volume_limit,
        })
    }

    pub fn uniform(n: usize, value: f64, volumes: Vec<f64>, lower_bound: f64, volume_limit: f64) -> Result<Self> {
        Self::new(vec![value; n], volumes, lower_bound, volume_limit)
    }

    pub fn total_volume(&self) -> f64 {
        self.volumes.iter().sum()
    }

    pub fn material_volume(&self) -> f64 {
        self.densities
            .iter()
            .zip(&self.volumes)
            .map(|(m, v)| m * v)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_enforced() {
        assert!(DesignState::new(vec![0.5], vec![1.0], 1e-3, 1.0).is_ok());
        assert!(DesignState::new(vec![0.0], vec![1.0], 1e-3, 1.0).is_err());
        assert!(DesignState::new(vec![1.1], vec![1.0], 1e-3, 1.0).is_err());
        assert!(DesignState::new(vec![0.5, 0.4], vec![1.0], 1e-3, 1.0).is_err());
    }
}
