//! Run configuration: one TOML document describing geometry, material,
//! lattice, training, SIMP, and optimizer settings.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CwError, Result};
use crate::fem::PlaneStressMaterial;
use crate::model::{BoundaryPortSel, GeometryParams, LatticeSpec, Side};
use crate::opt::SimpParams;
use crate::train::TrainingParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryConfig {
    pub port_length: f64,
    pub strut_length: f64,
    pub joint_side: f64,
    pub thickness: f64,
    /// nodes across each port
    pub resolution: usize,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        let g = GeometryParams::default();
        Self {
            port_length: g.port_length,
            strut_length: g.strut_length,
            joint_side: g.joint_side,
            thickness: g.thickness,
            resolution: 9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialConfig {
    pub young_modulus: f64,
    pub poisson_ratio: f64,
}

impl Default for MaterialConfig {
    fn default() -> Self {
        Self {
            young_modulus: 69e9,
            poisson_ratio: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PortSel {
    pub side: Side,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadSpec {
    pub side: Side,
    pub index: usize,
    /// constant traction along the port, N/m
    pub traction: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfig {
    pub cols: usize,
    pub rows: usize,
    #[serde(default)]
    pub stub_struts: Vec<Side>,
    #[serde(default)]
    pub dirichlet: Vec<PortSel>,
    #[serde(default)]
    pub loads: Vec<LoadSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub n_samples: usize,
    pub eta: f64,
    pub seed: u64,
    /// POD truncation: discard tail energy below this fraction
    pub energy_tol: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            n_samples: 500,
            eta: 1.0,
            seed: 20200828,
            energy_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimpConfig {
    pub exponent: f64,
    pub min_stiffness_ratio: f64,
    pub density_floor: f64,
}

impl Default for SimpConfig {
    fn default() -> Self {
        Self {
            exponent: 3.0,
            min_stiffness_ratio: 1e-9,
            density_floor: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    /// uniform at the volume fraction
    Uniform,
    /// truncated normal (mean 0.6, sd 0.05), clipped to the bounds
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeConfig {
    pub volume_fraction: f64,
    pub basis_size: usize,
    pub init: InitMode,
    pub init_seed: u64,
    pub stop_tol: f64,
    pub max_iters: usize,
    /// densities below become void in post-processing
    pub threshold: f64,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            volume_fraction: 0.6,
            basis_size: 8,
            init: InitMode::Uniform,
            init_seed: 1,
            stop_tol: 1e-6,
            max_iters: 500,
            threshold: 0.7,
        }
    }
}

/// Complete description of a run; every command reads one of these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RunConfig {
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub material: MaterialConfig,
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub training: TrainingConfig,
    #[serde(default)]
    pub simp: SimpConfig,
    #[serde(default)]
    pub optimizer: OptimizeConfig,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self {
            cols: 10,
            rows: 10,
            stub_struts: vec![Side::Left],
            dirichlet: vec![
                PortSel { side: Side::Left, index: 0 },
                PortSel { side: Side::Left, index: 4 },
                PortSel { side: Side::Left, index: 5 },
                PortSel { side: Side::Left, index: 9 },
            ],
            loads: vec![
                LoadSpec {
                    side: Side::Right,
                    index: 5,
                    traction: [1.0e8, 1.0e8],
                },
                LoadSpec {
                    side: Side::Right,
                    index: 4,
                    traction: [1.0e8, -1.0e8],
                },
            ],
        }
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CwError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| CwError::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self)
            .map_err(|e| CwError::Config(format!("cannot serialize config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        for (name, v) in [
            ("port_length", g.port_length),
            ("strut_length", g.strut_length),
            ("joint_side", g.joint_side),
            ("thickness", g.thickness),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CwError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if g.resolution < 2 {
            return Err(CwError::Config("geometry.resolution must be >= 2".into()));
        }
        PlaneStressMaterial::new(self.material.young_modulus, self.material.poisson_ratio)?;
        for l in &self.lattice.loads {
            if !(l.traction[0].is_finite() && l.traction[1].is_finite()) {
                return Err(CwError::Config("tractions must be finite".into()));
            }
        }
        if !(self.optimizer.volume_fraction > 0.0 && self.optimizer.volume_fraction <= 1.0) {
            return Err(CwError::Config("volume_fraction must lie in (0, 1]".into()));
        }
        if !(self.simp.density_floor > 0.0 && self.simp.density_floor < 1.0) {
            return Err(CwError::Config("density_floor must lie in (0, 1)".into()));
        }
        SimpParams {
            exponent: self.simp.exponent,
            min_stiffness_ratio: self.simp.min_stiffness_ratio,
        }
        .validated()?;
        Ok(())
    }

    pub fn geometry_params(&self) -> GeometryParams {
        GeometryParams {
            port_length: self.geometry.port_length,
            strut_length: self.geometry.strut_length,
            joint_side: self.geometry.joint_side,
            thickness: self.geometry.thickness,
        }
    }

    pub fn material(&self) -> Result<PlaneStressMaterial> {
        PlaneStressMaterial::new(self.material.young_modulus, self.material.poisson_ratio)
    }

    pub fn lattice_spec(&self) -> LatticeSpec {
        LatticeSpec {
            cols: self.lattice.cols,
            rows: self.lattice.rows,
            stub_struts: self.lattice.stub_struts.clone(),
            dirichlet: self
                .lattice
                .dirichlet
                .iter()
                .map(|p| BoundaryPortSel {
                    side: p.side,
                    index: p.index,
                })
                .collect(),
            loads: self
                .lattice
                .loads
                .iter()
                .map(|l| {
                    (
                        BoundaryPortSel {
                            side: l.side,
                            index: l.index,
                        },
                        l.traction,
                    )
                })
                .collect(),
        }
    }

    pub fn training_params(&self) -> TrainingParams {
        TrainingParams {
            n_samples: self.training.n_samples,
            eta: self.training.eta,
            seed: self.training.seed,
            density_range: (self.simp.density_floor, 1.0),
        }
    }

    pub fn simp_params(&self) -> SimpParams {
        SimpParams {
            exponent: self.simp.exponent,
            min_stiffness_ratio: self.simp.min_stiffness_ratio,
        }
    }
}

/// Read a density vector, one value per line; '#' starts a comment.
pub fn read_densities(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let t = line.split('#').next().unwrap_or("").trim();
        if t.is_empty() {
            continue;
        }
        out.push(t.parse::<f64>().map_err(|e| {
            CwError::Config(format!("{} line {}: {e}", path.display(), ln + 1))
        })?);
    }
    Ok(out)
}

pub fn write_densities(path: &Path, mu: &[f64]) -> Result<()> {
    let mut text = String::from("# one component density per line\n");
    for m in mu {
        text.push_str(&format!("{m:.17e}\n"));
    }
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_identity() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml().unwrap();
        let back = RunConfig::from_toml(&text).unwrap();
        assert_eq!(cfg, back);
        // and once more through the serializer
        assert_eq!(text, back.to_toml().unwrap());
    }

    #[test]
    fn rejects_invalid_values() {
        let mut cfg = RunConfig::default();
        cfg.material.poisson_ratio = 0.7;
        assert!(matches!(
            RunConfig::from_toml(&cfg.to_toml().unwrap()),
            Err(CwError::Config(_))
        ));
        let mut cfg = RunConfig::default();
        cfg.geometry.resolution = 1;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn density_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mu.txt");
        let mu = vec![0.1, 0.5, 1.0, 1e-3];
        write_densities(&path, &mu).unwrap();
        let back = read_densities(&path).unwrap();
        assert_eq!(mu, back);
    }
}
