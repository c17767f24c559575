//! SIMP compliance minimization over per-component densities.

mod driver;
mod mma;
mod objective;
mod simp;

pub use driver::{
    post_process, run_optimization, OptimizationResult, OptimizerSettings, PostProcessed,
};
pub use mma::{MmaOptions, MmaState};
pub use objective::{compliance, compliance_sensitivity, volume_constraint, ComplianceProblem};
pub use simp::SimpParams;
