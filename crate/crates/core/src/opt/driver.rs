//! Outer optimization loop: assemble, solve, differentiate, update, with
//! the running-mean stopping rule and density post-processing.

use serde::{Deserialize, Serialize};

use crate::error::{CwError, Result};
use crate::model::DesignState;

use super::mma::{MmaOptions, MmaState};
use super::objective::{volume_constraint, ComplianceProblem};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizerSettings {
    /// stop when the running mean (window 10) of |mu_n - mu_(n-1)|_2 /
    /// sqrt(n_I) falls below this
    pub stop_tol: f64,
    pub max_iters: usize,
    /// post-processing threshold: densities below become void
    pub threshold: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            stop_tol: 1e-6,
            max_iters: 500,
            threshold: 0.7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PostProcessed {
    pub densities: Vec<f64>,
    pub compliance: f64,
    pub mass_fraction: f64,
    /// false when thresholding disconnected the load path and the
    /// un-thresholded design was returned instead
    pub thresholded: bool,
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub densities: Vec<f64>,
    pub compliance: f64,
    pub compliance_history: Vec<f64>,
    /// running mean of the scaled parameter change, per iteration
    pub stopping_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub post: Option<PostProcessed>,
}

/// Minimize compliance subject to the volume budget, starting from
/// `design.densities`.
pub fn run_optimization(
    problem: &ComplianceProblem,
    design: &DesignState,
    settings: &OptimizerSettings,
    mma_options: MmaOptions,
) -> Result<OptimizationResult> {
    let n = design.densities.len();
    let v_u = design.volume_limit;
    if !(v_u > 0.0) {
        return Err(CwError::Config("volume limit must be positive".into()));
    }
    let mut state = MmaState::new(
        design.densities.clone(),
        vec![design.lower_bound; n],
        vec![1.0; n],
        mma_options,
    )?;
    let mut mu = design.densities.clone();
    let mut history = Vec::new();
    let mut trace = Vec::new();
    let mut deltas: Vec<f64> = Vec::new();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut converged = false;
    let mut iterations = 0;

    let (c0, _) = problem.evaluate(&mu)?;
    let obj_scale = if c0 > 0.0 { 1.0 / c0 } else { 1.0 };

    for it in 0..settings.max_iters {
        iterations = it + 1;
        let (c, dc) = problem.evaluate(&mu)?;
        history.push(c);
        let (g, dg) = volume_constraint(&mu, &design.volumes, v_u);
        if g <= 1e-9 * v_u {
            match &best {
                Some((cb, _)) if *cb <= c => {}
                _ => best = Some((c, mu.clone())),
            }
        }
        let df0: Vec<f64> = dc.iter().map(|d| d * obj_scale).collect();
        let fval = g / v_u;
        let dfdx: Vec<f64> = dg.iter().map(|d| d / v_u).collect();
        let new_mu = state.step(&df0, fval, &dfdx)?.to_vec();
        let delta = new_mu
            .iter()
            .zip(&mu)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
            / (n as f64).sqrt();
        deltas.push(delta);
        let window = deltas.len().min(10);
        let mean: f64 = deltas[deltas.len() - window..].iter().sum::<f64>() / window as f64;
        trace.push(mean);
        mu = new_mu;
        if mean < settings.stop_tol {
            converged = true;
            break;
        }
    }

    let (c_final, _) = problem.evaluate(&mu)?;
    history.push(c_final);
    let (g_final, _) = volume_constraint(&mu, &design.volumes, v_u);
    let (densities, compliance) = if g_final <= 1e-9 * v_u {
        (mu, c_final)
    } else if let Some((cb, mb)) = best {
        // infeasible terminal iterate: fall back to the best feasible one
        (mb, cb)
    } else {
        (mu, c_final)
    };

    Ok(OptimizationResult {
        densities,
        compliance,
        compliance_history: history,
        stopping_trace: trace,
        iterations,
        converged,
        post: None,
    })
}

/// Threshold the optimized densities to a binary design and re-evaluate
/// compliance with the reduced model. If thresholding disconnects the load
/// path (the condensed operator loses positive definiteness), the
/// un-thresholded design is reported instead.
pub fn post_process(
    problem: &ComplianceProblem,
    design: &DesignState,
    densities: &[f64],
    threshold: f64,
) -> Result<PostProcessed> {
    let binary: Vec<f64> = densities
        .iter()
        .map(|&m| if m < threshold { design.lower_bound } else { 1.0 })
        .collect();
    let total: f64 = design.volumes.iter().sum();
    match problem.compliance_at(&binary) {
        Ok(c) => {
            let solid_mass: f64 = binary
                .iter()
                .zip(&design.volumes)
                .map(|(m, v)| if *m >= threshold { *v } else { 0.0 })
                .sum();
            Ok(PostProcessed {
                compliance: c,
                mass_fraction: solid_mass / total,
                densities: binary,
                thresholded: true,
            })
        }
        Err(CwError::NotSpd(_)) => {
            let c = problem.compliance_at(densities)?;
            let mass: f64 = densities
                .iter()
                .zip(&design.volumes)
                .map(|(m, v)| m * v)
                .sum();
            Ok(PostProcessed {
                compliance: c,
                mass_fraction: mass / total,
                densities: densities.to_vec(),
                thresholded: false,
            })
        }
        Err(e) => Err(e),
    }
}
