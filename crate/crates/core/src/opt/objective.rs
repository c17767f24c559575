use crate::condense::{CondensedModel, CondensedSystem};
use crate::error::Result;
use crate::model::SystemTopology;

use super::simp::SimpParams;

/// Compliance as the work of external loads, plus optional bubble work
/// `f_i^T b_i` for components carrying body loads (zero for port-only
/// loading).
pub fn compliance(system: &CondensedSystem, bubble_work: f64) -> Result<f64> {
    Ok(system.load_work()? + bubble_work)
}

/// Component-level compliance sensitivity:
/// `dc/dmu_i = -s'(mu_i) (U_i^T Kbar^i U_i + b_i^T Abar_i b_i)`.
///
/// `bubble_energy[i]` carries the precomputed `b_i^T Abar_i b_i` terms and
/// is zero for port-only loading.
pub fn compliance_sensitivity(
    model: &CondensedModel,
    topology: &SystemTopology,
    u: &[f64],
    mu: &[f64],
    simp: &SimpParams,
    bubble_energy: Option<&[f64]>,
) -> Vec<f64> {
    (0..topology.num_instances())
        .map(|i| {
            let ui = model.gather_instance(u, i);
            let kbar = &model.local_schur(topology.instances[i].reference).kbar;
            let mut quad = 0.0;
            for r in 0..ui.len() {
                if ui[r] == 0.0 {
                    continue;
                }
                let mut acc = 0.0;
                for c in 0..ui.len() {
                    acc += kbar[(r, c)] * ui[c];
                }
                quad += ui[r] * acc;
            }
            if let Some(be) = bubble_energy {
                quad += be[i];
            }
            -simp.derivative(mu[i]) * quad
        })
        .collect()
}

/// Volume constraint `g0 = sum(mu_i v_i) - v_u` and its gradient.
pub fn volume_constraint(mu: &[f64], volumes: &[f64], v_u: f64) -> (f64, Vec<f64>) {
    let value: f64 = mu.iter().zip(volumes).map(|(m, v)| m * v).sum::<f64>() - v_u;
    (value, volumes.to_vec())
}

/// A compliance-minimization problem bound to one reduced model.
pub struct ComplianceProblem<'a> {
    pub model: &'a CondensedModel,
    pub topology: &'a SystemTopology,
    pub simp: SimpParams,
}

impl<'a> ComplianceProblem<'a> {
    /// Solve at `mu`, returning compliance and its gradient.
    pub fn evaluate(&self, mu: &[f64]) -> Result<(f64, Vec<f64>)> {
        let scale = self.simp.values(mu);
        let mut sys = self.model.assemble(self.topology, &scale)?;
        let u = sys.solve()?.to_vec();
        let c = compliance(&sys, 0.0)?;
        let dc = compliance_sensitivity(self.model, self.topology, &u, mu, &self.simp, None);
        Ok((c, dc))
    }

    /// Compliance only (used by finite-difference checks and
    /// post-processing).
    pub fn compliance_at(&self, mu: &[f64]) -> Result<f64> {
        let scale = self.simp.values(mu);
        let mut sys = self.model.assemble(self.topology, &scale)?;
        sys.solve()?;
        compliance(&sys, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn volume_constraint_linear_gradient() {
        let volumes = vec![1.0, 2.0, 0.5];
        let mu = vec![0.3, 0.6, 0.9];
        let (g, grad) = volume_constraint(&mu, &volumes, 1.0);
        assert!((g - (0.3 + 1.2 + 0.45 - 1.0)).abs() < 1e-15);
        // exact finite differences for a linear function
        let h = 1e-3;
        for i in 0..3 {
            let mut mp = mu.clone();
            mp[i] += h;
            let mut mm = mu.clone();
            mm[i] -= h;
            let fd = (volume_constraint(&mp, &volumes, 1.0).0
                - volume_constraint(&mm, &volumes, 1.0).0)
                / (2.0 * h);
            assert!((grad[i] - fd).abs() <= 1e-12);
        }
        // boundary cases
        assert!((volume_constraint(&[0.0; 3], &volumes, 2.5).0 + 2.5).abs() < 1e-15);
        let total: f64 = volumes.iter().sum();
        assert!(volume_constraint(&[1.0; 3], &volumes, total).0.abs() < 1e-15);
    }
}
