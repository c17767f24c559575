use crate::condense::CondensedModel;
use crate::error::{CwError, Result};
use crate::fem::SparseSpdMatrix;
use crate::model::SystemTopology;

/// Zero-pad a reduced solution into the full model's coordinates. Both
/// models must be built on the same topology with nested per-port bases
/// (the reduced basis a prefix of the full one).
pub fn embed_reduced(
    full: &CondensedModel,
    reduced: &CondensedModel,
    topology: &SystemTopology,
    u_reduced: &[f64],
) -> Result<Vec<f64>> {
    if u_reduced.len() != reduced.num_dofs() {
        return Err(CwError::Contract(format!(
            "reduced solution has {} entries, model expects {}",
            u_reduced.len(),
            reduced.num_dofs()
        )));
    }
    let mut out = vec![0.0; full.num_dofs()];
    for g in 0..topology.num_global_ports() {
        match (
            full.dof_map().port_offset(g),
            reduced.dof_map().port_offset(g),
        ) {
            (Some(of), Some(or)) => {
                let mr = reduced.dof_map().port_size(g);
                let mf = full.dof_map().port_size(g);
                if mr > mf {
                    return Err(CwError::Contract(format!(
                        "port {g}: reduced size {mr} exceeds full size {mf}"
                    )));
                }
                out[of..of + mr].copy_from_slice(&u_reduced[or..or + mr]);
            }
            (None, None) => {}
            _ => {
                return Err(CwError::Contract(format!(
                    "port {g} has inconsistent Dirichlet status between models"
                )));
            }
        }
    }
    Ok(out)
}

/// Residual of an extended (zero-padded) reduced solution in the full
/// condensed system: `R = F - K u_hat`; by construction `R = K e` with
/// `e` the coefficient error.
pub fn extended_residual(k: &SparseSpdMatrix, f: &[f64], u_hat: &[f64]) -> Vec<f64> {
    let ku = k.matvec(u_hat);
    f.iter().zip(&ku).map(|(a, b)| a - b).collect()
}
