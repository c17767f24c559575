use crate::error::Result;
use crate::model::SystemTopology;
use crate::opt::{compliance_sensitivity, SimpParams};
use crate::train::TrainedLibrary;

use super::constants::{bound_constants, BoundConstants};
use super::residual::{embed_reduced, extended_residual};

/// Energy-norm bound on the solution state error.
pub fn solution_error_bound(residual_norm: f64, c: &BoundConstants) -> f64 {
    c.c2 / c.sigma_min * residual_norm
}

/// Bound on the compliance objective error.
pub fn compliance_error_bound(residual_norm: f64, load_norm: f64, c: &BoundConstants) -> f64 {
    c.c2 * load_norm / (c.c1 * c.sigma_min) * residual_norm
}

/// Bound on the compliance sensitivity error.
pub fn sensitivity_error_bound(residual_norm: f64, c: &BoundConstants) -> f64 {
    c.kappa / (c.sigma_min * c.sigma_min) * residual_norm * residual_norm
        + 2.0 * c.kappa * c.nu / c.sigma_min * residual_norm
}

/// One certification record: residual, constants, the three bounds, and
/// (when the full solve is available) the true errors they must dominate.
#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub basis_size: usize,
    pub residual_norm: f64,
    pub constants_sigma_min: f64,
    pub constants_c1: f64,
    pub constants_c2: f64,
    pub constants_kappa: f64,
    pub constants_nu: f64,
    pub solution_bound: f64,
    pub compliance_bound: f64,
    pub sensitivity_bound: f64,
    pub true_energy_error: f64,
    pub true_compliance_error: f64,
    pub true_sensitivity_error_l2: f64,
    pub true_sensitivity_error_max: f64,
}

impl ErrorReport {
    /// Every bound at least as large as the matching true error.
    pub fn dominated(&self) -> bool {
        self.solution_bound >= self.true_energy_error
            && self.compliance_bound >= self.true_compliance_error
            && self.sensitivity_bound >= self.true_sensitivity_error_l2
    }
}

/// Certify the reduced solution at `basis_size` against the full-order
/// condensed model for one parameter vector.
pub fn certify(
    library: &TrainedLibrary,
    topology: &SystemTopology,
    mu: &[f64],
    simp: &SimpParams,
    basis_size: usize,
) -> Result<ErrorReport> {
    let scale = simp.values(mu);

    let full = library.full_model(topology)?;
    let mut full_sys = full.assemble(topology, &scale)?;
    let u_full = full_sys.solve()?.to_vec();

    let reduced = library.model(topology, basis_size)?;
    let mut red_sys = reduced.assemble(topology, &scale)?;
    let u_red = red_sys.solve()?.to_vec();

    let u_hat = embed_reduced(&full, &reduced, topology, &u_red)?;
    let r = extended_residual(&full_sys.k, &full_sys.f, &u_hat);
    let r_norm = norm2(&r);
    let f_norm = norm2(&full_sys.f);

    let consts = bound_constants(&full_sys.k, &full, topology, mu, simp, &u_hat)?;

    // true errors against the full-order condensed solution
    let e: Vec<f64> = u_full.iter().zip(&u_hat).map(|(a, b)| a - b).collect();
    let ke = full_sys.k.matvec(&e);
    let energy_error = ke.iter().zip(&e).map(|(a, b)| a * b).sum::<f64>().sqrt();
    let c_full = full_sys.load_work()?;
    let c_red = red_sys.load_work()?;
    let sens_full = compliance_sensitivity(&full, topology, &u_full, mu, simp, None);
    let sens_red_in_full = compliance_sensitivity(&full, topology, &u_hat, mu, simp, None);
    let mut dl2 = 0.0;
    let mut dmax = 0.0f64;
    for (a, b) in sens_full.iter().zip(&sens_red_in_full) {
        let d = a - b;
        dl2 += d * d;
        dmax = dmax.max(d.abs());
    }

    Ok(ErrorReport {
        basis_size,
        residual_norm: r_norm,
        constants_sigma_min: consts.sigma_min,
        constants_c1: consts.c1,
        constants_c2: consts.c2,
        constants_kappa: consts.kappa,
        constants_nu: consts.nu,
        solution_bound: solution_error_bound(r_norm, &consts),
        compliance_bound: compliance_error_bound(r_norm, f_norm, &consts),
        sensitivity_bound: sensitivity_error_bound(r_norm, &consts),
        true_energy_error: energy_error,
        true_compliance_error: (c_full - c_red).abs(),
        true_sensitivity_error_l2: dl2.sqrt(),
        true_sensitivity_error_max: dmax,
    })
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
