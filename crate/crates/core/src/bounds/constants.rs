use crate::condense::CondensedModel;
use crate::error::{CwError, Result};
use crate::fem::SparseSpdMatrix;
use crate::model::SystemTopology;
use crate::opt::SimpParams;

/// Spectral constants entering the a posteriori bounds.
#[derive(Debug, Clone, Copy)]
pub struct BoundConstants {
    /// smallest singular value of K (equals the smallest eigenvalue for SPD K)
    pub sigma_min: f64,
    /// norm-equivalence constants: c1 |v| <= |v|_K <= c2 |v|
    pub c1: f64,
    pub c2: f64,
    /// max over components of |dK/dmu_i|_2
    pub kappa: f64,
    /// Euclidean norm of the reduced solution
    pub nu: f64,
}

const DENSE_LIMIT: usize = 2000;

/// Extreme eigenvalues (min, max) of an SPD matrix: dense solve for small
/// systems, Lanczos (on K and on K^-1 through its factorization) above.
pub fn extreme_eigenvalues(k: &SparseSpdMatrix) -> Result<(f64, f64)> {
    let n = k.dim();
    if n == 0 {
        return Err(CwError::Contract("empty matrix".into()));
    }
    if n <= DENSE_LIMIT {
        return dense_extremes(k);
    }
    let lam_max = match lanczos_largest(n, |x| k.matvec(x), 300, 1e-10) {
        Ok(v) => v,
        Err(_) => return dense_extremes(k),
    };
    let factor = k.factorize()?;
    let lam_min = match lanczos_largest(n, |x| factor.solve(x), 300, 1e-10) {
        Ok(v) => 1.0 / v,
        Err(_) => return dense_extremes(k),
    };
    Ok((lam_min, lam_max))
}

fn dense_extremes(k: &SparseSpdMatrix) -> Result<(f64, f64)> {
    let d = k.to_dense();
    let eig = nalgebra::SymmetricEigen::new(d);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in eig.eigenvalues.iter() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((lo, hi))
}

/// Largest eigenvalue of a symmetric positive operator by Lanczos with full
/// reorthogonalization and a deterministic start vector.
fn lanczos_largest(
    n: usize,
    apply: impl Fn(&[f64]) -> Vec<f64>,
    max_iters: usize,
    tol: f64,
) -> Result<f64> {
    let mut state = 0x9E3779B97F4A7C15u64;
    let mut v: Vec<f64> = (0..n)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        })
        .collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);

    let mut basis: Vec<Vec<f64>> = vec![v.clone()];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut prev_theta = f64::NEG_INFINITY;
    for it in 0..max_iters.min(n) {
        let mut w = apply(&basis[it]);
        let alpha: f64 = w.iter().zip(&basis[it]).map(|(a, b)| a * b).sum();
        alphas.push(alpha);
        // full reorthogonalization
        for q in &basis {
            let d: f64 = w.iter().zip(q).map(|(a, b)| a * b).sum();
            w.iter_mut().zip(q).for_each(|(x, qv)| *x -= d * qv);
        }
        for q in &basis {
            let d: f64 = w.iter().zip(q).map(|(a, b)| a * b).sum();
            w.iter_mut().zip(q).for_each(|(x, qv)| *x -= d * qv);
        }
        let beta = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        // tridiagonal eigenvalue estimate
        let m = alphas.len();
        let mut t = nalgebra::DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alphas[i];
            if i + 1 < m {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let theta = nalgebra::SymmetricEigen::new(t)
            .eigenvalues
            .iter()
            .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        if it > 3 && (theta - prev_theta).abs() <= tol * theta.abs().max(1e-300) {
            return Ok(theta);
        }
        prev_theta = theta;
        if beta <= 1e-14 * alpha.abs().max(1e-300) {
            // invariant subspace reached
            return Ok(theta);
        }
        betas.push(beta);
        w.iter_mut().for_each(|x| *x /= beta);
        basis.push(w);
    }
    Err(CwError::Numeric(
        "Lanczos iteration did not converge".into(),
    ))
}

/// Assemble the bound constants for a full-order condensed system.
///
/// `kappa` is taken per parameter as the largest spectral norm of the
/// scattered derivative block `s'(mu_i) Kbar^i` (restricted to free
/// ports), maximized over components.
pub fn bound_constants(
    k_full: &SparseSpdMatrix,
    full_model: &CondensedModel,
    topology: &SystemTopology,
    mu: &[f64],
    simp: &SimpParams,
    u_reduced_embedded: &[f64],
) -> Result<BoundConstants> {
    let (lam_min, lam_max) = extreme_eigenvalues(k_full)?;
    if !(lam_min > 0.0) {
        return Err(CwError::NotSpd(format!(
            "smallest eigenvalue {lam_min} is not positive"
        )));
    }
    let mut kappa: f64 = 0.0;
    for (i, inst) in topology.instances.iter().enumerate() {
        let ls = full_model.local_schur(inst.reference);
        // restriction to free ports of this instance
        let mut keep: Vec<usize> = Vec::new();
        for j in 0..ls.port_sizes.len() {
            if full_model.block_offset(i, j).is_some() {
                keep.extend(ls.port_range(j));
            }
        }
        if keep.is_empty() {
            continue;
        }
        let sub = nalgebra::DMatrix::<f64>::from_fn(keep.len(), keep.len(), |a, b| {
            ls.kbar[(keep[a], keep[b])]
        });
        let top = nalgebra::SymmetricEigen::new(sub)
            .eigenvalues
            .iter()
            .fold(0.0f64, |m, &v| m.max(v.abs()));
        kappa = kappa.max(simp.derivative(mu[i]) * top);
    }
    let nu = u_reduced_embedded.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(BoundConstants {
        sigma_min: lam_min,
        c1: lam_min.sqrt(),
        c2: lam_max.sqrt(),
        kappa,
        nu,
    })
}
