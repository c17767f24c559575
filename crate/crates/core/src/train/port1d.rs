//! One-dimensional finite elements along a port: the boundary-vanishing
//! diffusion mode and the generalized Legendre eigenmodes used to drive
//! pairwise training.

use nalgebra::{DMatrix, DVector};

use crate::error::{CwError, Result};

/// Scalar eigenmodes of one port discretization.
#[derive(Debug, Clone)]
pub struct PortEigenbasis {
    /// boundary-vanishing diffusion weight at the port nodes
    pub vanishing: Vec<f64>,
    /// columns are mass-orthonormal modes, eigenvalues ascending
    pub modes: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
}

impl PortEigenbasis {
    pub fn num_modes(&self) -> usize {
        self.modes.ncols()
    }
}

fn segment_lengths(coords: &[[f64; 2]]) -> Vec<f64> {
    coords
        .windows(2)
        .map(|w| {
            let dx = w[1][0] - w[0][0];
            let dy = w[1][1] - w[0][1];
            (dx * dx + dy * dy).sqrt()
        })
        .collect()
}

/// Solve the port Poisson problem `-s'' = 1`, `s = 0` at both endpoints,
/// on the piecewise-linear port space.
pub fn vanishing_mode(coords: &[[f64; 2]]) -> Result<Vec<f64>> {
    let n = coords.len();
    if n < 3 {
        return Err(CwError::Contract(format!(
            "vanishing mode needs at least 3 port nodes, got {n}"
        )));
    }
    let h = segment_lengths(coords);
    let ni = n - 2;
    let mut a = DMatrix::<f64>::zeros(ni, ni);
    let mut rhs = DVector::<f64>::zeros(ni);
    for i in 0..ni {
        a[(i, i)] = 1.0 / h[i] + 1.0 / h[i + 1];
        if i + 1 < ni {
            a[(i, i + 1)] = -1.0 / h[i + 1];
            a[(i + 1, i)] = -1.0 / h[i + 1];
        }
        rhs[i] = (h[i] + h[i + 1]) / 2.0;
    }
    let sol = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| CwError::Numeric("singular port Poisson system".into()))?;
    let mut s = vec![0.0; n];
    for i in 0..ni {
        s[i + 1] = sol[i];
    }
    Ok(s)
}

/// Generalized symmetric eigensolve of the diffusion form weighted by the
/// vanishing mode against the port mass matrix. The weight vanishes at the
/// endpoints, so no boundary conditions are imposed and the constant mode
/// appears with eigenvalue zero.
pub fn legendre_modes(coords: &[[f64; 2]], vanishing: &[f64]) -> Result<PortEigenbasis> {
    let n = coords.len();
    if vanishing.len() != n {
        return Err(CwError::Contract("vanishing mode length mismatch".into()));
    }
    let h = segment_lengths(coords);
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut m = DMatrix::<f64>::zeros(n, n);
    for e in 0..n - 1 {
        let w = (vanishing[e] + vanishing[e + 1]) / 2.0;
        let k = w / h[e];
        a[(e, e)] += k;
        a[(e + 1, e + 1)] += k;
        a[(e, e + 1)] -= k;
        a[(e + 1, e)] -= k;
        m[(e, e)] += h[e] / 3.0;
        m[(e + 1, e + 1)] += h[e] / 3.0;
        m[(e, e + 1)] += h[e] / 6.0;
        m[(e + 1, e)] += h[e] / 6.0;
    }
    // reduce A x = lambda M x with M = L L^T
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| CwError::Numeric("port mass matrix not SPD".into()))?;
    let l = chol.l();
    let linv_a = l.clone().solve_lower_triangular(&a).ok_or_else(|| {
        CwError::Numeric("triangular solve failed in port eigenproblem".into())
    })?;
    let c = l
        .solve_lower_triangular(&linv_a.transpose())
        .ok_or_else(|| CwError::Numeric("triangular solve failed in port eigenproblem".into()))?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let mut modes = DMatrix::<f64>::zeros(n, n);
    let mut eigenvalues = Vec::with_capacity(n);
    let lt = l.transpose();
    for (col, &idx) in order.iter().enumerate() {
        let y = eig.eigenvectors.column(idx).into_owned();
        let mut x = lt
            .clone()
            .solve_upper_triangular(&y)
            .ok_or_else(|| CwError::Numeric("back substitution failed".into()))?;
        // sign convention: first nodal value of meaningful size positive
        let lead = x.iter().find(|v| v.abs() > 1e-12 * x.amax()).copied().unwrap_or(1.0);
        if lead < 0.0 {
            x = -x;
        }
        modes.set_column(col, &x);
        eigenvalues.push(eig.eigenvalues[idx].max(0.0));
    }
    Ok(PortEigenbasis {
        vanishing: vanishing.to_vec(),
        modes,
        eigenvalues,
    })
}
