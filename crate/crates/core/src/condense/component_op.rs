use std::ops::Range;
use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::error::{CwError, Result};
use crate::fem::{
    assemble, assemble_laplace, assemble_mass, lumped_port_weights, DirichletReduction,
    SparseSpdMatrix, SpdFactor,
};
use crate::model::ReferenceComponent;

/// How port traces are extended into the component interior.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiftKind {
    /// Extension harmonic with respect to the elasticity operator itself;
    /// interface bubbles vanish identically and the lifted basis is
    /// parameter independent.
    Elasticity,
    /// Component-wise Laplace extension; requires parameter-independent
    /// interface bubble corrections. Kept for the equivalence check.
    Laplacian,
}

/// Lifted port basis functions stored as full-component FE coefficient
/// vectors, one dense column block per port.
#[derive(Debug, Clone)]
pub struct SkeletonBasis {
    pub kind: LiftKind,
    /// per port: num_dofs x m matrix; column k is the lifted basis vector
    pub per_port: Vec<DMatrix<f64>>,
}

impl SkeletonBasis {
    pub fn port_sizes(&self) -> Vec<usize> {
        self.per_port.iter().map(|m| m.ncols()).collect()
    }

    pub fn total_size(&self) -> usize {
        self.per_port.iter().map(|m| m.ncols()).sum()
    }
}

/// Parameter-independent condensed stiffness of one reference component,
/// evaluated at unit scaling.
#[derive(Debug, Clone)]
pub struct LocalSchur {
    pub kbar: DMatrix<f64>,
    pub port_sizes: Vec<usize>,
}

impl LocalSchur {
    /// Column range of port `j` inside `kbar`.
    pub fn port_range(&self, j: usize) -> Range<usize> {
        let start: usize = self.port_sizes[..j].iter().sum();
        start..start + self.port_sizes[j]
    }
}

struct LaplaceData {
    /// interior lift of the nodal port traces under the Laplace operator
    lift: DMatrix<f64>,
}

/// Offline data for one reference component: unit-scale operator, cached
/// interior factorization, nodal interior lift, and the dense port Schur
/// complement.
pub struct ComponentOperator {
    pub reference: ReferenceComponent,
    abar: SparseSpdMatrix,
    port_dofs: Vec<Vec<usize>>,
    port_ranges: Vec<Range<usize>>,
    all_port_dofs: Vec<usize>,
    interior: DirichletReduction,
    interior_factor: OnceLock<SpdFactor>,
    /// Z = Kbb^{-1} K_b,ports (interior dofs x port dofs)
    lift: DMatrix<f64>,
    nodal_schur: DMatrix<f64>,
    /// consistent 1D integration weights per port node
    port_weights: Vec<Vec<f64>>,
    mass: OnceLock<SparseSpdMatrix>,
    laplace: OnceLock<LaplaceData>,
}

impl ComponentOperator {
    pub fn new(reference: ReferenceComponent) -> Result<Self> {
        let scale = vec![1.0; reference.mesh.num_elements()];
        let abar = assemble(
            &reference.mesh,
            &reference.material,
            reference.thickness,
            &scale,
        )?;
        let port_dofs: Vec<Vec<usize>> = reference.ports.iter().map(|p| p.dofs()).collect();
        let mut port_ranges = Vec::with_capacity(port_dofs.len());
        let mut all_port_dofs = Vec::new();
        for dofs in &port_dofs {
            let start = all_port_dofs.len();
            all_port_dofs.extend_from_slice(dofs);
            port_ranges.push(start..all_port_dofs.len());
        }
        if all_port_dofs.is_empty() {
            return Err(CwError::Topology(format!(
                "component '{}' has no port dofs",
                reference.name
            )));
        }
        let fixed: Vec<(usize, f64)> = all_port_dofs.iter().map(|&d| (d, 0.0)).collect();
        let interior = DirichletReduction::new(reference.mesh.num_dofs(), &fixed)?;
        let (factor, z, s) = Self::schur_pieces(&abar, &interior, &all_port_dofs)?;
        let interior_factor = OnceLock::new();
        let _ = interior_factor.set(factor);
        let port_weights = reference
            .ports
            .iter()
            .map(|p| lumped_port_weights(&p.coords(&reference.mesh)))
            .collect();
        Ok(Self {
            reference,
            abar,
            port_dofs,
            port_ranges,
            all_port_dofs,
            interior,
            interior_factor,
            lift: z,
            nodal_schur: s,
            port_weights,
            mass: OnceLock::new(),
            laplace: OnceLock::new(),
        })
    }

    /// Rebuild from persisted lifting data, skipping the interior solves.
    /// The interior factorization is recomputed lazily if a bubble
    /// operation needs it.
    pub fn from_parts(
        reference: ReferenceComponent,
        lift: DMatrix<f64>,
        nodal_schur: DMatrix<f64>,
    ) -> Result<Self> {
        let scale = vec![1.0; reference.mesh.num_elements()];
        let abar = assemble(
            &reference.mesh,
            &reference.material,
            reference.thickness,
            &scale,
        )?;
        let port_dofs: Vec<Vec<usize>> = reference.ports.iter().map(|p| p.dofs()).collect();
        let mut port_ranges = Vec::with_capacity(port_dofs.len());
        let mut all_port_dofs = Vec::new();
        for dofs in &port_dofs {
            let start = all_port_dofs.len();
            all_port_dofs.extend_from_slice(dofs);
            port_ranges.push(start..all_port_dofs.len());
        }
        let fixed: Vec<(usize, f64)> = all_port_dofs.iter().map(|&d| (d, 0.0)).collect();
        let interior = DirichletReduction::new(reference.mesh.num_dofs(), &fixed)?;
        if lift.nrows() != interior.reduced_dim()
            || lift.ncols() != all_port_dofs.len()
            || nodal_schur.nrows() != all_port_dofs.len()
            || nodal_schur.ncols() != all_port_dofs.len()
        {
            return Err(CwError::Format(format!(
                "stored lifting data does not match component '{}'",
                reference.name
            )));
        }
        let port_weights = reference
            .ports
            .iter()
            .map(|p| lumped_port_weights(&p.coords(&reference.mesh)))
            .collect();
        Ok(Self {
            reference,
            abar,
            port_dofs,
            port_ranges,
            all_port_dofs,
            interior,
            interior_factor: OnceLock::new(),
            lift,
            nodal_schur,
            port_weights,
            mass: OnceLock::new(),
            laplace: OnceLock::new(),
        })
    }

    fn interior_factor(&self) -> Result<&SpdFactor> {
        if self.interior_factor.get().is_none() {
            let np = self.all_port_dofs.len();
            let mut port_index = vec![false; self.abar.dim()];
            for &d in &self.all_port_dofs {
                port_index[d] = true;
            }
            let _ = np;
            let mut kbb_triplets = Vec::new();
            for (r, c, v) in self.abar.entries() {
                if let (Some(ri), Some(ci)) =
                    (self.interior.reduced_index(r), self.interior.reduced_index(c))
                {
                    kbb_triplets.push((ri, ci, v));
                }
            }
            let kbb = SparseSpdMatrix::from_triplets(self.interior.reduced_dim(), &kbb_triplets)?;
            let factor = kbb
                .factorize()
                .map_err(|e| CwError::Lifting(format!("interior operator not SPD: {e}")))?;
            let _ = self.interior_factor.set(factor);
        }
        Ok(self.interior_factor.get().unwrap())
    }

    /// Persisted lifting data.
    pub fn lift_matrix(&self) -> &DMatrix<f64> {
        &self.lift
    }

    fn schur_pieces(
        op: &SparseSpdMatrix,
        interior: &DirichletReduction,
        all_port_dofs: &[usize],
    ) -> Result<(SpdFactor, DMatrix<f64>, DMatrix<f64>)> {
        let np = all_port_dofs.len();
        let nb = interior.reduced_dim();
        let mut port_index = vec![usize::MAX; op.dim()];
        for (k, &d) in all_port_dofs.iter().enumerate() {
            port_index[d] = k;
        }
        // split the operator into interior-interior, interior-port, port-port
        let mut kbb_triplets = Vec::new();
        let mut kbp = DMatrix::<f64>::zeros(nb, np);
        let mut kpp = DMatrix::<f64>::zeros(np, np);
        for (r, c, v) in op.entries() {
            match (interior.reduced_index(r), interior.reduced_index(c)) {
                (Some(ri), Some(ci)) => kbb_triplets.push((ri, ci, v)),
                (Some(ri), None) => kbp[(ri, port_index[c])] += v,
                (None, Some(_)) => {}
                (None, None) => kpp[(port_index[r], port_index[c])] += v,
            }
        }
        let kbb = SparseSpdMatrix::from_triplets(nb, &kbb_triplets)?;
        let factor = kbb
            .factorize()
            .map_err(|e| CwError::Lifting(format!("interior operator not SPD: {e}")))?;
        let z = factor.solve_mat(&kbp);
        let mut s = kpp - kbp.transpose() * &z;
        s = (&s + s.transpose()) * 0.5;
        Ok((factor, z, s))
    }

    pub fn num_dofs(&self) -> usize {
        self.reference.mesh.num_dofs()
    }

    pub fn num_ports(&self) -> usize {
        self.port_dofs.len()
    }

    pub fn port_dofs(&self, j: usize) -> &[usize] {
        &self.port_dofs[j]
    }

    /// Dense port-nodal Schur complement (unit scale).
    pub fn nodal_schur(&self) -> &DMatrix<f64> {
        &self.nodal_schur
    }

    pub fn operator(&self) -> &SparseSpdMatrix {
        &self.abar
    }

    /// Consistent 1D weights of port `j` (integrates nodal traces).
    pub fn port_weights(&self, j: usize) -> &[f64] {
        &self.port_weights[j]
    }

    /// Consistent mass matrix for L2 norms, assembled on first use.
    pub fn mass(&self) -> &SparseSpdMatrix {
        self.mass.get_or_init(|| {
            assemble_mass(&self.reference.mesh, self.reference.thickness)
                .expect("mesh validated at construction")
        })
    }

    fn laplace_data(&self) -> Result<&LaplaceData> {
        if self.laplace.get().is_none() {
            let lap = assemble_laplace(&self.reference.mesh)?;
            let np = self.all_port_dofs.len();
            let nb = self.interior.reduced_dim();
            let mut port_index = vec![usize::MAX; lap.dim()];
            for (k, &d) in self.all_port_dofs.iter().enumerate() {
                port_index[d] = k;
            }
            let mut lbb_triplets = Vec::new();
            let mut lbp = DMatrix::<f64>::zeros(nb, np);
            for (r, c, v) in lap.entries() {
                match (self.interior.reduced_index(r), self.interior.reduced_index(c)) {
                    (Some(ri), Some(ci)) => lbb_triplets.push((ri, ci, v)),
                    (Some(ri), None) => lbp[(ri, port_index[c])] += v,
                    _ => {}
                }
            }
            let lbb = SparseSpdMatrix::from_triplets(nb, &lbb_triplets)?;
            let factor = lbb
                .factorize()
                .map_err(|e| CwError::Lifting(format!("interior Laplacian not SPD: {e}")))?;
            let lift = factor.solve_mat(&lbp);
            let _ = self.laplace.set(LaplaceData { lift });
        }
        Ok(self.laplace.get().unwrap())
    }

    /// Embed per-port trace coefficients and an interior block into a full
    /// coefficient vector layout.
    fn embed(&self, port: usize, trace: &DMatrix<f64>, interior_cols: &DMatrix<f64>) -> DMatrix<f64> {
        let mut full = DMatrix::<f64>::zeros(self.num_dofs(), trace.ncols());
        for (row_local, &dof) in self.port_dofs[port].iter().enumerate() {
            for c in 0..trace.ncols() {
                full[(dof, c)] = trace[(row_local, c)];
            }
        }
        for (bi, &dof) in self.interior.keep().iter().enumerate() {
            for c in 0..trace.ncols() {
                full[(dof, c)] = interior_cols[(bi, c)];
            }
        }
        full
    }

    /// Lift per-port orthonormal traces into the component interior.
    ///
    /// One interior solve per basis function, with the trace imposed as
    /// Dirichlet data on its own port and zero on the others; the
    /// elasticity kind reuses the cached nodal lift.
    pub fn lift_basis(&self, port_bases: &[DMatrix<f64>], kind: LiftKind) -> Result<SkeletonBasis> {
        if port_bases.len() != self.num_ports() {
            return Err(CwError::Contract(format!(
                "expected {} port bases, got {}",
                self.num_ports(),
                port_bases.len()
            )));
        }
        let mut per_port = Vec::with_capacity(port_bases.len());
        for (j, x) in port_bases.iter().enumerate() {
            if x.nrows() != self.port_dofs[j].len() {
                return Err(CwError::Contract(format!(
                    "port {j} basis has {} rows, expected {}",
                    x.nrows(),
                    self.port_dofs[j].len()
                )));
            }
            let lift = match kind {
                LiftKind::Elasticity => &self.lift,
                LiftKind::Laplacian => &self.laplace_data()?.lift,
            };
            let z_j = lift.columns(self.port_ranges[j].start, self.port_ranges[j].len());
            let interior = -(z_j * x);
            per_port.push(self.embed(j, x, &interior));
        }
        Ok(SkeletonBasis { kind, per_port })
    }

    /// Bubble correction of a lifted function: zero for elasticity lifting
    /// (no solve is performed), a single parameter-independent interior
    /// solve for the Laplacian kind.
    pub fn interface_bubble(&self, psi: &DMatrix<f64>, kind: LiftKind) -> Result<DMatrix<f64>> {
        match kind {
            LiftKind::Elasticity => Ok(DMatrix::zeros(self.num_dofs(), psi.ncols())),
            LiftKind::Laplacian => {
                // a(b, v) = -a(psi, v) over the bubble space
                let mut rhs = DMatrix::<f64>::zeros(self.interior.reduced_dim(), psi.ncols());
                for c in 0..psi.ncols() {
                    let col: Vec<f64> = (0..self.num_dofs()).map(|r| psi[(r, c)]).collect();
                    let a_psi = self.abar.matvec(&col);
                    for (bi, &dof) in self.interior.keep().iter().enumerate() {
                        rhs[(bi, c)] = -a_psi[dof];
                    }
                }
                let sol = self.interior_factor()?.solve_mat(&rhs);
                let mut full = DMatrix::<f64>::zeros(self.num_dofs(), psi.ncols());
                for (bi, &dof) in self.interior.keep().iter().enumerate() {
                    for c in 0..psi.ncols() {
                        full[(dof, c)] = sol[(bi, c)];
                    }
                }
                Ok(full)
            }
        }
    }

    /// Bubble response to a component body load (zero trace on all ports):
    /// solves `s(mu) * abar_bb b = f_b`.
    pub fn forcing_bubble(&self, scale: f64, load: &[f64]) -> Result<Vec<f64>> {
        if load.len() != self.num_dofs() {
            return Err(CwError::Contract(format!(
                "load has {} entries, expected {}",
                load.len(),
                self.num_dofs()
            )));
        }
        for &d in &self.all_port_dofs {
            if load[d] != 0.0 {
                return Err(CwError::Contract(
                    "body load must vanish on port dofs; port loads belong to the condensed force"
                        .into(),
                ));
            }
        }
        if !(scale > 0.0) {
            return Err(CwError::Contract(format!("scale must be positive, got {scale}")));
        }
        let fb: Vec<f64> = self.interior.keep().iter().map(|&d| load[d]).collect();
        let ub = self.interior_factor()?.solve(&fb);
        let mut full = vec![0.0; self.num_dofs()];
        for (bi, &dof) in self.interior.keep().iter().enumerate() {
            full[dof] = ub[bi] / scale;
        }
        Ok(full)
    }

    /// Energy products of interface functions: `Kbar[(j,k),(j',k')]
    /// = abar(phi_jk, phi_j'k')` where `phi = psi + interface bubble`.
    pub fn local_schur(&self, skeleton: &SkeletonBasis) -> Result<LocalSchur> {
        let port_sizes = skeleton.port_sizes();
        let total = skeleton.total_size();
        // stack phi columns
        let mut phi = DMatrix::<f64>::zeros(self.num_dofs(), total);
        let mut col = 0;
        for psi in &skeleton.per_port {
            let bubble = self.interface_bubble(psi, skeleton.kind)?;
            for c in 0..psi.ncols() {
                for r in 0..self.num_dofs() {
                    phi[(r, col)] = psi[(r, c)] + bubble[(r, c)];
                }
                col += 1;
            }
        }
        // Kbar = Phi^T (A Phi)
        let mut a_phi = DMatrix::<f64>::zeros(self.num_dofs(), total);
        for c in 0..total {
            let colv: Vec<f64> = (0..self.num_dofs()).map(|r| phi[(r, c)]).collect();
            let av = self.abar.matvec(&colv);
            for r in 0..self.num_dofs() {
                a_phi[(r, c)] = av[r];
            }
        }
        let mut kbar = phi.transpose() * a_phi;
        kbar = (&kbar + kbar.transpose()) * 0.5;
        Ok(LocalSchur { kbar, port_sizes })
    }

    /// Fast parameter-independent condensed block via the cached nodal
    /// Schur complement: `Kbar = X^T S X` with `X = blockdiag(port bases)`.
    /// Identical to `local_schur` of the elasticity-lifted skeleton.
    pub fn reduced_schur(&self, port_bases: &[DMatrix<f64>]) -> Result<LocalSchur> {
        if port_bases.len() != self.num_ports() {
            return Err(CwError::Contract(format!(
                "expected {} port bases, got {}",
                self.num_ports(),
                port_bases.len()
            )));
        }
        let port_sizes: Vec<usize> = port_bases.iter().map(|x| x.ncols()).collect();
        let np = self.all_port_dofs.len();
        let total: usize = port_sizes.iter().sum();
        let mut x = DMatrix::<f64>::zeros(np, total);
        let mut col = 0;
        for (j, xb) in port_bases.iter().enumerate() {
            if xb.nrows() != self.port_dofs[j].len() {
                return Err(CwError::Contract(format!(
                    "port {j} basis has {} rows, expected {}",
                    xb.nrows(),
                    self.port_dofs[j].len()
                )));
            }
            let rng = self.port_ranges[j].clone();
            for c in 0..xb.ncols() {
                for r in 0..xb.nrows() {
                    x[(rng.start + r, col + c)] = xb[(r, c)];
                }
            }
            col += xb.ncols();
        }
        let mut kbar = x.transpose() * &self.nodal_schur * x;
        kbar = (&kbar + kbar.transpose()) * 0.5;
        Ok(LocalSchur { kbar, port_sizes })
    }

    /// Condensed load entries of a constant traction on port `j`:
    /// `F_k = integral of t . chi_k` over the port.
    pub fn traction_load(&self, j: usize, basis: &DMatrix<f64>, t: [f64; 2]) -> Vec<f64> {
        let w = &self.port_weights[j];
        let mut nodal = vec![0.0; 2 * w.len()];
        for (i, &wi) in w.iter().enumerate() {
            nodal[2 * i] = wi * t[0];
            nodal[2 * i + 1] = wi * t[1];
        }
        (0..basis.ncols())
            .map(|k| (0..nodal.len()).map(|r| basis[(r, k)] * nodal[r]).sum())
            .collect()
    }
}
