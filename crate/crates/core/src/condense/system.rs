use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{CwError, Result};
use crate::fem::{SparseSpdMatrix, SpdFactor};
use crate::model::{PortDofMap, SystemTopology};

use super::component_op::{ComponentOperator, LiftKind, LocalSchur, SkeletonBasis};

/// Assembled condensed operator for one topology and one choice of port
/// bases. The sparsity pattern and per-nonzero component contributions are
/// precomputed once; assembling for a new parameter vector is a scaling
/// pass over the stored values.
pub struct CondensedModel {
    n_dofs: usize,
    dof_map: PortDofMap,
    num_instances: usize,
    refs: Vec<usize>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    /// per-nonzero contributions: offsets into `contrib`
    nz_off: Vec<u32>,
    contrib: Vec<(u32, f64)>,
    f_base: Vec<f64>,
    /// per instance, per local port: condensed block offset (None when the
    /// port carries a Dirichlet condition)
    gather: Vec<Vec<Option<usize>>>,
    port_sizes: Vec<Vec<usize>>,
    schurs: Vec<LocalSchur>,
    skeletons: Vec<SkeletonBasis>,
}

impl CondensedModel {
    /// Assemble the model structure from per-reference port bases.
    ///
    /// `bases[r][j]` is the orthonormal trace basis of port j on reference
    /// component r. Paired ports must carry identical basis dimensions.
    pub fn build(
        topology: &SystemTopology,
        ops: &[ComponentOperator],
        bases: &[Vec<DMatrix<f64>>],
        kind: LiftKind,
    ) -> Result<Self> {
        let schurs: Vec<LocalSchur> = match kind {
            LiftKind::Elasticity => ops
                .iter()
                .zip(bases)
                .map(|(op, b)| op.reduced_schur(b))
                .collect::<Result<_>>()?,
            LiftKind::Laplacian => ops
                .iter()
                .zip(bases)
                .map(|(op, b)| {
                    let skel = op.lift_basis(b, LiftKind::Laplacian)?;
                    op.local_schur(&skel)
                })
                .collect::<Result<_>>()?,
        };
        let skeletons: Vec<SkeletonBasis> = ops
            .iter()
            .zip(bases)
            .map(|(op, b)| op.lift_basis(b, LiftKind::Elasticity))
            .collect::<Result<_>>()?;

        // consistent per-global-port sizes
        let mut sizes = vec![usize::MAX; topology.num_global_ports()];
        for (g, gp) in topology.global_ports.iter().enumerate() {
            for m in &gp.members {
                let r = topology.instances[m.instance].reference;
                let s = bases[r][m.port].ncols();
                if sizes[g] == usize::MAX {
                    sizes[g] = s;
                } else if sizes[g] != s {
                    return Err(CwError::Topology(format!(
                        "global port {g} pairs bases of sizes {} and {s}",
                        sizes[g]
                    )));
                }
            }
        }
        let dof_map = PortDofMap::new(topology, &sizes);
        let n_dofs = dof_map.total_dofs();

        let refs: Vec<usize> = topology.instances.iter().map(|i| i.reference).collect();
        let gather: Vec<Vec<Option<usize>>> = (0..topology.num_instances())
            .map(|i| {
                (0..ops[refs[i]].num_ports())
                    .map(|j| dof_map.port_offset(topology.global_port(i, j)))
                    .collect()
            })
            .collect();
        let port_sizes: Vec<Vec<usize>> = (0..topology.num_instances())
            .map(|i| {
                (0..ops[refs[i]].num_ports())
                    .map(|j| dof_map.port_size(topology.global_port(i, j)))
                    .collect()
            })
            .collect();

        // tagged triplets
        let mut tagged: Vec<(u32, u32, u32, f64)> = Vec::new();
        for i in 0..topology.num_instances() {
            let ls = &schurs[refs[i]];
            let np = ls.port_sizes.len();
            for j in 0..np {
                let Some(oj) = gather[i][j] else { continue };
                let rj = ls.port_range(j);
                for jp in 0..np {
                    let Some(ojp) = gather[i][jp] else { continue };
                    let rjp = ls.port_range(jp);
                    for (a, ra) in rj.clone().enumerate() {
                        for (b, rb) in rjp.clone().enumerate() {
                            let v = ls.kbar[(ra, rb)];
                            tagged.push(((oj + a) as u32, (ojp + b) as u32, i as u32, v));
                        }
                    }
                }
            }
        }
        tagged.sort_by_key(|&(r, c, _, _)| (c, r));
        let mut col_ptr = vec![0usize; n_dofs + 1];
        let mut row_idx = Vec::new();
        let mut nz_off = vec![0u32];
        let mut contrib = Vec::new();
        let mut it = tagged.iter().peekable();
        while let Some(&(r, c, comp, v)) = it.next() {
            row_idx.push(r as usize);
            contrib.push((comp, v));
            while let Some(&&(r2, c2, comp2, v2)) = it.peek() {
                if r2 == r && c2 == c {
                    contrib.push((comp2, v2));
                    it.next();
                } else {
                    break;
                }
            }
            nz_off.push(contrib.len() as u32);
            col_ptr[c as usize + 1] += 1;
        }
        for c in 0..n_dofs {
            col_ptr[c + 1] += col_ptr[c];
        }

        // parameter-independent load vector from port tractions
        let mut f_base = vec![0.0; n_dofs];
        for (g, gp) in topology.global_ports.iter().enumerate() {
            let Some(t) = gp.traction else { continue };
            let Some(off) = dof_map.port_offset(g) else {
                return Err(CwError::Topology(format!(
                    "global port {g} carries both a traction and a Dirichlet condition"
                )));
            };
            let m = gp.members[0];
            let r = refs[m.instance];
            let load = ops[r].traction_load(m.port, &bases[r][m.port], t);
            for (k, v) in load.iter().enumerate() {
                f_base[off + k] += v;
            }
        }

        Ok(Self {
            n_dofs,
            dof_map,
            num_instances: topology.num_instances(),
            refs,
            col_ptr,
            row_idx,
            nz_off,
            contrib,
            f_base,
            gather,
            port_sizes,
            schurs,
            skeletons,
        })
    }

    pub fn num_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn dof_map(&self) -> &PortDofMap {
        &self.dof_map
    }

    pub fn local_schur(&self, reference: usize) -> &LocalSchur {
        &self.schurs[reference]
    }

    pub fn skeleton(&self, reference: usize) -> &SkeletonBasis {
        &self.skeletons[reference]
    }

    pub fn load_vector(&self) -> &[f64] {
        &self.f_base
    }

    /// Condensed block offset of local port `j` on instance `i`.
    pub fn block_offset(&self, i: usize, j: usize) -> Option<usize> {
        self.gather[i][j]
    }

    /// Assemble `K(mu) = sum_i scale_i * Kbar^(R(i))` and the load vector.
    pub fn assemble(&self, topology: &SystemTopology, scale: &[f64]) -> Result<CondensedSystem> {
        self.assemble_imposed(topology, scale, &BTreeMap::new())
    }

    /// Assemble with coefficient values imposed on Dirichlet ports
    /// (`imposed`: global port -> coefficients in that port's basis).
    pub fn assemble_imposed(
        &self,
        topology: &SystemTopology,
        scale: &[f64],
        imposed: &BTreeMap<usize, Vec<f64>>,
    ) -> Result<CondensedSystem> {
        if scale.len() != self.num_instances {
            return Err(CwError::Contract(format!(
                "expected {} scale factors, got {}",
                self.num_instances,
                scale.len()
            )));
        }
        let mut values = vec![0.0; self.row_idx.len()];
        for (nz, v) in values.iter_mut().enumerate() {
            let lo = self.nz_off[nz] as usize;
            let hi = self.nz_off[nz + 1] as usize;
            let mut acc = 0.0;
            for &(comp, val) in &self.contrib[lo..hi] {
                acc += scale[comp as usize] * val;
            }
            *v = acc;
        }
        let k = SparseSpdMatrix::from_csc_parts(
            self.n_dofs,
            self.col_ptr.clone(),
            self.row_idx.clone(),
            values,
        )?;

        let mut f = self.f_base.clone();
        // right-hand side corrections from imposed Dirichlet coefficients
        if !imposed.is_empty() {
            for i in 0..self.num_instances {
                let ls = &self.schurs[self.refs[i]];
                let np = ls.port_sizes.len();
                for j in 0..np {
                    let Some(oj) = self.gather[i][j] else { continue };
                    let rj = ls.port_range(j);
                    for jp in 0..np {
                        if self.gather[i][jp].is_some() {
                            continue;
                        }
                        let g = topology.global_port(i, jp);
                        let Some(gvals) = imposed.get(&g) else { continue };
                        let rjp = ls.port_range(jp);
                        for (a, ra) in rj.clone().enumerate() {
                            let mut acc = 0.0;
                            for (b, rb) in rjp.clone().enumerate() {
                                acc += ls.kbar[(ra, rb)] * gvals[b];
                            }
                            f[oj + a] -= scale[i] * acc;
                        }
                    }
                }
            }
        }
        Ok(CondensedSystem {
            k,
            f,
            u: None,
            factor: None,
        })
    }

    /// Coupling of a component bubble with every interface function:
    /// entries `a(b, Phi_(p,k); mu_i)` scattered into a condensed-length
    /// vector. Identically zero for elasticity-lifted skeletons.
    pub fn bubble_coupling(
        &self,
        ops: &[ComponentOperator],
        instance: usize,
        scale: f64,
        bubble: &[f64],
    ) -> Vec<f64> {
        let r = self.refs[instance];
        let op = &ops[r];
        let a_b = op.operator().matvec(bubble);
        let skel = &self.skeletons[r];
        let mut out = vec![0.0; self.n_dofs];
        for (j, psi) in skel.per_port.iter().enumerate() {
            let Some(off) = self.gather[instance][j] else { continue };
            for k in 0..psi.ncols() {
                let dot: f64 = (0..psi.nrows()).map(|row| psi[(row, k)] * a_b[row]).sum();
                out[off + k] += scale * dot;
            }
        }
        out
    }

    /// Per-component displacement fields from the condensed solution.
    pub fn reconstruct(
        &self,
        topology: &SystemTopology,
        u: &[f64],
        bubbles: Option<&[Option<Vec<f64>>]>,
    ) -> Vec<Vec<f64>> {
        self.reconstruct_imposed(topology, u, bubbles, &BTreeMap::new())
    }

    /// Reconstruction including imposed Dirichlet port coefficients.
    pub fn reconstruct_imposed(
        &self,
        topology: &SystemTopology,
        u: &[f64],
        bubbles: Option<&[Option<Vec<f64>>]>,
        imposed: &BTreeMap<usize, Vec<f64>>,
    ) -> Vec<Vec<f64>> {
        (0..self.num_instances)
            .map(|i| {
                let skel = &self.skeletons[self.refs[i]];
                let n = skel.per_port[0].nrows();
                let mut field = vec![0.0; n];
                for (j, psi) in skel.per_port.iter().enumerate() {
                    let coeffs: Option<Vec<f64>> = match self.gather[i][j] {
                        Some(off) => {
                            let m = self.port_sizes[i][j];
                            Some(u[off..off + m].to_vec())
                        }
                        None => {
                            let g = topology.global_port(i, j);
                            imposed.get(&g).cloned()
                        }
                    };
                    if let Some(c) = coeffs {
                        for (k, &ck) in c.iter().enumerate() {
                            if ck != 0.0 {
                                for row in 0..n {
                                    field[row] += psi[(row, k)] * ck;
                                }
                            }
                        }
                    }
                }
                if let Some(bs) = bubbles {
                    if let Some(b) = &bs[i] {
                        for (row, v) in b.iter().enumerate() {
                            field[row] += v;
                        }
                    }
                }
                field
            })
            .collect()
    }

    /// Gather the condensed coefficients of instance `i` (zeros on
    /// Dirichlet ports), ordered by local port.
    pub fn gather_instance(&self, u: &[f64], i: usize) -> Vec<f64> {
        let mut out = Vec::new();
        for (j, &off) in self.gather[i].iter().enumerate() {
            let m = self.port_sizes[i][j];
            match off {
                Some(o) => out.extend_from_slice(&u[o..o + m]),
                None => out.extend(std::iter::repeat(0.0).take(m)),
            }
        }
        out
    }
}

/// Assembled condensed system `K(mu) U = F` with its cached factorization.
pub struct CondensedSystem {
    pub k: SparseSpdMatrix,
    pub f: Vec<f64>,
    u: Option<Vec<f64>>,
    factor: Option<SpdFactor>,
}

impl CondensedSystem {
    /// Solve (or re-use the cached factorization) and return the solution.
    pub fn solve(&mut self) -> Result<&[f64]> {
        if self.u.is_none() {
            let factor = self
                .k
                .factorize()
                .map_err(|e| CwError::NotSpd(format!("condensed operator: {e}")))?;
            let u = factor.solve(&self.f);
            self.factor = Some(factor);
            self.u = Some(u);
        }
        Ok(self.u.as_deref().unwrap())
    }

    pub fn solution(&self) -> Result<&[f64]> {
        self.u
            .as_deref()
            .ok_or_else(|| CwError::State("system has not been solved".into()))
    }

    pub fn factor(&self) -> Option<&SpdFactor> {
        self.factor.as_ref()
    }

    /// Work of external loads `F^T U` (bubble terms enter separately).
    pub fn load_work(&self) -> Result<f64> {
        let u = self.solution()?;
        Ok(self.f.iter().zip(u).map(|(a, b)| a * b).sum())
    }
}
