//! Conforming full-order model: the lattice meshed as one finite element
//! system, used as the reference for accuracy and timing comparisons.
//!
//! Component meshes are concatenated and nodes merged along paired ports
//! using the topology's connectivity, so no coordinate hashing is involved.

use nalgebra::SMatrix;

use crate::condense::ComponentOperator;
use crate::error::{CwError, Result};
use crate::fem::{apply_dirichlet, element_stiffness, lumped_port_weights, SparseSpdMatrix};
use crate::model::SystemTopology;

pub struct FomModel {
    num_nodes: usize,
    /// instance -> local node -> merged global node
    node_map: Vec<Vec<usize>>,
    dirichlet: Vec<(usize, f64)>,
    /// merged dofs of each global port, in canonical port order
    port_dofs: Vec<Vec<usize>>,
    f: Vec<f64>,
    /// element stiffness matrices per reference component
    ref_elem_ks: Vec<Vec<SMatrix<f64, 8, 8>>>,
}

impl FomModel {
    pub fn build(topology: &SystemTopology, ops: &[ComponentOperator]) -> Result<Self> {
        let n_inst = topology.num_instances();
        // preliminary ids and union-find over port-paired nodes
        let mut offsets = Vec::with_capacity(n_inst);
        let mut total = 0usize;
        for inst in &topology.instances {
            offsets.push(total);
            total += ops[inst.reference].reference.mesh.num_nodes();
        }
        let mut parent: Vec<usize> = (0..total).collect();
        fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for gp in &topology.global_ports {
            if gp.members.len() == 2 {
                let (a, b) = (gp.members[0], gp.members[1]);
                let ra = topology.instances[a.instance].reference;
                let rb = topology.instances[b.instance].reference;
                let pa = ops[ra].reference.ports[a.port].nodes();
                let pb = ops[rb].reference.ports[b.port].nodes();
                for (&na, &nb) in pa.iter().zip(pb) {
                    let fa = find(&mut parent, offsets[a.instance] + na);
                    let fb = find(&mut parent, offsets[b.instance] + nb);
                    if fa != fb {
                        parent[fa.max(fb)] = fa.min(fb);
                    }
                }
            }
        }
        // compress to dense ids
        let mut global_id = vec![usize::MAX; total];
        let mut num_nodes = 0usize;
        for x in 0..total {
            let root = find(&mut parent, x);
            if global_id[root] == usize::MAX {
                global_id[root] = num_nodes;
                num_nodes += 1;
            }
            global_id[x] = global_id[root];
        }
        let node_map: Vec<Vec<usize>> = (0..n_inst)
            .map(|i| {
                let n = ops[topology.instances[i].reference].reference.mesh.num_nodes();
                (0..n).map(|k| global_id[offsets[i] + k]).collect()
            })
            .collect();

        // loads and Dirichlet conditions on merged dofs
        let mut f = vec![0.0; 2 * num_nodes];
        let mut fixed = std::collections::BTreeSet::new();
        let mut port_dofs = Vec::with_capacity(topology.num_global_ports());
        for gp in &topology.global_ports {
            let m = gp.members[0];
            let r = topology.instances[m.instance].reference;
            let port = &ops[r].reference.ports[m.port];
            port_dofs.push(
                port.nodes()
                    .iter()
                    .flat_map(|&n| {
                        let g = node_map[m.instance][n];
                        [2 * g, 2 * g + 1]
                    })
                    .collect::<Vec<usize>>(),
            );
            if let Some(t) = gp.traction {
                let w = lumped_port_weights(&port.coords(&ops[r].reference.mesh));
                for (k, &n) in port.nodes().iter().enumerate() {
                    let g = node_map[m.instance][n];
                    f[2 * g] += w[k] * t[0];
                    f[2 * g + 1] += w[k] * t[1];
                }
            }
            if gp.dirichlet {
                for &n in port.nodes() {
                    let g = node_map[m.instance][n];
                    fixed.insert(2 * g);
                    fixed.insert(2 * g + 1);
                }
            }
        }
        let dirichlet: Vec<(usize, f64)> = fixed.into_iter().map(|d| (d, 0.0)).collect();

        // cache element stiffness per reference component
        let mut ref_elem_ks = Vec::with_capacity(ops.len());
        for op in ops {
            let rc = &op.reference;
            let mut ks = Vec::with_capacity(rc.mesh.num_elements());
            for e in 0..rc.mesh.num_elements() {
                ks.push(element_stiffness(
                    &rc.mesh.element_coords(e),
                    &rc.material,
                    rc.thickness,
                )?);
            }
            ref_elem_ks.push(ks);
        }

        Ok(Self {
            num_nodes,
            node_map,
            dirichlet,
            port_dofs,
            f,
            ref_elem_ks,
        })
    }

    pub fn num_dofs(&self) -> usize {
        2 * self.num_nodes
    }

    /// Merged dofs of a global port, canonical order, components interleaved.
    pub fn port_merged_dofs(&self, g: usize) -> &[usize] {
        &self.port_dofs[g]
    }

    /// Assemble and solve with per-instance stiffness scaling; returns the
    /// full merged nodal solution (Dirichlet dofs zero).
    pub fn solve(&self, topology: &SystemTopology, ops: &[ComponentOperator], scale: &[f64]) -> Result<Vec<f64>> {
        self.solve_imposed(topology, ops, scale, &std::collections::BTreeMap::new())
    }

    /// Solve with nodal displacement values imposed on Dirichlet ports.
    pub fn solve_imposed(
        &self,
        topology: &SystemTopology,
        ops: &[ComponentOperator],
        scale: &[f64],
        imposed: &std::collections::BTreeMap<usize, Vec<f64>>,
    ) -> Result<Vec<f64>> {
        if scale.len() != topology.num_instances() {
            return Err(CwError::Contract(format!(
                "expected {} scale factors, got {}",
                topology.num_instances(),
                scale.len()
            )));
        }
        let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
        for (i, inst) in topology.instances.iter().enumerate() {
            let r = inst.reference;
            let mesh = &ops[r].reference.mesh;
            let s = scale[i];
            for (e, ke) in self.ref_elem_ks[r].iter().enumerate() {
                let conn = mesh.elements()[e];
                for a in 0..4 {
                    let ga = self.node_map[i][conn[a]];
                    for b in 0..4 {
                        let gb = self.node_map[i][conn[b]];
                        for ca in 0..2 {
                            for cb in 0..2 {
                                triplets.push((
                                    2 * ga + ca,
                                    2 * gb + cb,
                                    s * ke[(2 * a + ca, 2 * b + cb)],
                                ));
                            }
                        }
                    }
                }
            }
        }
        let k = SparseSpdMatrix::from_triplets(self.num_dofs(), &triplets)?;
        let mut dirichlet = self.dirichlet.clone();
        for (&g, vals) in imposed {
            if !topology.global_ports[g].dirichlet {
                return Err(CwError::Contract(format!(
                    "port {g} is not a Dirichlet port"
                )));
            }
            for (k_local, &dof) in self.port_dofs[g].iter().enumerate() {
                if let Some(slot) = dirichlet.iter_mut().find(|(d, _)| *d == dof) {
                    slot.1 = vals[k_local];
                }
            }
        }
        let (kr, fr, red) = apply_dirichlet(&k, &self.f, &dirichlet)?;
        let factor = kr.factorize()?;
        Ok(red.recover(&factor.solve(&fr)))
    }

    /// Restrict the merged solution to instance-local nodal fields.
    pub fn instance_fields(&self, topology: &SystemTopology, u: &[f64]) -> Vec<Vec<f64>> {
        (0..topology.num_instances())
            .map(|i| {
                let mut field = Vec::with_capacity(2 * self.node_map[i].len());
                for &g in &self.node_map[i] {
                    field.push(u[2 * g]);
                    field.push(u[2 * g + 1]);
                }
                field
            })
            .collect()
    }
}

/// Relative L2 error of per-component fields `a` against reference `b`:
/// sqrt(sum_i |a_i - b_i|^2_M) / sqrt(sum_i |b_i|^2_M).
pub fn l2_relative_error(
    topology: &SystemTopology,
    ops: &[ComponentOperator],
    a: &[Vec<f64>],
    b: &[Vec<f64>],
) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, inst) in topology.instances.iter().enumerate() {
        let m = ops[inst.reference].mass();
        let diff: Vec<f64> = a[i].iter().zip(&b[i]).map(|(x, y)| x - y).collect();
        let md = m.matvec(&diff);
        num += md.iter().zip(&diff).map(|(x, y)| x * y).sum::<f64>();
        let mb = m.matvec(&b[i]);
        den += mb.iter().zip(&b[i]).map(|(x, y)| x * y).sum::<f64>();
    }
    (num / den).sqrt()
}
