//! Pairwise training: random two-component problems whose shared-port
//! traces form the snapshot set for POD compression.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::condense::{ComponentOperator, CondensedModel, LiftKind};
use crate::error::{CwError, Result};
use crate::model::{
    GeometryParams, Instance, LatticeRefs, SystemTopology, TransformationMap, JOINT_PORT_E,
    JOINT_PORT_N, JOINT_PORT_S, JOINT_PORT_W,
};

use super::port1d::{legendre_modes, vanishing_mode, PortEigenbasis};

/// The four two-component configurations a lattice instantiates. Each kind
/// trains one shared port space, used by both of its member reference
/// ports, which keeps paired port bases identical by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PairKind {
    /// horizontal strut east port against joint west port
    HStrutJoint,
    /// joint east port against horizontal strut west port
    JointHStrut,
    /// vertical strut north port against joint south port
    VStrutJoint,
    /// joint north port against vertical strut south port
    JointVStrut,
}

pub const HSTRUT_PORT_W: usize = 0;
pub const HSTRUT_PORT_E: usize = 1;
pub const VSTRUT_PORT_S: usize = 0;
pub const VSTRUT_PORT_N: usize = 1;

impl PairKind {
    pub const ALL: [PairKind; 4] = [
        PairKind::HStrutJoint,
        PairKind::JointHStrut,
        PairKind::VStrutJoint,
        PairKind::JointVStrut,
    ];

    /// The two (reference, local port) pairs sharing this trained space.
    pub fn members(&self, refs: LatticeRefs) -> [(usize, usize); 2] {
        match self {
            PairKind::HStrutJoint => [(refs.hstrut, HSTRUT_PORT_E), (refs.joint, JOINT_PORT_W)],
            PairKind::JointHStrut => [(refs.joint, JOINT_PORT_E), (refs.hstrut, HSTRUT_PORT_W)],
            PairKind::VStrutJoint => [(refs.vstrut, VSTRUT_PORT_N), (refs.joint, JOINT_PORT_S)],
            PairKind::JointVStrut => [(refs.joint, JOINT_PORT_N), (refs.vstrut, VSTRUT_PORT_S)],
        }
    }

    /// Training-pair placement with the joint at the origin.
    fn instances(&self, refs: LatticeRefs, geo: &GeometryParams) -> Vec<Instance> {
        let d = (geo.joint_side - geo.port_length) / 2.0;
        let len = geo.strut_length;
        let side = geo.joint_side;
        let joint = Instance {
            reference: refs.joint,
            map: TransformationMap::translation([0.0, 0.0]),
        };
        let strut = |reference: usize, t: [f64; 2]| Instance {
            reference,
            map: TransformationMap::translation(t),
        };
        match self {
            PairKind::HStrutJoint => vec![strut(refs.hstrut, [-len, d]), joint],
            PairKind::JointHStrut => vec![joint, strut(refs.hstrut, [side, d])],
            PairKind::VStrutJoint => vec![strut(refs.vstrut, [d, -len]), joint],
            PairKind::JointVStrut => vec![joint, strut(refs.vstrut, [d, side])],
        }
    }

    /// Reference port trained for a given (reference, port), if any.
    pub fn classify(reference: usize, port: usize, refs: LatticeRefs) -> Option<PairKind> {
        PairKind::ALL
            .into_iter()
            .find(|k| k.members(refs).contains(&(reference, port)))
    }
}

/// Offline training controls.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainingParams {
    pub n_samples: usize,
    /// boundary-data decay exponent for the random Legendre coefficients
    pub eta: f64,
    pub seed: u64,
    /// density draws for the two components of every training pair
    pub density_range: (f64, f64),
}

impl Default for TrainingParams {
    fn default() -> Self {
        Self {
            n_samples: 500,
            eta: 1.0,
            seed: 20200828,
            density_range: (1e-3, 1.0),
        }
    }
}

/// Mean-corrected shared-port traces, one column per sample.
#[derive(Debug, Clone)]
pub struct SnapshotSet {
    pub data: DMatrix<f64>,
    pub seed: u64,
    /// consistent 1D weights of the shared port (for mean checks)
    pub weights: Vec<f64>,
}

/// Inputs of one training sample (exposed so oracles can replay a sample
/// on an independent solver).
#[derive(Debug, Clone)]
pub struct SampleInputs {
    pub scales: Vec<f64>,
    /// nodal Dirichlet data per non-shared global port
    pub imposed: BTreeMap<usize, Vec<f64>>,
}

/// A prepared two-component training problem.
pub struct PairContext {
    pub topology: SystemTopology,
    pub model: CondensedModel,
    pub shared_port: usize,
    shared_weights: Vec<f64>,
    eigenbases: BTreeMap<usize, PortEigenbasis>,
}

impl PairContext {
    pub fn new(
        ops: &[ComponentOperator],
        refs: LatticeRefs,
        geo: &GeometryParams,
        kind: PairKind,
    ) -> Result<Self> {
        let lib: Vec<_> = ops.iter().map(|o| o.reference.clone()).collect();
        let mut topology = SystemTopology::build(&lib, kind.instances(refs, geo))?;
        let shared_port = topology
            .global_ports
            .iter()
            .position(|g| g.members.len() == 2)
            .ok_or_else(|| CwError::Topology("training pair has no shared port".into()))?;
        let mut eigenbases = BTreeMap::new();
        for g in 0..topology.num_global_ports() {
            if g == shared_port {
                continue;
            }
            topology.set_dirichlet(g);
            let coords = topology.port_coords(&lib, g);
            let s = vanishing_mode(&coords)?;
            eigenbases.insert(g, legendre_modes(&coords, &s)?);
        }
        // full nodal port bases: the pair is solved with the CWFOM
        let bases: Vec<Vec<DMatrix<f64>>> = ops
            .iter()
            .map(|op| {
                (0..op.num_ports())
                    .map(|j| {
                        let n = op.port_dofs(j).len();
                        DMatrix::identity(n, n)
                    })
                    .collect()
            })
            .collect();
        let model = CondensedModel::build(&topology, ops, &bases, LiftKind::Elasticity)?;
        let m = topology.global_ports[shared_port].members[0];
        let r = topology.instances[m.instance].reference;
        let shared_weights = ops[r].port_weights(m.port).to_vec();
        Ok(Self {
            topology,
            model,
            shared_port,
            shared_weights,
            eigenbases,
        })
    }

    /// Deterministic inputs of sample `index` under `params`.
    pub fn sample_inputs(
        &self,
        params: &TrainingParams,
        scale: &(dyn Fn(f64) -> f64 + Sync),
        index: usize,
    ) -> SampleInputs {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        rng.set_stream(index as u64 + 1);
        let (lo, hi) = params.density_range;
        let draw_density = |rng: &mut ChaCha8Rng| {
            if hi > lo {
                rng.gen_range(lo..hi)
            } else {
                lo
            }
        };
        let scales: Vec<f64> = (0..self.topology.num_instances())
            .map(|_| scale(draw_density(&mut rng)))
            .collect();
        let mut imposed = BTreeMap::new();
        for (&g, basis) in &self.eigenbases {
            let n_nodes = basis.modes.nrows();
            let mut nodal = vec![0.0; 2 * n_nodes];
            for comp in 0..2 {
                for k in 0..basis.num_modes() {
                    let q: f64 = rng.gen_range(-1.0..1.0);
                    let amp = q / ((k + 1) as f64).powf(params.eta);
                    for node in 0..n_nodes {
                        nodal[2 * node + comp] += amp * basis.modes[(node, k)];
                    }
                }
            }
            imposed.insert(g, nodal);
        }
        SampleInputs { scales, imposed }
    }

    /// Solve one sample and return the mean-corrected shared-port trace.
    pub fn sample_trace(&self, inputs: &SampleInputs) -> Result<Vec<f64>> {
        let mut sys = self
            .model
            .assemble_imposed(&self.topology, &inputs.scales, &inputs.imposed)?;
        let u = sys.solve()?;
        let off = self
            .model
            .dof_map()
            .port_offset(self.shared_port)
            .expect("shared port is free");
        let m = self.model.dof_map().port_size(self.shared_port);
        Ok(mean_correct(&u[off..off + m], &self.shared_weights))
    }
}

/// Subtract the per-component weighted mean from a nodal port trace.
pub fn mean_correct(trace: &[f64], weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    let mut out = trace.to_vec();
    for comp in 0..2 {
        let mean: f64 = weights
            .iter()
            .enumerate()
            .map(|(i, w)| w * trace[2 * i + comp])
            .sum::<f64>()
            / total;
        for (i, _) in weights.iter().enumerate() {
            out[2 * i + comp] -= mean;
        }
    }
    out
}

/// Run the pairwise training loop for one configuration.
pub fn pairwise_train(
    ops: &[ComponentOperator],
    refs: LatticeRefs,
    geo: &GeometryParams,
    kind: PairKind,
    params: &TrainingParams,
    scale: &(dyn Fn(f64) -> f64 + Sync),
) -> Result<SnapshotSet> {
    let ctx = PairContext::new(ops, refs, geo, kind)?;
    let columns: Vec<Result<Vec<f64>>> = (0..params.n_samples)
        .into_par_iter()
        .map(|k| ctx.sample_trace(&ctx.sample_inputs(params, scale, k)))
        .collect();
    let dim = 2 * ctx.shared_weights.len();
    let mut data = DMatrix::<f64>::zeros(dim, params.n_samples);
    for (k, col) in columns.into_iter().enumerate() {
        let col = col?;
        for (r, v) in col.iter().enumerate() {
            data[(r, k)] = *v;
        }
    }
    Ok(SnapshotSet {
        data,
        seed: params.seed,
        weights: ctx.shared_weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::PlaneStressMaterial;
    use crate::fom::FomModel;
    use crate::model::{make_joint, make_strut, make_vertical_strut};

    fn setup() -> (Vec<ComponentOperator>, LatticeRefs, GeometryParams) {
        let geo = GeometryParams::default();
        let mat = PlaneStressMaterial::new(69e9, 0.3).unwrap();
        let ops = vec![
            ComponentOperator::new(make_joint(5, &geo, mat).unwrap()).unwrap(),
            ComponentOperator::new(make_strut(5, &geo, mat).unwrap()).unwrap(),
            ComponentOperator::new(make_vertical_strut(5, &geo, mat).unwrap()).unwrap(),
        ];
        (
            ops,
            LatticeRefs {
                joint: 0,
                hstrut: 1,
                vstrut: 2,
            },
            geo,
        )
    }

    fn params(n: usize, seed: u64) -> TrainingParams {
        TrainingParams {
            n_samples: n,
            eta: 1.0,
            seed,
            density_range: (1e-3, 1.0),
        }
    }

    fn simp_like(mu: f64) -> f64 {
        let p = 3.0;
        mu.powf(p) + (1.0 - mu.powf(p)) * 1e-9
    }

    #[test]
    fn snapshot_count_and_mean_correction() {
        let (ops, refs, geo) = setup();
        let p = params(8, 42);
        let set = pairwise_train(&ops, refs, &geo, PairKind::JointHStrut, &p, &simp_like).unwrap();
        assert_eq!(set.data.ncols(), 8);
        let total: f64 = set.weights.iter().sum();
        for c in 0..set.data.ncols() {
            for comp in 0..2 {
                let mean: f64 = set
                    .weights
                    .iter()
                    .enumerate()
                    .map(|(i, w)| w * set.data[(2 * i + comp, c)])
                    .sum::<f64>()
                    / total;
                let scale = set.data.column(c).amax().max(1e-300);
                assert!(mean.abs() <= 1e-12 * scale, "column {c} comp {comp}: {mean:e}");
            }
        }
    }

    #[test]
    fn deterministic_under_fixed_seed() {
        let (ops, refs, geo) = setup();
        let p = params(5, 7);
        let a = pairwise_train(&ops, refs, &geo, PairKind::HStrutJoint, &p, &simp_like).unwrap();
        let b = pairwise_train(&ops, refs, &geo, PairKind::HStrutJoint, &p, &simp_like).unwrap();
        assert_eq!(a.data, b.data);
    }

    #[test]
    fn equal_density_pairs_share_snapshots() {
        // scaling both components equally cancels from the trace
        let (ops, refs, geo) = setup();
        let mut pa = params(4, 11);
        pa.density_range = (0.3, 0.3);
        let mut pb = params(4, 11);
        pb.density_range = (0.9, 0.9);
        let a = pairwise_train(&ops, refs, &geo, PairKind::JointVStrut, &pa, &simp_like).unwrap();
        let b = pairwise_train(&ops, refs, &geo, PairKind::JointVStrut, &pb, &simp_like).unwrap();
        let diff = (&a.data - &b.data).amax();
        assert!(diff <= 1e-10 * a.data.amax(), "{diff:e}");
    }

    #[test]
    fn sample_trace_matches_monolithic_fom() {
        let (ops, refs, geo) = setup();
        let p = params(3, 123);
        let ctx = PairContext::new(&ops, refs, &geo, PairKind::VStrutJoint).unwrap();
        let inputs = ctx.sample_inputs(&p, &simp_like, 2);
        let trace = ctx.sample_trace(&inputs).unwrap();

        let fom = FomModel::build(&ctx.topology, &ops).unwrap();
        let u = fom
            .solve_imposed(&ctx.topology, &ops, &inputs.scales, &inputs.imposed)
            .unwrap();
        let dofs = fom.port_merged_dofs(ctx.shared_port);
        let raw: Vec<f64> = dofs.iter().map(|&d| u[d]).collect();
        let expect = mean_correct(&raw, &ctx.shared_weights);
        let scale = expect.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in trace.iter().zip(&expect) {
            assert!((a - b).abs() <= 1e-8 * scale, "{a} vs {b}");
        }
    }
}
