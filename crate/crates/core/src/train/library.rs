//! The offline library: reference components with their condensation
//! operators, plus trained port spaces for every pair configuration.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::condense::{ComponentOperator, CondensedModel, LiftKind};
use crate::error::{CwError, Result};
use crate::fem::PlaneStressMaterial;
use crate::model::{
    make_joint, make_strut, make_vertical_strut, GeometryParams, LatticeRefs, SystemTopology,
};

use super::pairwise::{pairwise_train, PairKind, TrainingParams};
use super::pod::{pod, PodTruncation, TrainedPortSpace};

/// Reference components and their condensation operators, in the slot
/// order expected by the lattice builder.
pub struct ComponentLibrary {
    pub ops: Vec<ComponentOperator>,
    pub refs: LatticeRefs,
    pub geo: GeometryParams,
    pub material: PlaneStressMaterial,
    /// node count across every port
    pub resolution: usize,
}

impl ComponentLibrary {
    /// Build the joint, horizontal-strut and vertical-strut entries.
    pub fn build(geo: GeometryParams, material: PlaneStressMaterial, resolution: usize) -> Result<Self> {
        let ops = vec![
            ComponentOperator::new(make_joint(resolution, &geo, material)?)?,
            ComponentOperator::new(make_strut(resolution, &geo, material)?)?,
            ComponentOperator::new(make_vertical_strut(resolution, &geo, material)?)?,
        ];
        Ok(Self {
            ops,
            refs: LatticeRefs {
                joint: 0,
                hstrut: 1,
                vstrut: 2,
            },
            geo,
            material,
            resolution,
        })
    }

    pub fn references(&self) -> Vec<crate::model::ReferenceComponent> {
        self.ops.iter().map(|o| o.reference.clone()).collect()
    }

    /// Scalar trace dimension of every port (all ports share it).
    pub fn port_dim(&self) -> usize {
        2 * self.resolution
    }
}

/// Bookkeeping persisted alongside the trained spaces.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub params: TrainingParams,
    pub resolution: usize,
    pub geometry: GeometryParams,
    pub material: PlaneStressMaterial,
}

/// Trained reduced port spaces for every pair configuration, plus the
/// component operators they act on.
pub struct TrainedLibrary {
    pub components: ComponentLibrary,
    pub spaces: BTreeMap<PairKind, TrainedPortSpace>,
    pub meta: TrainingMeta,
}

impl TrainedLibrary {
    /// Offline phase: pairwise-train all four configurations and compress.
    pub fn train(
        components: ComponentLibrary,
        params: &TrainingParams,
        trunc: PodTruncation,
        scale: &(dyn Fn(f64) -> f64 + Sync),
    ) -> Result<Self> {
        let mut spaces = BTreeMap::new();
        for (i, kind) in PairKind::ALL.into_iter().enumerate() {
            let mut kind_params = params.clone();
            // decorrelate the four training runs
            kind_params.seed = params.seed.wrapping_add(i as u64 * 0x9E37_79B9);
            let snaps = pairwise_train(
                &components.ops,
                components.refs,
                &components.geo,
                kind,
                &kind_params,
                scale,
            )?;
            spaces.insert(kind, pod(&snaps, trunc)?);
        }
        let meta = TrainingMeta {
            params: params.clone(),
            resolution: components.resolution,
            geometry: components.geo,
            material: components.material,
        };
        Ok(Self {
            components,
            spaces,
            meta,
        })
    }

    /// Assemble from parts (deserialization path).
    pub fn from_parts(
        components: ComponentLibrary,
        spaces: BTreeMap<PairKind, TrainedPortSpace>,
        meta: TrainingMeta,
    ) -> Self {
        Self {
            components,
            spaces,
            meta,
        }
    }

    /// Trained space owning a reference port.
    pub fn space_for(&self, reference: usize, port: usize) -> Result<&TrainedPortSpace> {
        let kind = PairKind::classify(reference, port, self.components.refs).ok_or_else(|| {
            CwError::Library(format!(
                "no trained configuration covers reference {reference} port {port}"
            ))
        })?;
        self.spaces
            .get(&kind)
            .ok_or_else(|| CwError::Library(format!("pair configuration {kind:?} not trained")))
    }

    /// Largest basis size usable on every port.
    pub fn available_size(&self) -> usize {
        self.spaces
            .values()
            .map(|s| s.available())
            .min()
            .unwrap_or(0)
    }

    /// Per-reference per-port bases of uniform size `m`.
    pub fn bases(&self, m: usize) -> Result<Vec<Vec<DMatrix<f64>>>> {
        self.components
            .ops
            .iter()
            .enumerate()
            .map(|(r, op)| {
                (0..op.num_ports())
                    .map(|j| self.space_for(r, j)?.basis(m))
                    .collect()
            })
            .collect()
    }

    /// Full-dimension orthonormal bases whose leading columns are the
    /// trained ones (for reference solves and error certification).
    pub fn full_bases(&self) -> Result<Vec<Vec<DMatrix<f64>>>> {
        self.components
            .ops
            .iter()
            .enumerate()
            .map(|(r, op)| {
                (0..op.num_ports())
                    .map(|j| Ok(self.space_for(r, j)?.completed()))
                    .collect()
            })
            .collect()
    }

    /// Verify every global port of the topology is covered by a trained
    /// configuration and paired ports share one.
    pub fn check_coverage(&self, topology: &SystemTopology) -> Result<()> {
        for (g, gp) in topology.global_ports.iter().enumerate() {
            let kinds: Vec<Option<PairKind>> = gp
                .members
                .iter()
                .map(|m| {
                    PairKind::classify(
                        topology.instances[m.instance].reference,
                        m.port,
                        self.components.refs,
                    )
                })
                .collect();
            if kinds.iter().any(|k| k.is_none()) {
                return Err(CwError::Library(format!(
                    "global port {g} uses an untrained port configuration"
                )));
            }
            if gp.members.len() == 2 && kinds[0] != kinds[1] {
                return Err(CwError::Library(format!(
                    "global port {g} pairs ports from different trained configurations \
                     ({:?} vs {:?})",
                    kinds[0], kinds[1]
                )));
            }
        }
        Ok(())
    }

    /// Online reduced model at uniform basis size `m`.
    pub fn model(&self, topology: &SystemTopology, m: usize) -> Result<CondensedModel> {
        self.check_coverage(topology)?;
        let bases = self.bases(m)?;
        CondensedModel::build(topology, &self.components.ops, &bases, LiftKind::Elasticity)
    }

    /// Full-order condensed model in the completed trained basis; its
    /// leading per-port coefficients live in the same coordinates as the
    /// reduced model's, so reduced solutions embed by zero padding.
    pub fn full_model(&self, topology: &SystemTopology) -> Result<CondensedModel> {
        self.check_coverage(topology)?;
        let bases = self.full_bases()?;
        CondensedModel::build(topology, &self.components.ops, &bases, LiftKind::Elasticity)
    }
}
