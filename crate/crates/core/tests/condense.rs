//! Condensed-system assembly and solve checked against dense oracles and
//! the conforming full-order model.

mod common;

use common::*;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};

use cwrom::condense::{CondensedModel, LiftKind};
use cwrom::fom::{l2_relative_error, FomModel};
use cwrom::model::{
    build_lattice, BoundaryPortSel, Instance, LatticeSpec, Side, SystemTopology,
    TransformationMap,
};

fn two_strut_topology(ops: &[cwrom::condense::ComponentOperator]) -> SystemTopology {
    let len = 0.05;
    SystemTopology::build(
        &refcomps(ops),
        vec![
            Instance {
                reference: HSTRUT,
                map: TransformationMap::translation([0.0, 0.0]),
            },
            Instance {
                reference: HSTRUT,
                map: TransformationMap::translation([len, 0.0]),
            },
        ],
    )
    .unwrap()
}

#[test]
fn one_component_system_is_scaled_local_schur() {
    let (ops, _) = library(4);
    let topo = SystemTopology::build(
        &refcomps(&ops),
        vec![Instance {
            reference: HSTRUT,
            map: TransformationMap::translation([0.0, 0.0]),
        }],
    )
    .unwrap();
    let bases = nodal_bases(&ops);
    let model = CondensedModel::build(&topo, &ops, &bases, LiftKind::Elasticity).unwrap();
    let s = 0.731;
    let sys = model.assemble(&topo, &[s]).unwrap();
    let kd = sys.k.to_dense();
    let kbar = &model.local_schur(HSTRUT).kbar;
    // the scaling is the implementation: bit-exact equality
    for r in 0..kd.nrows() {
        for c in 0..kd.ncols() {
            assert_eq!(kd[(r, c)], s * kbar[(r, c)]);
        }
    }
}

#[test]
fn two_struts_share_one_diagonal_block() {
    let (ops, _) = library(4);
    let topo = two_strut_topology(&ops);
    let bases = nodal_bases(&ops);
    let model = CondensedModel::build(&topo, &ops, &bases, LiftKind::Elasticity).unwrap();
    let (s0, s1) = (0.4, 0.9);
    let sys = model.assemble(&topo, &[s0, s1]).unwrap();
    let kd = sys.k.to_dense();

    // hand-assembled oracle from the nodal Schur blocks
    let kbar = &model.local_schur(HSTRUT).kbar;
    let m = kbar.nrows() / 2; // per-port block size
    let shared_g = topo.global_port(0, 1);
    assert_eq!(shared_g, topo.global_port(1, 0));
    let off = |i: usize, j: usize| model.block_offset(i, j).unwrap();
    // shared diagonal block accumulates both contributions
    let o = off(0, 1);
    for a in 0..m {
        for b in 0..m {
            let expect = s0 * kbar[(m + a, m + b)] + s1 * kbar[(a, b)];
            let got = kd[(o + a, o + b)];
            assert!((got - expect).abs() <= 1e-12 * expect.abs().max(1.0));
        }
    }
    // off-diagonal coupling only through the shared port: the far-end blocks
    // of the two struts must not couple
    let o0 = off(0, 0);
    let o1 = off(1, 1);
    for a in 0..m {
        for b in 0..m {
            assert_eq!(kd[(o0 + a, o1 + b)], 0.0);
        }
    }
}

#[test]
fn assembled_operator_is_spd_for_random_densities() {
    let (ops, geo) = library(4);
    let mut topo = ring_topology(&ops, &geo);
    // pin one port to remove rigid modes
    topo.set_dirichlet(0);
    let bases = nodal_bases(&ops);
    let model = CondensedModel::build(&topo, &ops, &bases, LiftKind::Elasticity).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for _ in 0..3 {
        let scale: Vec<f64> = (0..topo.num_instances())
            .map(|_| rng.gen_range(1e-3..1.0f64))
            .collect();
        let mut sys = model.assemble(&topo, &scale).unwrap();
        assert!(sys.solve().is_ok());
    }
}

#[test]
fn zero_load_gives_zero_solution() {
    let (ops, geo) = library(4);
    let mut topo = ring_topology(&ops, &geo);
    topo.set_dirichlet(0);
    let bases = nodal_bases(&ops);
    let model = CondensedModel::build(&topo, &ops, &bases, LiftKind::Elasticity).unwrap();
    let mut sys = model
        .assemble(&topo, &vec![1.0; topo.num_instances()])
        .unwrap();
    let u = sys.solve().unwrap();
    assert!(u.iter().all(|&v| v == 0.0));
}

#[test]
fn condensed_solve_matches_dense_oracle() {
    let (ops, geo) = library(3);
    let mut topo = ring_topology(&ops, &geo);
    topo.set_dirichlet(0);
    let loaded = topo
        .global_ports
        .iter()
        .position(|g| g.members.len() == 1 && !g.dirichlet)
        .unwrap();
    topo.set_traction(loaded, [1.0e6, -2.0e6]);
    let bases = nodal_bases(&ops);
    let model = CondensedModel::build(&topo, &ops, &bases, LiftKind::Elasticity).unwrap();
    let scale: Vec<f64> = (0..topo.num_instances()).map(|i| 0.2 + 0.1 * i as f64).collect();
    let mut sys = model.assemble(&topo, &scale).unwrap();
    let u = sys.solve().unwrap().to_vec();
    // residual guarantee of the sparse solve
    let r: Vec<f64> = sys.k.matvec(&u).iter().zip(&sys.f).map(|(a, b)| a - b).collect();
    let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let fn_ = sys.f.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(rn <= 1e-10 * fn_, "relative residual {:e}", rn / fn_);
    // agreement with an independent dense factorization, up to conditioning
    let kd = sys.k.to_dense();
    let f = nalgebra::DVector::from_column_slice(&sys.f);
    let ud = kd.cholesky().unwrap().solve(&f);
    for i in 0..u.len() {
        assert!((u[i] - ud[i]).abs() <= 1e-9 * ud.amax());
    }
}

#[test]
fn full_port_bases_reproduce_fom_field() {
    let (ops, geo) = library(5);
    let spec = LatticeSpec {
        cols: 2,
        rows: 2,
        stub_struts: vec![],
        dirichlet: vec![
            BoundaryPortSel { side: Side::Left, index: 0 },
            BoundaryPortSel { side: Side::Left, index: 1 },
        ],
        loads: vec![(BoundaryPortSel { side: Side::Right, index: 1 }, [1.0e8, 1.0e8])],
    };
    let topo = build_lattice(&refcomps(&ops), lattice_refs(), &spec, &geo).unwrap();
    let bases = nodal_bases(&ops);
    let model = CondensedModel::build(&topo, &ops, &bases, LiftKind::Elasticity).unwrap();
    let scale: Vec<f64> = (0..topo.num_instances())
        .map(|i| 0.3 + 0.05 * (i % 7) as f64)
        .collect();
    let mut sys = model.assemble(&topo, &scale).unwrap();
    let u = sys.solve().unwrap().to_vec();
    let fields = model.reconstruct(&topo, &u, None);

    let fom = FomModel::build(&topo, &ops).unwrap();
    let uf = fom.solve(&topo, &ops, &scale).unwrap();
    let fom_fields = fom.instance_fields(&topo, &uf);

    let err = l2_relative_error(&topo, &ops, &fields, &fom_fields);
    assert!(err <= 1e-8, "relative L2 error {err:e}");

    // interior-port trace continuity is exact by shared coefficients
    for gp in &topo.global_ports {
        if gp.members.len() == 2 {
            let (a, b) = (gp.members[0], gp.members[1]);
            let ra = topo.instances[a.instance].reference;
            let rb = topo.instances[b.instance].reference;
            let na = ops[ra].reference.ports[a.port].nodes();
            let nb = ops[rb].reference.ports[b.port].nodes();
            for (&x, &y) in na.iter().zip(nb) {
                for c in 0..2 {
                    let va = fields[a.instance][2 * x + c];
                    let vb = fields[b.instance][2 * y + c];
                    assert!((va - vb).abs() <= 1e-12 * va.abs().max(1e-12));
                }
            }
        }
    }
}

#[test]
fn reconstruct_zero_system_is_zero_field() {
    let (ops, geo) = library(3);
    let mut topo = ring_topology(&ops, &geo);
    for g in 0..topo.num_global_ports() {
        topo.set_dirichlet(g);
    }
    let bases = nodal_bases(&ops);
    let model = CondensedModel::build(&topo, &ops, &bases, LiftKind::Elasticity).unwrap();
    assert_eq!(model.num_dofs(), 0);
    let fields = model.reconstruct(&topo, &[], None);
    assert!(fields.iter().all(|f| f.iter().all(|&v| v == 0.0)));
}

#[test]
fn compliance_identity_against_reconstructed_energy() {
    let (ops, geo) = library(4);
    let spec = LatticeSpec {
        cols: 2,
        rows: 1,
        stub_struts: vec![],
        dirichlet: vec![BoundaryPortSel { side: Side::Left, index: 0 }],
        loads: vec![(BoundaryPortSel { side: Side::Right, index: 0 }, [5.0e7, 0.0])],
    };
    let topo = build_lattice(&refcomps(&ops), lattice_refs(), &spec, &geo).unwrap();
    let bases = nodal_bases(&ops);
    let model = CondensedModel::build(&topo, &ops, &bases, LiftKind::Elasticity).unwrap();
    let scale: Vec<f64> = vec![0.8, 0.6, 1.0];
    let mut sys = model.assemble(&topo, &scale).unwrap();
    let u = sys.solve().unwrap().to_vec();
    let c = sys.load_work().unwrap();
    let fields = model.reconstruct(&topo, &u, None);
    // energy a(u, u; mu) accumulated per component
    let mut energy = 0.0;
    for (i, inst) in topo.instances.iter().enumerate() {
        let av = ops[inst.reference].operator().matvec(&fields[i]);
        energy += scale[i] * av.iter().zip(&fields[i]).map(|(a, b)| a * b).sum::<f64>();
    }
    assert!(
        (c - energy).abs() <= 1e-9 * c.abs(),
        "F^T U = {c}, a(u,u) = {energy}"
    );
}

#[test]
fn laplacian_path_reproduces_elasticity_condensed_operator() {
    let (ops, _) = library(3);
    let topo = two_strut_topology(&ops);
    let bases = nodal_bases(&ops);
    let el = CondensedModel::build(&topo, &ops, &bases, LiftKind::Elasticity).unwrap();
    let lap = CondensedModel::build(&topo, &ops, &bases, LiftKind::Laplacian).unwrap();
    let s = vec![0.7, 0.25];
    let ke = el.assemble(&topo, &s).unwrap().k.to_dense();
    let kl = lap.assemble(&topo, &s).unwrap().k.to_dense();
    let diff = (&ke - &kl).amax();
    assert!(diff <= 1e-9 * ke.amax(), "{diff:e} vs {:e}", ke.amax());
}

#[test]
fn bubble_coupling_vanishes_for_elasticity_lifting() {
    let (ops, _) = library(4);
    let topo = two_strut_topology(&ops);
    let bases = nodal_bases(&ops);
    let model = CondensedModel::build(&topo, &ops, &bases, LiftKind::Elasticity).unwrap();
    // arbitrary interior body load on instance 0
    let op = &ops[HSTRUT];
    let mut load = vec![0.0; op.num_dofs()];
    let port_dofs: std::collections::BTreeSet<usize> =
        (0..op.num_ports()).flat_map(|j| op.port_dofs(j).to_vec()).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    for d in 0..op.num_dofs() {
        if !port_dofs.contains(&d) {
            load[d] = rng.gen_range(-1.0..1.0);
        }
    }
    let bubble = op.forcing_bubble(0.7, &load).unwrap();
    let coupling = model.bubble_coupling(&ops, 0, 0.7, &bubble);
    let worst = coupling.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = bubble.iter().fold(0.0f64, |m, v| m.max(v.abs())) * op.operator().max_abs();
    assert!(worst <= 1e-9 * scale, "{worst:e} vs {scale:e}");
}

#[test]
fn galerkin_energy_error_nonincreasing_in_nested_bases() {
    // nested subsets of an orthonormal port basis: energy error of the
    // condensed solution is non-increasing as the basis grows
    let (ops, geo) = library(5);
    let spec = LatticeSpec {
        cols: 2,
        rows: 1,
        stub_struts: vec![],
        dirichlet: vec![BoundaryPortSel { side: Side::Left, index: 0 }],
        loads: vec![(BoundaryPortSel { side: Side::Right, index: 0 }, [3.0e7, 1.0e7])],
    };
    let topo = build_lattice(&refcomps(&ops), lattice_refs(), &spec, &geo).unwrap();
    let full = nodal_bases(&ops);
    let scale = vec![1.0; topo.num_instances()];

    // reference compliance with full bases (Galerkin-optimal energy)
    let model_full = CondensedModel::build(&topo, &ops, &full, LiftKind::Elasticity).unwrap();
    let mut sys_full = model_full.assemble(&topo, &scale).unwrap();
    sys_full.solve().unwrap();
    let c_full = sys_full.load_work().unwrap();

    // orthonormal family per port: constants + sine-like modes via QR
    let dim = full[HSTRUT][0].nrows();
    let make_family = |dim: usize| -> DMatrix<f64> {
        let raw = DMatrix::<f64>::from_fn(dim, dim, |r, c| {
            let node = (r / 2) as f64;
            let comp = r % 2;
            if c == comp {
                1.0
            } else {
                ((node + 1.0) * (c as f64) * 0.7 + comp as f64 * 0.3).sin()
            }
        });
        let qr = raw.qr();
        qr.q()
    };
    let family = make_family(dim);
    let mut last_err = f64::INFINITY;
    for m in [2usize, 4, dim] {
        let bases: Vec<Vec<DMatrix<f64>>> = ops
            .iter()
            .map(|op| {
                (0..op.num_ports())
                    .map(|j| {
                        assert_eq!(op.port_dofs(j).len(), dim);
                        family.columns(0, m).into_owned()
                    })
                    .collect()
            })
            .collect();
        let model = CondensedModel::build(&topo, &ops, &bases, LiftKind::Elasticity).unwrap();
        let mut sys = model.assemble(&topo, &scale).unwrap();
        sys.solve().unwrap();
        let c = sys.load_work().unwrap();
        // compliance of a Galerkin subspace under-approximates the full one;
        // the energy error is c_full - c >= 0 and non-increasing
        let err = c_full - c;
        assert!(err >= -1e-9 * c_full.abs());
        assert!(err <= last_err + 1e-9 * c_full.abs());
        last_err = err;
    }
    assert!(last_err.abs() <= 1e-8 * c_full.abs());
}

#[test]
fn stress_concentrates_at_reentrant_assembly_corners() {
    // in an assembled lattice the strut walls meet the joint chamfers at
    // reflex corners; the loaded joint's stress maximum sits next to a
    // port end, not in the component interior
    use cwrom::fem::{element_stress, von_mises_2d};
    let (ops, geo) = library(9);
    let spec = LatticeSpec {
        cols: 2,
        rows: 1,
        stub_struts: vec![],
        dirichlet: vec![BoundaryPortSel { side: Side::Left, index: 0 }],
        loads: vec![(BoundaryPortSel { side: Side::Right, index: 0 }, [1.0e8, 1.0e8])],
    };
    let topo = build_lattice(&refcomps(&ops), lattice_refs(), &spec, &geo).unwrap();
    let bases = nodal_bases(&ops);
    let model = CondensedModel::build(&topo, &ops, &bases, LiftKind::Elasticity).unwrap();
    let scale = vec![1.0; topo.num_instances()];
    let mut sys = model.assemble(&topo, &scale).unwrap();
    let u = sys.solve().unwrap().to_vec();
    let fields = model.reconstruct(&topo, &u, None);

    // the clamped joint (instance 0) resolves the concentration
    let joint = 0usize;
    let rc = &ops[topo.instances[joint].reference].reference;
    let mut best = (0.0f64, [0.0, 0.0]);
    for e in 0..rc.mesh.num_elements() {
        let conn = rc.mesh.elements()[e];
        let mut ue = nalgebra::SVector::<f64, 8>::zeros();
        for (a, &n) in conn.iter().enumerate() {
            ue[2 * a] = fields[joint][2 * n];
            ue[2 * a + 1] = fields[joint][2 * n + 1];
        }
        let coords = rc.mesh.element_coords(e);
        let s = element_stress(&coords, &rc.material, &ue).unwrap();
        let vm = von_mises_2d(&s);
        if vm > best.0 {
            let c = [
                (coords[0][0] + coords[1][0] + coords[2][0] + coords[3][0]) / 4.0,
                (coords[0][1] + coords[1][1] + coords[2][1] + coords[3][1]) / 4.0,
            ];
            best = (vm, c);
        }
    }
    // distance from the max-stress element centroid to the nearest port
    // end (the assembly's re-entrant corners) is within two cells
    let d = (geo.joint_side - geo.port_length) / 2.0;
    let side = geo.joint_side;
    let ends = [
        [0.0, d], [0.0, d + geo.port_length],
        [side, d], [side, d + geo.port_length],
        [d, 0.0], [d + geo.port_length, 0.0],
        [d, side], [d + geo.port_length, side],
    ];
    let h = geo.port_length / 8.0;
    let nearest = ends
        .iter()
        .map(|p| ((p[0] - best.1[0]).powi(2) + (p[1] - best.1[1]).powi(2)).sqrt())
        .fold(f64::INFINITY, f64::min);
    assert!(
        nearest <= 2.0 * h,
        "max stress {:.3e} at ({:.4}, {:.4}), {:.2} cells from a port end",
        best.0,
        best.1[0],
        best.1[1],
        nearest / h
    );
}
