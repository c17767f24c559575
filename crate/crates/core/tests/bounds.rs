//! Error-bound certification against true reduced-model errors.

mod common;

use common::*;
use rand::{Rng, SeedableRng};

use cwrom::bounds::{certify, embed_reduced, extended_residual};
use cwrom::fem::PlaneStressMaterial;
use cwrom::model::{build_lattice, BoundaryPortSel, LatticeSpec, Side};
use cwrom::opt::SimpParams;
use cwrom::train::{ComponentLibrary, PodTruncation, TrainedLibrary, TrainingParams};

fn trained(resolution: usize, n_samples: usize, seed: u64) -> TrainedLibrary {
    let geo = cwrom::model::GeometryParams::default();
    let mat = PlaneStressMaterial::new(69e9, 0.3).unwrap();
    let lib = ComponentLibrary::build(geo, mat, resolution).unwrap();
    let params = TrainingParams {
        n_samples,
        eta: 1.0,
        seed,
        density_range: (1e-3, 1.0),
    };
    let simp = SimpParams::default();
    TrainedLibrary::train(lib, &params, PodTruncation::EnergyTol(1e-14), &|m| {
        simp.value(m)
    })
    .unwrap()
}

fn cantilever(lib: &TrainedLibrary, cols: usize, rows: usize, load: [f64; 2]) -> cwrom::model::SystemTopology {
    let spec = LatticeSpec {
        cols,
        rows,
        stub_struts: vec![],
        dirichlet: (0..rows)
            .map(|r| BoundaryPortSel { side: Side::Left, index: r })
            .collect(),
        loads: vec![(BoundaryPortSel { side: Side::Right, index: 0 }, load)],
    };
    build_lattice(
        &lib.components.references(),
        lib.components.refs,
        &spec,
        &lib.components.geo,
    )
    .unwrap()
}

#[test]
fn full_basis_residual_vanishes() {
    let lib = trained(4, 40, 2);
    let topo = cantilever(&lib, 2, 1, [1.0e8, 2.0e7]);
    let simp = SimpParams::default();
    let mu = vec![0.8; topo.num_instances()];
    let report = certify(&lib, &topo, &mu, &simp, lib.available_size()).unwrap();
    // relative to the load scale
    let scale = report.constants_c2;
    assert!(
        report.residual_norm <= 1e-10 * scale.max(1.0) * 1e8,
        "residual {:e}",
        report.residual_norm
    );
    assert!(report.true_energy_error <= report.solution_bound + 1e-12);
}

#[test]
fn zero_padded_guess_recovers_error_through_factorization() {
    let lib = trained(4, 30, 3);
    let topo = cantilever(&lib, 2, 1, [5.0e7, 0.0]);
    let simp = SimpParams::default();
    let mu = vec![0.5; topo.num_instances()];
    let scale = simp.values(&mu);

    let full = lib.full_model(&topo).unwrap();
    let mut fs = full.assemble(&topo, &scale).unwrap();
    let u_full = fs.solve().unwrap().to_vec();

    let reduced = lib.model(&topo, 4).unwrap();
    let mut rs = reduced.assemble(&topo, &scale).unwrap();
    let u_red = rs.solve().unwrap().to_vec();
    let u_hat = embed_reduced(&full, &reduced, &topo, &u_red).unwrap();

    let r = extended_residual(&fs.k, &fs.f, &u_hat);
    let e = fs.k.factorize().unwrap().solve(&r);
    let umax = u_full.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..u_full.len() {
        let expect = u_full[i] - u_hat[i];
        assert!((e[i] - expect).abs() <= 1e-10 * umax);
    }
}

#[test]
fn domination_over_random_cases() {
    // >= 20 random (topology, mu, basis size) triples: zero violations
    let lib = trained(4, 40, 8);
    let simp = SimpParams::default();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
    let shapes = [(2usize, 1usize), (2, 2), (3, 2)];
    let mut checked = 0;
    for (cols, rows) in shapes {
        let topo = cantilever(&lib, cols, rows, [8.0e7, -3.0e7]);
        for _ in 0..7 {
            let mu: Vec<f64> = (0..topo.num_instances())
                .map(|_| rng.gen_range(0.05..1.0f64))
                .collect();
            let size = *[3usize, 4, 5, 6]
                .get(rng.gen_range(0..4))
                .unwrap();
            let report = certify(&lib, &topo, &mu, &simp, size).unwrap();
            assert!(
                report.dominated(),
                "violation at cols={cols} rows={rows} size={size}: {report:?}"
            );
            checked += 1;
        }
    }
    assert!(checked >= 20);
}

#[test]
fn bounds_shrink_with_residual_across_nested_sizes() {
    let lib = trained(5, 60, 9);
    let topo = cantilever(&lib, 2, 2, [1.0e8, 1.0e8]);
    let simp = SimpParams::default();
    let mu: Vec<f64> = (0..topo.num_instances())
        .map(|i| 0.3 + 0.07 * (i % 9) as f64)
        .collect();
    let mut last_res = f64::INFINITY;
    let mut last_bound = f64::INFINITY;
    let mut ratios = Vec::new();
    for size in [4usize, 6, 8, 10] {
        let report = certify(&lib, &topo, &mu, &simp, size).unwrap();
        assert!(report.dominated());
        assert!(
            report.residual_norm <= last_res * (1.0 + 1e-9),
            "residual grew: {:e} after {:e}",
            report.residual_norm,
            last_res
        );
        assert!(report.solution_bound <= last_bound * (1.0 + 1e-9));
        ratios.push(report.solution_bound / report.residual_norm.max(1e-300));
        last_res = report.residual_norm;
        last_bound = report.solution_bound;
    }
    // same constants for every size: bound proportional to the residual
    for w in ratios.windows(2) {
        assert!((w[0] - w[1]).abs() <= 1e-6 * w[0]);
    }
}

#[test]
fn energy_identity_between_field_and_coefficient_norms() {
    // |e|_energy computed from reconstructed fields equals |e|_K
    let lib = trained(4, 30, 10);
    let topo = cantilever(&lib, 2, 1, [6.0e7, 1.0e7]);
    let simp = SimpParams::default();
    let mu = vec![0.65; topo.num_instances()];
    let scale = simp.values(&mu);

    let full = lib.full_model(&topo).unwrap();
    let mut fs = full.assemble(&topo, &scale).unwrap();
    let u_full = fs.solve().unwrap().to_vec();
    let reduced = lib.model(&topo, 4).unwrap();
    let mut rs = reduced.assemble(&topo, &scale).unwrap();
    let u_red = rs.solve().unwrap().to_vec();
    let u_hat = embed_reduced(&full, &reduced, &topo, &u_red).unwrap();

    let e: Vec<f64> = u_full.iter().zip(&u_hat).map(|(a, b)| a - b).collect();
    let ke = fs.k.matvec(&e);
    let k_norm = ke.iter().zip(&e).map(|(a, b)| a * b).sum::<f64>().sqrt();

    // field energy of the error via per-component operators
    let fields = full.reconstruct(&topo, &e, None);
    let ops = &lib.components.ops;
    let mut energy = 0.0;
    for (i, inst) in topo.instances.iter().enumerate() {
        let av = ops[inst.reference].operator().matvec(&fields[i]);
        energy += scale[i] * av.iter().zip(&fields[i]).map(|(a, b)| a * b).sum::<f64>();
    }
    let field_norm = energy.sqrt();
    assert!(
        (field_norm - k_norm).abs() <= 1e-9 * k_norm.max(1e-300),
        "field {field_norm:e} vs coefficient {k_norm:e}"
    );
}
