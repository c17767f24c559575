//! Drivers behind the CLI subcommands; also the entry points the C API
//! wraps. Each returns a summary struct and writes its artifacts under an
//! output directory.

use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CwError, Result};
use crate::fem::{element_stress, von_mises_2d};
use crate::fom::{l2_relative_error, FomModel};
use crate::io::{
    load_library, read_densities, save_library, write_densities, write_vtk_fields, ComponentField,
    RunConfig,
};
use crate::model::{build_lattice, DesignState, SystemTopology};
use crate::opt::{
    post_process, run_optimization, ComplianceProblem, MmaOptions, OptimizerSettings,
};
use crate::train::{ComponentLibrary, PairKind, PodTruncation, TrainedLibrary};
use crate::bounds::{certify, ErrorReport};

pub struct TrainSummary {
    pub library_path: std::path::PathBuf,
    pub available_size: usize,
}

/// Offline phase: build the component library, train all pair
/// configurations, persist the result, and print the singular-value decay.
pub fn cmd_train(config: &RunConfig, out: &Path) -> Result<TrainSummary> {
    config.validate()?;
    let components = ComponentLibrary::build(
        config.geometry_params(),
        config.material()?,
        config.geometry.resolution,
    )?;
    let simp = config.simp_params();
    let t0 = Instant::now();
    let lib = TrainedLibrary::train(
        components,
        &config.training_params(),
        PodTruncation::EnergyTol(config.training.energy_tol),
        &|m| simp.value(m),
    )?;
    println!(
        "trained {} pair configurations in {:.2} s ({} samples each, seed {})",
        lib.spaces.len(),
        t0.elapsed().as_secs_f64(),
        config.training.n_samples,
        config.training.seed
    );
    println!("singular-value decay (normalized):");
    print!("{:>14}", "mode");
    for kind in PairKind::ALL {
        print!("{:>16}", format!("{kind:?}"));
    }
    println!();
    let max_modes = lib
        .spaces
        .values()
        .map(|s| s.singular_values().len())
        .max()
        .unwrap_or(0)
        .min(16);
    for k in 0..max_modes {
        print!("{k:>14}");
        for kind in PairKind::ALL {
            let sv = lib.spaces[&kind].singular_values();
            let v = sv.get(k).map(|v| v / sv[0]).unwrap_or(f64::NAN);
            print!("{v:>16.3e}");
        }
        println!();
    }
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    save_library(out, &lib)?;
    println!("library written to {}", out.display());
    Ok(TrainSummary {
        library_path: out.to_path_buf(),
        available_size: lib.available_size(),
    })
}

fn load_and_check(library_path: &Path) -> Result<TrainedLibrary> {
    load_library(library_path)
}

fn lattice_topology(config: &RunConfig, lib: &TrainedLibrary) -> Result<SystemTopology> {
    build_lattice(
        &lib.components.references(),
        lib.components.refs,
        &config.lattice_spec(),
        &lib.components.geo,
    )
}

/// Clamp a requested basis size to what the trained spaces support,
/// warning when truncation occurs.
fn clamp_size(lib: &TrainedLibrary, requested: usize) -> usize {
    let avail = lib.available_size();
    if requested > avail {
        eprintln!("warning: basis size {requested} exceeds trained rank; truncating to {avail}");
        avail
    } else {
        requested.max(1)
    }
}

fn von_mises_per_element(
    lib: &TrainedLibrary,
    topology: &SystemTopology,
    fields: &[Vec<f64>],
    scale: &[f64],
) -> Vec<Vec<f64>> {
    (0..topology.num_instances())
        .map(|i| {
            let r = topology.instances[i].reference;
            let rc = &lib.components.ops[r].reference;
            (0..rc.mesh.num_elements())
                .map(|e| {
                    let conn = rc.mesh.elements()[e];
                    let mut ue = nalgebra::SVector::<f64, 8>::zeros();
                    for (a, &n) in conn.iter().enumerate() {
                        ue[2 * a] = fields[i][2 * n];
                        ue[2 * a + 1] = fields[i][2 * n + 1];
                    }
                    let sigma = element_stress(&rc.mesh.element_coords(e), &rc.material, &ue)
                        .map(|s| s * scale[i])
                        .unwrap_or_else(|_| nalgebra::SVector::<f64, 3>::zeros());
                    von_mises_2d(&sigma)
                })
                .collect()
        })
        .collect()
}

fn export_fields(
    lib: &TrainedLibrary,
    topology: &SystemTopology,
    fields: &[Vec<f64>],
    mu: &[f64],
    scale: &[f64],
    out_dir: &Path,
) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let vm = von_mises_per_element(lib, topology, fields, scale);
    let per_comp: Vec<ComponentField> = (0..topology.num_instances())
        .map(|i| {
            let r = topology.instances[i].reference;
            ComponentField {
                mesh: &lib.components.ops[r].reference.mesh,
                map: &topology.instances[i].map,
                displacement: &fields[i],
                von_mises: &vm[i],
                density: mu[i],
            }
        })
        .collect();
    write_vtk_fields(&out_dir.join("fields.vtk"), "lattice fields", &per_comp)?;
    let comp_dir = out_dir.join("components");
    std::fs::create_dir_all(&comp_dir)?;
    for (i, f) in per_comp.iter().enumerate() {
        write_vtk_fields(
            &comp_dir.join(format!("component_{i:04}.vtk")),
            &format!("component {i}"),
            std::slice::from_ref(f),
        )?;
    }
    Ok(())
}

pub struct SolveSummary {
    pub compliance: f64,
    pub n_dofs: usize,
    pub basis_size: usize,
    pub t_assemble: f64,
    pub t_solve: f64,
    pub t_reconstruct: f64,
}

/// Online solve: assemble the reduced system for one density vector
/// (all-solid by default), export displacement and stress fields.
pub fn cmd_solve(
    config: &RunConfig,
    library_path: &Path,
    mu_file: Option<&Path>,
    out_dir: &Path,
    basis_size: Option<usize>,
) -> Result<SolveSummary> {
    let lib = load_and_check(library_path)?;
    let mu = mu_file.map(read_densities).transpose()?;
    solve_with_library(config, &lib, mu.as_deref(), Some(out_dir), basis_size)
}

/// Solve against an already-loaded library (the C API entry point).
pub fn solve_with_library(
    config: &RunConfig,
    lib: &TrainedLibrary,
    densities: Option<&[f64]>,
    out_dir: Option<&Path>,
    basis_size: Option<usize>,
) -> Result<SolveSummary> {
    config.validate()?;
    let topology = lattice_topology(config, lib)?;
    let m = clamp_size(lib, basis_size.unwrap_or(config.optimizer.basis_size));
    let mu = match densities {
        Some(values) => {
            if values.len() != topology.num_instances() {
                return Err(CwError::Config(format!(
                    "{} densities for {} components",
                    values.len(),
                    topology.num_instances()
                )));
            }
            values.to_vec()
        }
        None => vec![1.0; topology.num_instances()],
    };
    let simp = config.simp_params();
    let scale = simp.values(&mu);
    if scale.iter().cloned().fold(f64::INFINITY, f64::min) <= 1e-6 {
        eprintln!(
            "warning: near-void components make the system almost singular; \
             expect very large compliance"
        );
    }
    let model = lib.model(&topology, m)?;
    let t0 = Instant::now();
    let mut sys = model.assemble(&topology, &scale)?;
    let t_assemble = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let u = sys.solve()?.to_vec();
    let t_solve = t1.elapsed().as_secs_f64();
    let t2 = Instant::now();
    let fields = model.reconstruct(&topology, &u, None);
    let t_reconstruct = t2.elapsed().as_secs_f64();
    let compliance = sys.load_work()?;
    if let Some(dir) = out_dir {
        export_fields(lib, &topology, &fields, &mu, &scale, dir)?;
    }
    let summary = SolveSummary {
        compliance,
        n_dofs: model.num_dofs(),
        basis_size: m,
        t_assemble,
        t_solve,
        t_reconstruct,
    };
    println!(
        "solved {} components, {} condensed dofs, basis size {m}",
        topology.num_instances(),
        model.num_dofs()
    );
    println!("compliance = {compliance:.6e} N*m");
    println!(
        "timings: assembly {t_assemble:.4} s, solve {t_solve:.4} s, reconstruct {t_reconstruct:.4} s"
    );
    if let Some(dir) = out_dir {
        std::fs::write(
            dir.join("summary.txt"),
            format!(
                "components {}\ncondensed_dofs {}\nbasis_size {m}\ncompliance {compliance:.12e}\n\
                 t_assemble {t_assemble:.6}\nt_solve {t_solve:.6}\nt_reconstruct {t_reconstruct:.6}\n",
                topology.num_instances(),
                model.num_dofs()
            ),
        )?;
    }
    Ok(summary)
}

pub struct CompareRow {
    pub size: usize,
    pub time: f64,
    pub time_rel: f64,
    pub error_rel: f64,
}

pub struct CompareSummary {
    pub t_reference: f64,
    pub rows: Vec<CompareRow>,
    pub reference_is_fom: bool,
}

fn median_time<T>(reps: usize, mut run: impl FnMut() -> Result<T>) -> Result<(f64, T)> {
    let mut times = Vec::with_capacity(reps);
    let mut result = None;
    for _ in 0..reps {
        let t = Instant::now();
        result = Some(run()?);
        times.push(t.elapsed().as_secs_f64());
    }
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok((times[times.len() / 2], result.unwrap()))
}

/// Accuracy/timing sweep over basis sizes against the conforming
/// full-order model (or the full-basis condensed model with
/// `cwfom_reference`).
pub fn cmd_compare(
    config: &RunConfig,
    library_path: &Path,
    sizes: &[usize],
    out_dir: &Path,
    cwfom_reference: bool,
) -> Result<CompareSummary> {
    config.validate()?;
    let lib = load_and_check(library_path)?;
    let topology = lattice_topology(config, &lib)?;
    std::fs::create_dir_all(out_dir)?;
    let mu = vec![1.0; topology.num_instances()];
    let simp = config.simp_params();
    let scale = simp.values(&mu);
    let ops = &lib.components.ops;

    // reference fields and timing
    let (t_ref, ref_fields) = if cwfom_reference {
        let full = lib.full_model(&topology)?;
        let (t, u) = median_time(5, || {
            let mut sys = full.assemble(&topology, &scale)?;
            Ok(sys.solve()?.to_vec())
        })?;
        (t, full.reconstruct(&topology, &u, None))
    } else {
        let fom = FomModel::build(&topology, ops)?;
        let (t, u) = median_time(5, || fom.solve(&topology, ops, &scale))?;
        (t, fom.instance_fields(&topology, &u))
    };

    let mut sizes: Vec<usize> = sizes.iter().map(|&s| clamp_size(&lib, s)).collect();
    sizes.dedup();
    let mut rows = Vec::new();
    for &m in &sizes {
        let model = lib.model(&topology, m)?;
        let (t, u) = median_time(5, || {
            let mut sys = model.assemble(&topology, &scale)?;
            Ok(sys.solve()?.to_vec())
        })?;
        let fields = model.reconstruct(&topology, &u, None);
        let err = l2_relative_error(&topology, ops, &fields, &ref_fields);
        rows.push(CompareRow {
            size: m,
            time: t,
            time_rel: t / t_ref,
            error_rel: err,
        });
    }

    let ref_name = if cwfom_reference { "CWFOM" } else { "FOM" };
    println!("reference {ref_name} solve: {t_ref:.4} s (median of 5)");
    println!("{:>6} {:>12} {:>12} {:>12}", "size", "t (s)", "t_rel", "eps_rel");
    let mut csv = String::from("size,t,t_rel,eps_rel\n");
    for r in &rows {
        println!(
            "{:>6} {:>12.5} {:>12.3e} {:>12.3e}",
            r.size, r.time, r.time_rel, r.error_rel
        );
        csv.push_str(&format!(
            "{},{:.6e},{:.6e},{:.6e}\n",
            r.size, r.time, r.time_rel, r.error_rel
        ));
    }
    std::fs::write(out_dir.join("compare.csv"), csv)?;
    Ok(CompareSummary {
        t_reference: t_ref,
        rows,
        reference_is_fom: !cwfom_reference,
    })
}

pub struct OptimizeSummary {
    pub initial_compliance: f64,
    pub compliance: f64,
    pub post_compliance: f64,
    pub post_mass_fraction: f64,
    pub iterations: usize,
    pub converged: bool,
    pub densities: Vec<f64>,
    pub post_densities: Vec<f64>,
}

/// Compliance minimization under the volume budget, with post-processing
/// to a binary design and field export.
pub fn cmd_optimize(
    config: &RunConfig,
    library_path: &Path,
    out_dir: &Path,
    basis_size: Option<usize>,
) -> Result<OptimizeSummary> {
    let lib = load_and_check(library_path)?;
    optimize_with_library(config, &lib, Some(out_dir), basis_size)
}

/// Optimize against an already-loaded library (the C API entry point).
pub fn optimize_with_library(
    config: &RunConfig,
    lib: &TrainedLibrary,
    out_dir: Option<&Path>,
    basis_size: Option<usize>,
) -> Result<OptimizeSummary> {
    config.validate()?;
    let topology = lattice_topology(config, lib)?;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let m = clamp_size(lib, basis_size.unwrap_or(config.optimizer.basis_size));
    let model = lib.model(&topology, m)?;
    let simp = config.simp_params();
    let problem = ComplianceProblem {
        model: &model,
        topology: &topology,
        simp,
    };
    let volumes = topology.volumes(&lib.components.references());
    let total: f64 = volumes.iter().sum();
    let v_u = config.optimizer.volume_fraction * total;
    let n = topology.num_instances();
    let floor = config.simp.density_floor;
    let init = match config.optimizer.init {
        crate::io::InitMode::Uniform => vec![config.optimizer.volume_fraction.max(floor); n],
        crate::io::InitMode::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.optimizer.init_seed);
            (0..n)
                .map(|_| {
                    // truncated normal, mean 0.6, sd 0.05
                    loop {
                        let u1: f64 = rng.gen_range(1e-12..1.0);
                        let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                        let z = (-2.0 * u1.ln()).sqrt() * u2.cos();
                        let v = 0.6 + 0.05 * z;
                        if (0.0..=1.0).contains(&v) {
                            return v.clamp(floor, 1.0);
                        }
                    }
                })
                .collect()
        }
    };
    let design = DesignState::new(init, volumes, floor, v_u)?;
    let settings = OptimizerSettings {
        stop_tol: config.optimizer.stop_tol,
        max_iters: config.optimizer.max_iters,
        threshold: config.optimizer.threshold,
    };
    let t0 = Instant::now();
    let mut result = run_optimization(&problem, &design, &settings, MmaOptions::default())?;
    let t_opt = t0.elapsed().as_secs_f64();
    if !result.converged {
        eprintln!(
            "warning: stopping rule not met within {} iterations; best feasible design returned",
            settings.max_iters
        );
    }
    let post = post_process(&problem, &design, &result.densities, settings.threshold)?;
    if !post.thresholded {
        eprintln!(
            "warning: thresholding disconnected the load path; reporting the un-thresholded design"
        );
    }
    result.post = Some(post.clone());

    if let Some(dir) = out_dir {
        write_densities(&dir.join("density.txt"), &result.densities)?;
        write_densities(&dir.join("density_binary.txt"), &post.densities)?;
        let mut csv = String::from("iter,compliance,stop_mean\n");
        for (i, c) in result.compliance_history.iter().enumerate() {
            let sm = result
                .stopping_trace
                .get(i)
                .map(|v| format!("{v:.6e}"))
                .unwrap_or_default();
            csv.push_str(&format!("{i},{c:.9e},{sm}\n"));
        }
        std::fs::write(dir.join("history.csv"), csv)?;

        // export optimized and post-processed fields
        let scale = simp.values(&result.densities);
        let mut sys = model.assemble(&topology, &scale)?;
        let u = sys.solve()?.to_vec();
        let fields = model.reconstruct(&topology, &u, None);
        export_fields(lib, &topology, &fields, &result.densities, &scale, dir)?;
    }

    let summary = OptimizeSummary {
        initial_compliance: result.compliance_history[0],
        compliance: result.compliance,
        post_compliance: post.compliance,
        post_mass_fraction: post.mass_fraction,
        iterations: result.iterations,
        converged: result.converged,
        densities: result.densities.clone(),
        post_densities: post.densities.clone(),
    };
    println!(
        "optimized {n} components at basis size {m} in {:.2} s ({} iterations, {})",
        t_opt,
        summary.iterations,
        if summary.converged {
            "stopping rule met"
        } else {
            "max iterations reached"
        }
    );
    println!(
        "compliance: initial {:.6e}, optimized {:.6e}, post-processed {:.6e} N*m",
        summary.initial_compliance, summary.compliance, summary.post_compliance
    );
    println!(
        "post-processed mass fraction {:.4} (target {:.4})",
        summary.post_mass_fraction, config.optimizer.volume_fraction
    );
    if let Some(dir) = out_dir {
        std::fs::write(
            dir.join("summary.txt"),
            format!(
                "initial_compliance {:.12e}\noptimized_compliance {:.12e}\npost_compliance {:.12e}\n\
                 mass_fraction {:.6}\niterations {}\nconverged {}\n",
                summary.initial_compliance,
                summary.compliance,
                summary.post_compliance,
                summary.post_mass_fraction,
                summary.iterations,
                summary.converged
            ),
        )?;
    }
    Ok(summary)
}

/// Bound certification sweep over basis sizes.
pub fn cmd_verify(
    config: &RunConfig,
    library_path: &Path,
    sizes: &[usize],
    out_dir: &Path,
    mu_file: Option<&Path>,
) -> Result<Vec<ErrorReport>> {
    config.validate()?;
    let lib = load_and_check(library_path)?;
    let topology = lattice_topology(config, &lib)?;
    std::fs::create_dir_all(out_dir)?;
    let simp = config.simp_params();
    let mu = match mu_file {
        Some(p) => read_densities(p)?,
        None => vec![
            config.optimizer.volume_fraction.max(config.simp.density_floor);
            topology.num_instances()
        ],
    };
    if mu.len() != topology.num_instances() {
        return Err(CwError::Config(format!(
            "{} densities for {} components",
            mu.len(),
            topology.num_instances()
        )));
    }
    let mut reports = Vec::new();
    println!(
        "{:>6} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12} {:>10}",
        "size", "|R|", "sol_bound", "sol_err", "cmp_bound", "cmp_err", "sens_bound", "sens_err", "dominated"
    );
    let mut csv = String::from(
        "size,residual,solution_bound,solution_error,compliance_bound,compliance_error,\
         sensitivity_bound,sensitivity_error_l2,sensitivity_error_max,dominated\n",
    );
    for &s in sizes {
        let m = clamp_size(&lib, s);
        let r = certify(&lib, &topology, &mu, &simp, m)?;
        println!(
            "{:>6} {:>12.3e} {:>12.3e} {:>12.3e} {:>12.3e} {:>12.3e} {:>12.3e} {:>12.3e} {:>10}",
            r.basis_size,
            r.residual_norm,
            r.solution_bound,
            r.true_energy_error,
            r.compliance_bound,
            r.true_compliance_error,
            r.sensitivity_bound,
            r.true_sensitivity_error_l2,
            r.dominated()
        );
        csv.push_str(&format!(
            "{},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{}\n",
            r.basis_size,
            r.residual_norm,
            r.solution_bound,
            r.true_energy_error,
            r.compliance_bound,
            r.true_compliance_error,
            r.sensitivity_bound,
            r.true_sensitivity_error_l2,
            r.true_sensitivity_error_max,
            r.dominated()
        ));
        reports.push(r);
    }
    std::fs::write(out_dir.join("verify.csv"), csv)?;
    Ok(reports)
}
