//! C ABI over the lattice reduced-order modeling library.
//!
//! All types cross the boundary as opaque handles; every fallible call
//! returns a status code and stores a human-readable message retrievable
//! with `cw_last_error_message` (thread local). Pointers returned by
//! `cw_*_new`/`cw_*_load` must be released with the matching `cw_*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::path::Path;

use cwrom::commands::{optimize_with_library, solve_with_library};
use cwrom::io::{load_library, RunConfig};
use cwrom::train::TrainedLibrary;
use cwrom::CwError;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CwStatus {
    /// success
    Ok = 0,
    /// invalid configuration or arguments
    Config = 2,
    /// numerical failure (non-SPD operator, non-convergence, ...)
    Numeric = 3,
    /// file i/o or format failure
    Io = 4,
    /// a required pointer argument was null
    NullPointer = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &CwError) -> CwStatus {
    match err {
        CwError::Config(_) | CwError::Contract(_) => CwStatus::Config,
        CwError::Io(_) | CwError::Format(_) => CwStatus::Io,
        _ => CwStatus::Numeric,
    }
}

fn fail(err: CwError) -> CwStatus {
    let s = status_of(&err);
    set_error(&err.to_string());
    s
}

/// Opaque run configuration.
pub struct CwConfig {
    inner: RunConfig,
}

/// Opaque trained component library.
pub struct CwLibrary {
    inner: TrainedLibrary,
}

/// Opaque result record: named scalar metrics plus a density vector.
pub struct CwResult {
    metrics: Vec<(&'static str, f64)>,
    densities: Vec<f64>,
}

unsafe fn cstr<'a>(p: *const c_char) -> Option<&'a str> {
    if p.is_null() {
        return None;
    }
    unsafe { CStr::from_ptr(p) }.to_str().ok()
}

/// Message describing the most recent error on this thread. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parse a TOML run configuration from a file.
#[no_mangle]
pub unsafe extern "C" fn cw_config_load(
    path: *const c_char,
    out: *mut *mut CwConfig,
) -> CwStatus {
    let (Some(path), false) = (unsafe { cstr(path) }, out.is_null()) else {
        set_error("null pointer argument");
        return CwStatus::NullPointer;
    };
    match RunConfig::from_path(Path::new(path)) {
        Ok(inner) => {
            unsafe { *out = Box::into_raw(Box::new(CwConfig { inner })) };
            CwStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Parse a TOML run configuration from text.
#[no_mangle]
pub unsafe extern "C" fn cw_config_parse(
    toml_text: *const c_char,
    out: *mut *mut CwConfig,
) -> CwStatus {
    let (Some(text), false) = (unsafe { cstr(toml_text) }, out.is_null()) else {
        set_error("null pointer argument");
        return CwStatus::NullPointer;
    };
    match RunConfig::from_toml(text) {
        Ok(inner) => {
            unsafe { *out = Box::into_raw(Box::new(CwConfig { inner })) };
            CwStatus::Ok
        }
        Err(e) => fail(e),
    }
}

#[no_mangle]
pub unsafe extern "C" fn cw_config_free(config: *mut CwConfig) {
    if !config.is_null() {
        drop(unsafe { Box::from_raw(config) });
    }
}

/// Run the offline training phase and write the library file.
#[no_mangle]
pub unsafe extern "C" fn cw_train(
    config: *const CwConfig,
    library_path: *const c_char,
) -> CwStatus {
    let (Some(cfg), Some(path)) = (unsafe { config.as_ref() }, unsafe { cstr(library_path) })
    else {
        set_error("null pointer argument");
        return CwStatus::NullPointer;
    };
    match cwrom::commands::cmd_train(&cfg.inner, Path::new(path)) {
        Ok(_) => CwStatus::Ok,
        Err(e) => fail(e),
    }
}

/// Load a trained library file.
#[no_mangle]
pub unsafe extern "C" fn cw_library_load(
    path: *const c_char,
    out: *mut *mut CwLibrary,
) -> CwStatus {
    let (Some(path), false) = (unsafe { cstr(path) }, out.is_null()) else {
        set_error("null pointer argument");
        return CwStatus::NullPointer;
    };
    match load_library(Path::new(path)) {
        Ok(inner) => {
            unsafe { *out = Box::into_raw(Box::new(CwLibrary { inner })) };
            CwStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Largest port basis size the library supports.
#[no_mangle]
pub unsafe extern "C" fn cw_library_available_size(library: *const CwLibrary) -> c_int {
    match unsafe { library.as_ref() } {
        Some(l) => l.inner.available_size() as c_int,
        None => -1,
    }
}

#[no_mangle]
pub unsafe extern "C" fn cw_library_free(library: *mut CwLibrary) {
    if !library.is_null() {
        drop(unsafe { Box::from_raw(library) });
    }
}

/// Solve the configured lattice. `densities` may be null (all-solid);
/// `out_dir` may be null to skip field export; `basis_size <= 0` uses the
/// configured size.
#[no_mangle]
pub unsafe extern "C" fn cw_solve(
    config: *const CwConfig,
    library: *const CwLibrary,
    densities: *const f64,
    n_densities: usize,
    out_dir: *const c_char,
    basis_size: c_int,
    out: *mut *mut CwResult,
) -> CwStatus {
    let (Some(cfg), Some(lib), false) = (
        unsafe { config.as_ref() },
        unsafe { library.as_ref() },
        out.is_null(),
    ) else {
        set_error("null pointer argument");
        return CwStatus::NullPointer;
    };
    let mu: Option<Vec<f64>> = if densities.is_null() {
        None
    } else {
        Some(unsafe { std::slice::from_raw_parts(densities, n_densities) }.to_vec())
    };
    let dir = unsafe { cstr(out_dir) }.map(Path::new);
    let size = (basis_size > 0).then_some(basis_size as usize);
    match solve_with_library(&cfg.inner, &lib.inner, mu.as_deref(), dir, size) {
        Ok(s) => {
            let result = CwResult {
                metrics: vec![
                    ("compliance", s.compliance),
                    ("n_dofs", s.n_dofs as f64),
                    ("basis_size", s.basis_size as f64),
                    ("t_assemble", s.t_assemble),
                    ("t_solve", s.t_solve),
                    ("t_reconstruct", s.t_reconstruct),
                ],
                densities: Vec::new(),
            };
            unsafe { *out = Box::into_raw(Box::new(result)) };
            CwStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Minimize compliance under the configured volume budget.
#[no_mangle]
pub unsafe extern "C" fn cw_optimize(
    config: *const CwConfig,
    library: *const CwLibrary,
    out_dir: *const c_char,
    basis_size: c_int,
    out: *mut *mut CwResult,
) -> CwStatus {
    let (Some(cfg), Some(lib), false) = (
        unsafe { config.as_ref() },
        unsafe { library.as_ref() },
        out.is_null(),
    ) else {
        set_error("null pointer argument");
        return CwStatus::NullPointer;
    };
    let dir = unsafe { cstr(out_dir) }.map(Path::new);
    let size = (basis_size > 0).then_some(basis_size as usize);
    match optimize_with_library(&cfg.inner, &lib.inner, dir, size) {
        Ok(s) => {
            let result = CwResult {
                metrics: vec![
                    ("initial_compliance", s.initial_compliance),
                    ("compliance", s.compliance),
                    ("post_compliance", s.post_compliance),
                    ("post_mass_fraction", s.post_mass_fraction),
                    ("iterations", s.iterations as f64),
                    ("converged", if s.converged { 1.0 } else { 0.0 }),
                ],
                densities: s.densities,
            };
            unsafe { *out = Box::into_raw(Box::new(result)) };
            CwStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Scalar metric by name; NaN when the name is unknown.
#[no_mangle]
pub unsafe extern "C" fn cw_result_metric(
    result: *const CwResult,
    name: *const c_char,
) -> f64 {
    let (Some(r), Some(n)) = (unsafe { result.as_ref() }, unsafe { cstr(name) }) else {
        return f64::NAN;
    };
    r.metrics
        .iter()
        .find(|(k, _)| *k == n)
        .map(|(_, v)| *v)
        .unwrap_or(f64::NAN)
}

/// Number of densities carried by the result (0 for plain solves).
#[no_mangle]
pub unsafe extern "C" fn cw_result_num_densities(result: *const CwResult) -> usize {
    unsafe { result.as_ref() }.map_or(0, |r| r.densities.len())
}

/// Copy up to `cap` densities into `buf`; returns the number copied.
#[no_mangle]
pub unsafe extern "C" fn cw_result_copy_densities(
    result: *const CwResult,
    buf: *mut f64,
    cap: usize,
) -> usize {
    let Some(r) = (unsafe { result.as_ref() }) else {
        return 0;
    };
    if buf.is_null() {
        return 0;
    }
    let n = r.densities.len().min(cap);
    unsafe { std::slice::from_raw_parts_mut(buf, n) }.copy_from_slice(&r.densities[..n]);
    n
}

#[no_mangle]
pub unsafe extern "C" fn cw_result_free(result: *mut CwResult) {
    if !result.is_null() {
        drop(unsafe { Box::from_raw(result) });
    }
}
