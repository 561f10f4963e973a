//! C ABI over `sensorshift`.
//!
//! Objects are opaque handles created by `ss_*_new`-style calls and released
//! with the matching `ss_*_free`. Every fallible call returns an
//! [`SsStatus`]; on failure [`ss_last_error_message`] describes the error
//! for the calling thread. Matrices are passed row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nalgebra::{DMatrix, DVector};
use sensorshift::action_effect::{effect_from_covariances, population_covariances, LinearGaussianModel};
use sensorshift::audit::audit_bounds;
use sensorshift::identify::{enumerate_solution_vertices, polytope_contains, EnumerationOptions, IdentificationSystem, SolutionPolytope};
use sensorshift::prob::kl_vectors;
use sensorshift::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsStatus {
    Ok = 0,
    NullPointer = 1,
    /// Malformed or mismatched input.
    InvalidInput = 2,
    /// No solution, a failed linear program, or an undefined quantity such
    /// as an infinite divergence.
    Infeasible = 3,
    /// An ill-conditioned matrix or similar numerical failure.
    Numerical = 4,
    /// The output buffer is shorter than required.
    BufferTooSmall = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

/// Solution polytope of an identification system.
pub struct SsPolytope(SolutionPolytope);

/// Linear-Gaussian model `(F, Σ_NN, D, E, Σ_OO)`.
pub struct SsLinearModel(LinearGaussianModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = CString::new(msg.into().replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> SsStatus {
    match err {
        Error::Infeasible(_)
        | Error::Inconsistent { .. }
        | Error::Lp(_)
        | Error::UndefinedConditional(_)
        | Error::SupportViolation { .. }
        | Error::ZeroConditioning { .. } => SsStatus::Infeasible,
        Error::Singular { .. } => SsStatus::Numerical,
        e if e.is_input_error() => SsStatus::InvalidInput,
        _ => SsStatus::Numerical,
    }
}

/// Runs `f`, recording any error or panic for [`ss_last_error_message`].
fn guard(f: impl FnOnce() -> Result<(), (SsStatus, String)>) -> SsStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside sensorshift");
            SsStatus::Panic
        }
    }
}

fn lib<T>(r: sensorshift::Result<T>) -> Result<T, (SsStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (SsStatus, String) {
    (SsStatus::NullPointer, format!("{what} is null"))
}

/// Borrows `len` doubles; a null pointer is accepted only for `len == 0`.
unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], (SsStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn matrix(p: *const f64, rows: usize, cols: usize, what: &str) -> Result<DMatrix<f64>, (SsStatus, String)> {
    let data = slice(p, rows * cols, what)?;
    Ok(DMatrix::from_row_slice(rows, cols, data))
}

unsafe fn write_out(dst: *mut f64, len: usize, src: &[f64]) -> Result<(), (SsStatus, String)> {
    if src.len() > len {
        return Err((SsStatus::BufferTooSmall, format!("need {} entries, got {len}", src.len())));
    }
    if src.is_empty() {
        return Ok(());
    }
    if dst.is_null() {
        return Err(null("output buffer"));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    Ok(())
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn ss_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Static, nul-terminated name of a status code.
#[no_mangle]
pub extern "C" fn ss_status_name(status: SsStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        SsStatus::Ok => b"ok\0",
        SsStatus::NullPointer => b"null pointer\0",
        SsStatus::InvalidInput => b"invalid input\0",
        SsStatus::Infeasible => b"infeasible\0",
        SsStatus::Numerical => b"numerical failure\0",
        SsStatus::BufferTooSmall => b"buffer too small\0",
        SsStatus::Panic => b"panic\0",
    };
    s.as_ptr().cast()
}

/// Enumerates the solution set of `sensor · v = rhs`, `v ≥ 0`, for a
/// `rows × cols` column-stochastic `sensor`.
///
/// # Safety
/// `sensor` must point to `rows * cols` doubles, `rhs` to `rows` doubles and
/// `out` to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn ss_identify(
    sensor: *const f64,
    rows: usize,
    cols: usize,
    rhs: *const f64,
    out: *mut *mut SsPolytope,
) -> SsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let m = matrix(sensor, rows, cols, "sensor")?;
        let b = DVector::from_column_slice(slice(rhs, rows, "rhs")?);
        let sys = lib(IdentificationSystem::from_matrix(m, b))?;
        let p = lib(enumerate_solution_vertices(&sys, &EnumerationOptions::default()))?;
        *out = Box::into_raw(Box::new(SsPolytope(p)));
        Ok(())
    })
}

/// # Safety
/// `p` must be null or a handle from [`ss_identify`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ss_polytope_free(p: *mut SsPolytope) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Length of each vertex, or 0 for a null handle.
///
/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ss_polytope_dimension(p: *const SsPolytope) -> usize {
    p.as_ref().map_or(0, |p| p.0.dimension())
}

/// Number of vertices, or 0 for a null handle.
///
/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ss_polytope_vertex_count(p: *const SsPolytope) -> usize {
    p.as_ref().map_or(0, |p| p.0.vertices().len())
}

/// Copies the vertices, one per row, into `out` (`len` doubles available).
///
/// # Safety
/// `p` must be a live handle and `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ss_polytope_vertices(p: *const SsPolytope, out: *mut f64, len: usize) -> SsStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("polytope"))?;
        let flat: Vec<f64> = p.0.vertices().iter().flat_map(|v| v.iter().copied()).collect();
        write_out(out, len, &flat)
    })
}

/// Whether `point` lies in the convex hull of the vertices within `tol`.
///
/// # Safety
/// `p` must be a live handle, `point` must point to `len` doubles and
/// `inside` to one writable bool.
#[no_mangle]
pub unsafe extern "C" fn ss_polytope_contains(
    p: *const SsPolytope,
    point: *const f64,
    len: usize,
    tol: f64,
    inside: *mut bool,
) -> SsStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("polytope"))?;
        if inside.is_null() {
            return Err(null("inside"));
        }
        if len != p.0.dimension() {
            return Err((SsStatus::InvalidInput, format!("point has {len} entries, polytope dimension is {}", p.0.dimension())));
        }
        let v = DVector::from_column_slice(slice(point, len, "point")?);
        *inside = polytope_contains(&p.0, &v, tol);
        Ok(())
    })
}

/// Builds a model with `dx`-dimensional state and observation, `da`
/// actions and `dz` outcomes: `f` and `sigma_nn` are `dx × dx`, `d` is
/// `dz × da`, `e` is `dz × dx` and `sigma_oo` is `dz × dz`.
///
/// # Safety
/// Each matrix pointer must reference the stated number of doubles and `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn ss_linear_model_new(
    dx: usize,
    da: usize,
    dz: usize,
    f: *const f64,
    sigma_nn: *const f64,
    d: *const f64,
    e: *const f64,
    sigma_oo: *const f64,
    out: *mut *mut SsLinearModel,
) -> SsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let model = lib(LinearGaussianModel::new(
            matrix(f, dx, dx, "f")?,
            matrix(sigma_nn, dx, dx, "sigma_nn")?,
            matrix(d, dz, da, "d")?,
            matrix(e, dz, dx, "e")?,
            matrix(sigma_oo, dz, dz, "sigma_oo")?,
        ))?;
        *out = Box::into_raw(Box::new(SsLinearModel(model)));
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle from [`ss_linear_model_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ss_linear_model_free(m: *mut SsLinearModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Recovers `(D, E)` from the population covariances the model induces
/// under `policy_cov`, the `(da + dx)²` covariance of `(A, X)` with the
/// action first. `d_out` receives `dz × da` and `e_out` `dz × dx` doubles.
///
/// # Safety
/// `m` must be a live handle; `policy_cov`, `d_out` and `e_out` must
/// reference the stated number of doubles.
#[no_mangle]
pub unsafe extern "C" fn ss_linear_recover_effect(
    m: *const SsLinearModel,
    policy_cov: *const f64,
    lambda: f64,
    d_out: *mut f64,
    e_out: *mut f64,
) -> SsStatus {
    guard(|| {
        let m = &m.as_ref().ok_or_else(|| null("model"))?.0;
        let k = m.dim_a() + m.dim_x();
        let cov = matrix(policy_cov, k, k, "policy_cov")?;
        let blocks = lib(population_covariances(m, &cov))?;
        let (d, e) = lib(effect_from_covariances(&blocks, &m.f, &m.sigma_nn, lambda))?;
        write_out(d_out, d.len(), &row_major(&d))?;
        write_out(e_out, e.len(), &row_major(&e))
    })
}

/// `D(p ‖ q)` in nats for two aligned probability vectors.
///
/// # Safety
/// `p` and `q` must point to `len` doubles and `out` to one writable double.
#[no_mangle]
pub unsafe extern "C" fn ss_kl_divergence(p: *const f64, q: *const f64, len: usize, out: *mut f64) -> SsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = lib(kl_vectors(slice(p, len, "p")?, slice(q, len, "q")?))?;
        Ok(())
    })
}

/// Runs the randomized bound audits and reports the number of rows and of
/// violated rows.
///
/// # Safety
/// `rows` and `violations` must each be null or writable.
#[no_mangle]
pub unsafe extern "C" fn ss_audit_bounds(n_models: usize, seed: u64, rows: *mut usize, violations: *mut usize) -> SsStatus {
    guard(|| {
        let report = lib(audit_bounds(n_models, seed))?;
        if let Some(r) = rows.as_mut() {
            *r = report.rows.len();
        }
        if let Some(v) = violations.as_mut() {
            *v = report.violations;
        }
        Ok(())
    })
}
