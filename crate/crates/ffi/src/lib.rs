//! C ABI over `houghfit`.
//!
//! Datasets and fits are opaque heap handles released with their `_free`
//! function. Every fallible call returns an [`HfStatus`] and writes results
//! through out-pointers; on failure the message is available from
//! [`hf_last_error`] on the same thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use houghfit::error::Error;
use houghfit::estimators::{fit_ht, fit_lms, fit_ls, fit_strip, FitResult};
use houghfit::grid::GridSpec;
use houghfit::model::{Dataset, DesignSpec, ModelSpec, NoiseSpec, Theta};
use houghfit::objective::objective_value;
use houghfit::population::inlier_probability;
use houghfit::quadrature::QuadratureSpec;
use houghfit::robustness::{asymptotic_breakdown, breakdown_points};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NotImplemented = 3,
    SingularDesign = 4,
    AssumptionViolated = 5,
    Numeric = 6,
    Io = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HfMethod {
    Ht = 0,
    Strip = 1,
    Lms = 2,
    Ls = 3,
}

/// Planar search lattice `[a_lo, a_hi] x [b_lo, b_hi]`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct HfGrid {
    pub a_lo: f64,
    pub a_hi: f64,
    pub b_lo: f64,
    pub b_hi: f64,
    pub res_a: usize,
    pub res_b: usize,
}

/// Finite-sample breakdown points as reduced fractions.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct HfBreakdown {
    pub add_num: u64,
    pub add_den: u64,
    pub rep_num: u64,
    pub rep_den: u64,
    pub add: f64,
    pub rep: f64,
}

/// Opaque dataset handle.
pub struct HfDataset(Dataset);

/// Opaque fit handle.
pub struct HfFit(FitResult);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> HfStatus {
    match e {
        Error::InvalidArgument(_) => HfStatus::InvalidArgument,
        Error::NotImplemented(_) => HfStatus::NotImplemented,
        Error::SingularDesign(_) => HfStatus::SingularDesign,
        Error::AssumptionViolated(_) => HfStatus::AssumptionViolated,
        Error::Numeric(_) => HfStatus::Numeric,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => HfStatus::Io,
    }
}

fn guard(f: impl FnOnce() -> Result<(), HfStatus>) -> HfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            HfStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            HfStatus::Panic
        }
    }
}

fn lib<T>(r: houghfit::Result<T>) -> Result<T, HfStatus> {
    r.map_err(|e| {
        set_error(&e.to_string());
        status_of(&e)
    })
}

fn null() -> HfStatus {
    set_error("null pointer argument");
    HfStatus::NullPointer
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, HfStatus> {
    p.as_ref().ok_or_else(null)
}

unsafe fn write<T>(out: *mut T, v: T) -> Result<(), HfStatus> {
    if out.is_null() {
        return Err(null());
    }
    out.write(v);
    Ok(())
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn hf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies `n` observations. `*out` receives a handle to free with
/// [`hf_dataset_free`].
///
/// # Safety
/// `xs` and `ys` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_dataset_new(xs: *const f64, ys: *const f64, n: usize, out: *mut *mut HfDataset) -> HfStatus {
    guard(|| {
        if xs.is_null() || ys.is_null() || out.is_null() {
            return Err(null());
        }
        let xs = std::slice::from_raw_parts(xs, n);
        let ys = std::slice::from_raw_parts(ys, n);
        let data = lib(Dataset::from_xy(xs, ys))?;
        write(out, Box::into_raw(Box::new(HfDataset(data))))
    })
}

/// # Safety
/// `ds` must be null or a handle from [`hf_dataset_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hf_dataset_free(ds: *mut HfDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// # Safety
/// `ds` must be a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn hf_dataset_len(ds: *const HfDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.len())
}

fn grid_of(g: &HfGrid) -> houghfit::Result<GridSpec> {
    GridSpec::planar((g.a_lo, g.a_hi), (g.b_lo, g.b_hi), (g.res_a, g.res_b))
}

/// Fits `ds` on `grid`. `r` is ignored by LMS and LS; LS ignores the grid
/// and yields a fit with no solution nodes.
///
/// # Safety
/// `ds` and `grid` must be valid pointers; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_fit(
    ds: *const HfDataset,
    method: HfMethod,
    grid: *const HfGrid,
    r: f64,
    out: *mut *mut HfFit,
) -> HfStatus {
    guard(|| {
        let data = &deref(ds)?.0;
        let g = lib(grid_of(deref(grid)?))?;
        if out.is_null() {
            return Err(null());
        }
        let fit = match method {
            HfMethod::Ht => lib(fit_ht(data, &g, r))?,
            HfMethod::Strip => lib(fit_strip(data, &g, r))?,
            HfMethod::Lms => lib(fit_lms(data, &g))?,
            HfMethod::Ls => {
                let theta_hat = lib(fit_ls(data))?;
                FitResult {
                    method: houghfit::Method::Ls,
                    theta_hat,
                    max_value: f64::NAN,
                    max_count: None,
                    solution_nodes: Vec::new(),
                    n_components: 0,
                    r: None,
                    n: data.len(),
                    grid: g,
                    warnings: Vec::new(),
                }
            }
        };
        write(out, Box::into_raw(Box::new(HfFit(fit))))
    })
}

/// # Safety
/// `fit` must be null or a handle from [`hf_fit`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hf_fit_free(fit: *mut HfFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// # Safety
/// `fit` must be a live fit handle; `a` and `b` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_fit_theta(fit: *const HfFit, a: *mut f64, b: *mut f64) -> HfStatus {
    guard(|| {
        let t = &deref(fit)?.0.theta_hat;
        if a.is_null() || b.is_null() {
            return Err(null());
        }
        write(a, t.a())?;
        write(b, t.b())
    })
}

/// Maximal objective value (NaN for LS; the squared median residual for LMS).
///
/// # Safety
/// `fit` must be a live fit handle.
#[no_mangle]
pub unsafe extern "C" fn hf_fit_max_value(fit: *const HfFit) -> f64 {
    fit.as_ref().map_or(f64::NAN, |f| f.0.max_value)
}

/// Number of lattice nodes attaining the optimum.
///
/// # Safety
/// `fit` must be a live fit handle.
#[no_mangle]
pub unsafe extern "C" fn hf_fit_solution_count(fit: *const HfFit) -> usize {
    fit.as_ref().map_or(0, |f| f.0.solution_nodes.len())
}

/// # Safety
/// `fit` must be a live fit handle.
#[no_mangle]
pub unsafe extern "C" fn hf_fit_component_count(fit: *const HfFit) -> usize {
    fit.as_ref().map_or(0, |f| f.0.n_components)
}

/// Nonzero when the solution set touches the grid boundary.
///
/// # Safety
/// `fit` must be a live fit handle.
#[no_mangle]
pub unsafe extern "C" fn hf_fit_touches_boundary(fit: *const HfFit) -> i32 {
    fit.as_ref().map_or(0, |f| f.0.touches_boundary() as i32)
}

/// Fraction of observations inside the template of `(a, b)` at radius `r`.
///
/// # Safety
/// `ds` must be a live dataset handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_objective_value(ds: *const HfDataset, a: f64, b: f64, r: f64, out: *mut f64) -> HfStatus {
    guard(|| {
        let data = &deref(ds)?.0;
        let v = lib(objective_value(data, &Theta::planar(a, b), r))?;
        write(out, v)
    })
}

/// Exact breakdown points for `n` observations of which `inlier_count` lie
/// in the optimal template.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_breakdown_points(n: u64, inlier_count: u64, out: *mut HfBreakdown) -> HfStatus {
    guard(|| {
        let rep = lib(breakdown_points(n, inlier_count))?;
        write(
            out,
            HfBreakdown {
                add_num: *rep.eps_add.0.numer(),
                add_den: *rep.eps_add.0.denom(),
                rep_num: *rep.eps_rep.0.numer(),
                rep_den: *rep.eps_rep.0.denom(),
                add: rep.eps_add.to_f64(),
                rep: rep.eps_rep.to_f64(),
            },
        )
    })
}

/// Large-sample limits `p / (1 + p)` and `p / 2`.
///
/// # Safety
/// `add` and `rep` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_asymptotic_breakdown(p: f64, add: *mut f64, rep: *mut f64) -> HfStatus {
    guard(|| {
        let (x, y) = lib(asymptotic_breakdown(p))?;
        if add.is_null() || rep.is_null() {
            return Err(null());
        }
        write(add, x)?;
        write(rep, y)
    })
}

/// Probability that an observation from the model with Gaussian noise of
/// standard deviation `sigma` and `X ~ U[x_lo, x_hi]` falls in the template
/// of the true line at radius `r`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_inlier_probability(sigma: f64, x_lo: f64, x_hi: f64, r: f64, out: *mut f64) -> HfStatus {
    guard(|| {
        let spec = ModelSpec::new(0.0, 0.0, NoiseSpec::Gaussian { sigma }, DesignSpec::Uniform { lo: x_lo, hi: x_hi });
        let q = lib(inlier_probability(&spec, r, &QuadratureSpec::default()))?;
        write(out, q.value)
    })
}
