//! C ABI for translab.
//!
//! Conventions:
//! - every fallible function returns a [`TlStatus`]; results go through out
//!   pointers that are written only on success;
//! - objects are opaque handles created by `tl_*_new`/`tl_*_from_json` and
//!   released by the matching `tl_*_free`;
//! - strings returned by the library are owned by the caller and must be
//!   released with [`tl_string_free`];
//! - after a failure [`tl_last_error`] describes it until the next call on
//!   the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use translab::cli::{solve, SolveConfig};
use translab::experiments::ExperimentConfig;
use translab::fdsolver::GridFunction;
use translab::kernels::{self, BoundaryTrace};
use translab::{specfun, Error, Point2};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TlStatus {
    Ok = 0,
    Domain = 1,
    Overflow = 2,
    Underflow = 3,
    Singularity = 4,
    Config = 5,
    Divergence = 6,
    Numeric = 7,
    Fit = 8,
    Io = 9,
    Json = 10,
    NullPointer = 11,
    InvalidUtf8 = 12,
    Panic = 13,
}

impl From<&Error> for TlStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain(_) => TlStatus::Domain,
            Error::Overflow(_) => TlStatus::Overflow,
            Error::Underflow(_) => TlStatus::Underflow,
            Error::Singularity(_) => TlStatus::Singularity,
            Error::Config(_) => TlStatus::Config,
            Error::Divergence(_) => TlStatus::Divergence,
            Error::Numeric(_) => TlStatus::Numeric,
            Error::Fit(_) => TlStatus::Fit,
            Error::Io(_) => TlStatus::Io,
            Error::Json(_) => TlStatus::Json,
        }
    }
}

/// Boundary trace handle.
pub struct TlTrace(BoundaryTrace);

/// Grid function handle (a solved field on a structured grid).
pub struct TlGridFunction(GridFunction);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Fail(TlStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(TlStatus::from(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> TlStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TlStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(&msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            TlStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(TlStatus::NullPointer, format!("null pointer: {what}"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(TlStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn write<T>(out: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    *out = v;
    Ok(())
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

fn json_fail(what: &str, e: serde_json::Error) -> Fail {
    Fail(TlStatus::Json, format!("{what}: {e}"))
}

/// Message for the last failure on this thread; empty after a success.
/// The pointer stays valid until the next library call on this thread.
#[no_mangle]
pub extern "C" fn tl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn tl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

unsafe fn scalar(f: fn(f64) -> translab::Result<f64>, x: f64, out: *mut f64) -> TlStatus {
    guard(|| {
        let v = f(x)?;
        write(out, v, "out")
    })
}

/// Modified Bessel function `K0(x)`, `x > 0`.
///
/// # Safety
/// `out` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn tl_bessel_k0(x: f64, out: *mut f64) -> TlStatus {
    scalar(specfun::bessel_k0, x, out)
}

/// Modified Bessel function `K1(x)`, `x > 0`.
///
/// # Safety
/// `out` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn tl_bessel_k1(x: f64, out: *mut f64) -> TlStatus {
    scalar(specfun::bessel_k1, x, out)
}

/// `e^x K0(x)`, `x > 0`.
///
/// # Safety
/// `out` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn tl_bessel_k0_scaled(x: f64, out: *mut f64) -> TlStatus {
    scalar(specfun::bessel_k0_scaled, x, out)
}

/// `e^x K1(x)`, `x > 0`.
///
/// # Safety
/// `out` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn tl_bessel_k1_scaled(x: f64, out: *mut f64) -> TlStatus {
    scalar(specfun::bessel_k1_scaled, x, out)
}

/// Modified Bessel function `I0(x)`.
///
/// # Safety
/// `out` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn tl_bessel_i0(x: f64, out: *mut f64) -> TlStatus {
    scalar(specfun::bessel_i0, x, out)
}

/// Exponential integral `Ei(x)`, `x < 0`.
///
/// # Safety
/// `out` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn tl_expint_ei(x: f64, out: *mut f64) -> TlStatus {
    scalar(specfun::expint_ei, x, out)
}

/// Parses a trace from JSON.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tl_trace_from_json(json: *const c_char, out: *mut *mut TlTrace) -> TlStatus {
    guard(|| {
        let s = read_str(json, "json")?;
        let t: BoundaryTrace = serde_json::from_str(s).map_err(|e| json_fail("trace", e))?;
        t.validate()?;
        write(out, Box::into_raw(Box::new(TlTrace(t))), "out")
    })
}

/// Piecewise step trace `c_left` for `x < x0`, `c_right` after.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tl_trace_step(x0: f64, c_left: f64, c_right: f64, out: *mut *mut TlTrace) -> TlStatus {
    guard(|| {
        let t = BoundaryTrace::step(x0, c_left, c_right)?;
        write(out, Box::into_raw(Box::new(TlTrace(t))), "out")
    })
}

/// # Safety
/// `trace` must come from this library and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn tl_trace_free(trace: *mut TlTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// # Safety
/// `trace` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tl_trace_eval(trace: *const TlTrace, x: f64, out: *mut f64) -> TlStatus {
    guard(|| {
        let t = handle(trace, "trace")?;
        write(out, t.0.eval(x), "out")
    })
}

/// Bounded L-harmonic extension of `trace` from the line `x3 = b`,
/// evaluated at `(x2, x3)` with `x3 < b`.
///
/// # Safety
/// `trace` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tl_poisson_duffin(trace: *const TlTrace, b: f64, x2: f64, x3: f64, out: *mut f64) -> TlStatus {
    guard(|| {
        let t = handle(trace, "trace")?;
        let v = kernels::poisson_duffin(&t.0, b, Point2::new(x2, x3))?;
        write(out, v, "out")
    })
}

/// Heat evolution of `trace` for time `t > 0`, evaluated at `x`.
///
/// # Safety
/// `trace` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tl_heat_convolve(trace: *const TlTrace, x: f64, t: f64, out: *mut f64) -> TlStatus {
    guard(|| {
        let tr = handle(trace, "trace")?;
        let v = kernels::heat_convolve(&tr.0, x, t)?;
        write(out, v, "out")
    })
}

/// Solves a Dirichlet problem described by a JSON solve config (the same
/// schema as the `solve` command; missing fields take defaults).
///
/// # Safety
/// `config_json` must be NUL-terminated; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tl_solve(config_json: *const c_char, out: *mut *mut TlGridFunction) -> TlStatus {
    guard(|| {
        let s = read_str(config_json, "config_json")?;
        let cfg: SolveConfig = serde_json::from_str(s).map_err(|e| json_fail("solve config", e))?;
        let res = solve(&cfg)?;
        write(out, Box::into_raw(Box::new(TlGridFunction(res.solution))), "out")
    })
}

/// # Safety
/// `gf` must come from this library and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn tl_grid_function_free(gf: *mut TlGridFunction) {
    if !gf.is_null() {
        drop(Box::from_raw(gf));
    }
}

/// Node counts along x2 and x3, and the spacing.
///
/// # Safety
/// `gf` must be a live handle; the out pointers valid.
#[no_mangle]
pub unsafe extern "C" fn tl_grid_function_shape(
    gf: *const TlGridFunction,
    nx2: *mut usize,
    nx3: *mut usize,
    h: *mut f64,
) -> TlStatus {
    guard(|| {
        let g = &handle(gf, "gf")?.0.grid;
        if nx2.is_null() || nx3.is_null() || h.is_null() {
            return Err(null("out"));
        }
        *nx2 = g.nx2;
        *nx3 = g.nx3;
        *h = g.h;
        Ok(())
    })
}

/// Value at node `(i, j)`; NaN for nodes outside the domain.
///
/// # Safety
/// `gf` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tl_grid_function_value(
    gf: *const TlGridFunction,
    i: usize,
    j: usize,
    out: *mut f64,
) -> TlStatus {
    guard(|| {
        let u = &handle(gf, "gf")?.0;
        if i >= u.grid.nx2 || j >= u.grid.nx3 {
            return Err(Fail(TlStatus::Domain, format!("node ({i}, {j}) is off the grid")));
        }
        write(out, u.value(i, j).unwrap_or(f64::NAN), "out")
    })
}

/// Bilinear interpolation at `(x2, x3)`.
///
/// # Safety
/// `gf` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tl_grid_function_interpolate(
    gf: *const TlGridFunction,
    x2: f64,
    x3: f64,
    out: *mut f64,
) -> TlStatus {
    guard(|| {
        let u = &handle(gf, "gf")?.0;
        let v = u
            .interpolate(Point2::new(x2, x3))
            .ok_or_else(|| Fail(TlStatus::Domain, format!("({x2}, {x3}) is not inside the solved region")))?;
        write(out, v, "out")
    })
}

/// Runs a named experiment. `config_json` may be null for defaults. On
/// success `*report_json` receives the canonical JSON report (free it with
/// [`tl_string_free`]) and `*passed` is 1 when every verdict holds.
///
/// # Safety
/// `name` must be NUL-terminated, `config_json` null or NUL-terminated, and
/// the out pointers valid.
#[no_mangle]
pub unsafe extern "C" fn tl_run_experiment(
    name: *const c_char,
    config_json: *const c_char,
    report_json: *mut *mut c_char,
    passed: *mut i32,
) -> TlStatus {
    guard(|| {
        let name = read_str(name, "name")?;
        let value = if config_json.is_null() {
            serde_json::json!({})
        } else {
            serde_json::from_str(read_str(config_json, "config_json")?).map_err(|e| json_fail("config", e))?
        };
        if report_json.is_null() || passed.is_null() {
            return Err(null("out"));
        }
        let report = ExperimentConfig::from_parts(name, value)?.run()?;
        *passed = i32::from(report.passed());
        *report_json = into_c_string(report.to_json());
        Ok(())
    })
}
