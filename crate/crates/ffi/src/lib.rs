//! C ABI over `fracvar`.
//!
//! Every function returns an [`FvStatus`]. On failure a description is
//! available from [`fv_last_error`] on the same thread. Handles are opaque
//! and must be released with the matching `_free` function. Panics never
//! cross the boundary; they surface as [`FvStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fracvar::special;
use fracvar::solver::{solve, SolveError, SolveReport, SolverConfig};
use fracvar::variational::VariationalError;
use fracvar::{FractionalOrders, GridSpec, Lagrangian, VariationalProblem};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    /// The Lagrangian or a special function could not be evaluated.
    DomainError = 4,
    NoConvergence = 5,
    /// The caller's buffer length does not match what the call produces.
    LengthMismatch = 6,
    Panic = 7,
}

/// A variational problem: grid, orders, Lagrangian and boundary values.
pub struct FvProblem {
    inner: VariationalProblem,
}

/// The extremals found by [`fv_solve`], sorted by functional value.
pub struct FvReport {
    inner: SolveReport,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl std::fmt::Display) {
    let text = CString::new(msg.to_string().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn fail(status: FvStatus, msg: impl std::fmt::Display) -> FvStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> FvStatus) -> FvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(FvStatus::Panic, "internal panic"),
    }
}

fn variational_status(e: &VariationalError) -> FvStatus {
    match e {
        VariationalError::Lagrangian { .. } => FvStatus::DomainError,
        _ => FvStatus::InvalidArgument,
    }
}

/// Borrows `len` doubles. A null pointer is allowed only for `len == 0`.
unsafe fn slice<'a>(p: *const f64, len: usize) -> Option<&'a [f64]> {
    if len == 0 {
        Some(&[])
    } else if p.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(p, len))
    }
}

unsafe fn write_out(out: *mut f64, out_len: usize, values: &[f64]) -> FvStatus {
    if out_len != values.len() {
        return fail(FvStatus::LengthMismatch, format!("output buffer holds {out_len} values, need {}", values.len()));
    }
    if values.is_empty() {
        return FvStatus::Ok;
    }
    if out.is_null() {
        return fail(FvStatus::NullPointer, "output buffer is null");
    }
    ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    FvStatus::Ok
}

/// Message for the most recent failure on this thread, or "" if none.
/// The string stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn fv_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a problem on the grid `a, a + h, ..., a + k h`.
///
/// `left_bc` and `right_bc` point at the pinned boundary values; pass null
/// to leave that endpoint free.
///
/// # Safety
/// `lagrangian` must be a NUL-terminated string. `left_bc` and `right_bc`
/// must be null or point at a double. `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fv_problem_new(
    a: f64,
    h: f64,
    k: usize,
    alpha: f64,
    beta: f64,
    lagrangian: *const c_char,
    left_bc: *const f64,
    right_bc: *const f64,
    out: *mut *mut FvProblem,
) -> FvStatus {
    guard(|| {
        if out.is_null() || lagrangian.is_null() {
            return fail(FvStatus::NullPointer, "null argument");
        }
        *out = ptr::null_mut();
        let Ok(src) = CStr::from_ptr(lagrangian).to_str() else {
            return fail(FvStatus::ParseError, "lagrangian is not UTF-8");
        };
        let l = match Lagrangian::parse(src) {
            Ok(l) => l,
            Err(e) => return fail(FvStatus::ParseError, e),
        };
        let grid = match GridSpec::new(a, h, k) {
            Ok(g) => g,
            Err(e) => return fail(FvStatus::InvalidArgument, e),
        };
        let orders = match FractionalOrders::new(alpha, beta) {
            Ok(o) => o,
            Err(e) => return fail(FvStatus::InvalidArgument, e),
        };
        let bc = |p: *const f64| if p.is_null() { None } else { Some(*p) };
        match VariationalProblem::new(grid, orders, l, bc(left_bc), bc(right_bc)) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(FvProblem { inner: p }));
                FvStatus::Ok
            }
            Err(e) => fail(variational_status(&e), e),
        }
    })
}

/// # Safety
/// `p` must be null or a handle from [`fv_problem_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fv_problem_free(p: *mut FvProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Number of grid points, `k + 1`. Zero for a null handle.
///
/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fv_problem_point_count(p: *const FvProblem) -> usize {
    p.as_ref().map_or(0, |p| p.inner.grid().k() + 1)
}

unsafe fn with_trajectory(
    p: *const FvProblem,
    y: *const f64,
    len: usize,
    f: impl FnOnce(&VariationalProblem, &fracvar::Trajectory) -> FvStatus,
) -> FvStatus {
    guard(|| {
        let Some(p) = p.as_ref() else { return fail(FvStatus::NullPointer, "null problem") };
        let Some(values) = slice(y, len) else { return fail(FvStatus::NullPointer, "null trajectory") };
        match p.inner.trajectory(values.to_vec()) {
            Ok(t) => f(&p.inner, &t),
            Err(VariationalError::LengthMismatch { .. }) => {
                fail(FvStatus::LengthMismatch, format!("trajectory has {len} values, grid has {}", p.inner.grid().k() + 1))
            }
            Err(e) => fail(variational_status(&e), e),
        }
    })
}

/// Value of the functional at the trajectory `y[0..len]` (`len = k + 1`).
///
/// # Safety
/// `y` must point at `len` doubles and `out` at one double.
#[no_mangle]
pub unsafe extern "C" fn fv_evaluate_functional(
    p: *const FvProblem,
    y: *const f64,
    len: usize,
    out: *mut f64,
) -> FvStatus {
    with_trajectory(p, y, len, |p, t| {
        if out.is_null() {
            return fail(FvStatus::NullPointer, "null output");
        }
        match p.evaluate_functional(t) {
            Ok(v) => {
                *out = v;
                FvStatus::Ok
            }
            Err(e) => fail(variational_status(&e), e),
        }
    })
}

/// Euler–Lagrange residual at the `k - 1` interior points.
///
/// # Safety
/// `y` must point at `len` doubles and `out` at `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fv_euler_lagrange_residual(
    p: *const FvProblem,
    y: *const f64,
    len: usize,
    out: *mut f64,
    out_len: usize,
) -> FvStatus {
    with_trajectory(p, y, len, |p, t| match p.euler_lagrange_residual(t) {
        Ok(r) => write_out(out, out_len, r.values()),
        Err(e) => fail(variational_status(&e), e),
    })
}

/// Left-hand side of the Legendre condition at the `k - 1` interior points.
///
/// # Safety
/// `y` must point at `len` doubles and `out` at `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fv_legendre_lhs(
    p: *const FvProblem,
    y: *const f64,
    len: usize,
    out: *mut f64,
    out_len: usize,
) -> FvStatus {
    with_trajectory(p, y, len, |p, t| match p.legendre_lhs(t) {
        Ok(r) => write_out(out, out_len, r.values()),
        Err(e) => fail(variational_status(&e), e),
    })
}

/// Multi-start search for every extremal. `n_starts = 0` uses the default.
///
/// # Safety
/// `p` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fv_solve(p: *const FvProblem, n_starts: usize, seed: u64, out: *mut *mut FvReport) -> FvStatus {
    guard(|| {
        let (Some(p), false) = (p.as_ref(), out.is_null()) else {
            return fail(FvStatus::NullPointer, "null argument");
        };
        *out = ptr::null_mut();
        let mut cfg = SolverConfig { seed, ..SolverConfig::default() };
        if n_starts > 0 {
            cfg.n_starts = n_starts;
        }
        match solve(&p.inner, &cfg) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(FvReport { inner: r }));
                FvStatus::Ok
            }
            Err(e @ SolveError::NoConvergence { .. }) => fail(FvStatus::NoConvergence, e),
            Err(SolveError::Variational(e)) => fail(variational_status(&e), e),
            Err(e) => fail(FvStatus::InvalidArgument, e),
        }
    })
}

/// Number of candidates in the report. Zero for a null handle.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fv_report_len(r: *const FvReport) -> usize {
    r.as_ref().map_or(0, |r| r.inner.candidates.len())
}

/// Copies candidate `index`: its full trajectory (`len = k + 1`), its
/// functional value and whether it satisfies the Legendre condition.
/// `functional` and `legendre_verified` may be null.
///
/// # Safety
/// `r` must be a live handle and `values` must point at `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fv_report_candidate(
    r: *const FvReport,
    index: usize,
    values: *mut f64,
    len: usize,
    functional: *mut f64,
    legendre_verified: *mut bool,
) -> FvStatus {
    guard(|| {
        let Some(r) = r.as_ref() else { return fail(FvStatus::NullPointer, "null report") };
        let Some(c) = r.inner.candidates.get(index) else {
            return fail(FvStatus::InvalidArgument, format!("index {index} out of range"));
        };
        let s = write_out(values, len, c.trajectory.values());
        if s != FvStatus::Ok {
            return s;
        }
        if !functional.is_null() {
            *functional = c.functional_value;
        }
        if !legendre_verified.is_null() {
            *legendre_verified = c.legendre_verified;
        }
        FvStatus::Ok
    })
}

/// # Safety
/// `r` must be null or a handle from [`fv_solve`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fv_report_free(r: *mut FvReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// `Γ(x)`. Fails at the poles `x = 0, -1, -2, ...`.
///
/// # Safety
/// `out` must point at a double.
#[no_mangle]
pub unsafe extern "C" fn fv_gamma(x: f64, out: *mut f64) -> FvStatus {
    guard(|| {
        if out.is_null() {
            return fail(FvStatus::NullPointer, "null output");
        }
        match special::gamma(x) {
            Ok(v) => {
                *out = v;
                FvStatus::Ok
            }
            Err(e) => fail(FvStatus::DomainError, e),
        }
    })
}

/// The h-factorial `t_h^{(alpha)} = h^alpha Γ(t/h + 1) / Γ(t/h + 1 - alpha)`.
///
/// # Safety
/// `out` must point at a double.
#[no_mangle]
pub unsafe extern "C" fn fv_h_factorial(t: f64, alpha: f64, h: f64, out: *mut f64) -> FvStatus {
    guard(|| {
        if out.is_null() {
            return fail(FvStatus::NullPointer, "null output");
        }
        match special::h_factorial(t, alpha, h) {
            Ok(v) => {
                *out = v;
                FvStatus::Ok
            }
            Err(e) => fail(FvStatus::DomainError, e),
        }
    })
}
