//! C interface to `holelab`.
//!
//! Objects are opaque handles created by `*_new` functions and released with
//! the matching `*_free`. Every fallible call returns a [`HolelabStatus`];
//! the message of the most recent failure on the calling thread is available
//! through [`holelab_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use holelab::field::FieldEvaluator;
use holelab::solver::{limit_constant, solve_density, solve_limit};
use holelab::{BoundaryData, BoundaryShape, DensitySolution, Error, Lattice, PeriodicField, ProblemData};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HolelabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    InvalidShape = 3,
    Containment = 4,
    Singularity = 5,
    IllConditioned = 6,
    Residual = 7,
    NearBoundary = 8,
    OutsideDomain = 9,
    Numerical = 10,
    BufferTooSmall = 11,
    Panic = 12,
}

impl From<&Error> for HolelabStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidLattice(_) | Error::InvalidInput(_) => HolelabStatus::InvalidInput,
            Error::InvalidShape(_) => HolelabStatus::InvalidShape,
            Error::Containment { .. } => HolelabStatus::Containment,
            Error::Singularity { .. } => HolelabStatus::Singularity,
            Error::IllConditioned { .. } => HolelabStatus::IllConditioned,
            Error::Residual { .. } => HolelabStatus::Residual,
            Error::NearBoundary { .. } => HolelabStatus::NearBoundary,
            Error::OutsideDomain { .. } => HolelabStatus::OutsideDomain,
            Error::Numerical(_) => HolelabStatus::Numerical,
            Error::AtEps { source, .. } => HolelabStatus::from(source.as_ref()),
        }
    }
}

/// One Fourier mode `c_k exp(2 pi i k~ . x)` of the forcing term.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct HolelabMode {
    pub k1: i64,
    pub k2: i64,
    pub re: f64,
    pub im: f64,
}

/// Rectangular period lattice `q Z^2`.
pub struct HolelabLattice(Lattice);

/// Lattice, hole, data and discretization for one value of eps.
pub struct HolelabProblem(ProblemData);

/// Boundary density together with a field evaluator.
pub struct HolelabSolution {
    density: DensitySolution,
    evaluator: FieldEvaluator,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), HolelabStatus>) -> HolelabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HolelabStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            HolelabStatus::Panic
        }
    }
}

fn fail(e: Error) -> HolelabStatus {
    let s = HolelabStatus::from(&e);
    set_error(e.to_string());
    s
}

fn null(what: &str) -> HolelabStatus {
    set_error(format!("null pointer: {what}"));
    HolelabStatus::NullPointer
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], HolelabStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, HolelabStatus> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, HolelabStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Copies the last error message of this thread into `buf` (NUL terminated,
/// truncated to `len` bytes). Returns the full message length excluding the
/// terminator, or 0 when there is no message.
///
/// # Safety
/// `buf` must be NULL or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn holelab_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Static description of a status code; unknown codes give "unknown status".
#[no_mangle]
pub extern "C" fn holelab_status_str(status: c_int) -> *const c_char {
    let s: &'static [u8] = match status {
        0 => b"ok\0",
        1 => b"null pointer\0",
        2 => b"invalid input\0",
        3 => b"invalid shape\0",
        4 => b"hole not contained in the cell\0",
        5 => b"point at a lattice singularity\0",
        6 => b"ill-conditioned system\0",
        7 => b"linear solve residual too large\0",
        8 => b"point too close to the boundary\0",
        9 => b"point outside the domain\0",
        10 => b"numerical failure\0",
        11 => b"buffer too small\0",
        12 => b"internal panic\0",
        _ => b"unknown status\0",
    };
    s.as_ptr().cast()
}

/// Creates the lattice with periods `q11`, `q22`.
///
/// # Safety
/// `out_lattice` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn holelab_lattice_new(q11: f64, q22: f64, out_lattice: *mut *mut HolelabLattice) -> HolelabStatus {
    guard(|| {
        let slot = out(out_lattice, "out_lattice")?;
        let lat = Lattice::new(q11, q22).map_err(fail)?;
        *slot = Box::into_raw(Box::new(HolelabLattice(lat)));
        Ok(())
    })
}

/// # Safety
/// `lattice` must be NULL or a handle from [`holelab_lattice_new`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn holelab_lattice_free(lattice: *mut HolelabLattice) {
    if !lattice.is_null() {
        drop(Box::from_raw(lattice));
    }
}

unsafe fn green_like(
    lattice: *const HolelabLattice,
    x1: f64,
    x2: f64,
    value: *mut f64,
    gradient: *mut f64,
    remainder: bool,
) -> HolelabStatus {
    guard(|| {
        let lat = &handle(lattice, "lattice")?.0;
        let value = out(value, "value")?;
        let g = if remainder { lat.remainder([x1, x2]) } else { lat.green([x1, x2]) }.map_err(fail)?;
        *value = g.value;
        if !gradient.is_null() {
            *gradient = g.gradient[0];
            *gradient.add(1) = g.gradient[1];
        }
        Ok(())
    })
}

/// Periodic Green function `S_q` at `(x1, x2)`; the gradient is written to
/// `gradient[0..2]` unless `gradient` is NULL.
///
/// # Safety
/// `lattice` must be a live handle, `value` writable, `gradient` NULL or two writable doubles.
#[no_mangle]
pub unsafe extern "C" fn holelab_lattice_green(
    lattice: *const HolelabLattice,
    x1: f64,
    x2: f64,
    value: *mut f64,
    gradient: *mut f64,
) -> HolelabStatus {
    green_like(lattice, x1, x2, value, gradient, false)
}

/// Regular part `R_q = S_q - S_2`, finite at the lattice points.
///
/// # Safety
/// As for [`holelab_lattice_green`].
#[no_mangle]
pub unsafe extern "C" fn holelab_lattice_remainder(
    lattice: *const HolelabLattice,
    x1: f64,
    x2: f64,
    value: *mut f64,
    gradient: *mut f64,
) -> HolelabStatus {
    green_like(lattice, x1, x2, value, gradient, true)
}

/// Builds a problem. `shape` holds `[a0, b0, a1, b1, c1, d1, ...]` with
/// `phi(t) = (a0, b0) + sum_k (a_k cos kt + b_k sin kt, c_k cos kt + d_k sin kt)`;
/// `g` holds `[a0, a1, b1, ...]`; `modes` lists the forcing coefficients
/// (conjugate partners are added).
///
/// # Safety
/// Array pointers must be valid for their lengths; `lattice` must be a live handle.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn holelab_problem_new(
    lattice: *const HolelabLattice,
    p1: f64,
    p2: f64,
    eps: f64,
    shape: *const f64,
    shape_len: usize,
    g: *const f64,
    g_len: usize,
    modes: *const HolelabMode,
    modes_len: usize,
    n: usize,
    out_problem: *mut *mut HolelabProblem,
) -> HolelabStatus {
    guard(|| {
        let lat = &handle(lattice, "lattice")?.0;
        let slot = out(out_problem, "out_problem")?;
        let shape = BoundaryShape::new(slice(shape, shape_len, "shape")?.to_vec()).map_err(fail)?;
        let g = BoundaryData::trig(slice(g, g_len, "g")?.to_vec()).map_err(fail)?;
        let modes: Vec<_> = slice(modes, modes_len, "modes")?.iter().map(|m| (m.k1, m.k2, m.re, m.im)).collect();
        let f = PeriodicField::from_modes(lat, &modes).map_err(fail)?;
        let data = ProblemData::new(lat, eps, [p1, p2], shape, g, f, n).map_err(fail)?;
        *slot = Box::into_raw(Box::new(HolelabProblem(data)));
        Ok(())
    })
}

/// Copy of `problem` at another eps.
///
/// # Safety
/// `problem` must be a live handle and `out_problem` writable.
#[no_mangle]
pub unsafe extern "C" fn holelab_problem_with_eps(
    problem: *const HolelabProblem,
    eps: f64,
    out_problem: *mut *mut HolelabProblem,
) -> HolelabStatus {
    guard(|| {
        let data = &handle(problem, "problem")?.0;
        let slot = out(out_problem, "out_problem")?;
        let next = data.with_eps(eps).map_err(fail)?;
        *slot = Box::into_raw(Box::new(HolelabProblem(next)));
        Ok(())
    })
}

/// # Safety
/// `problem` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn holelab_problem_free(problem: *mut HolelabProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Solves the boundary system. At `eps = 0` the limiting system is solved.
///
/// # Safety
/// `problem` must be a live handle and `out_solution` writable.
#[no_mangle]
pub unsafe extern "C" fn holelab_solve(problem: *const HolelabProblem, out_solution: *mut *mut HolelabSolution) -> HolelabStatus {
    guard(|| {
        let data = &handle(problem, "problem")?.0;
        let slot = out(out_solution, "out_solution")?;
        let density = if data.eps() == 0.0 { solve_limit(data) } else { solve_density(data) }.map_err(fail)?;
        let evaluator = FieldEvaluator::new(data, &density).map_err(fail)?;
        *slot = Box::into_raw(Box::new(HolelabSolution { density, evaluator }));
        Ok(())
    })
}

/// # Safety
/// `solution` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn holelab_solution_free(solution: *mut HolelabSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Number of boundary nodes of the solution.
///
/// # Safety
/// `solution` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn holelab_solution_len(solution: *const HolelabSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.density.theta.len())
}

/// Density at the nodes `t_j = 2 pi j / N`, the additive constant and the
/// condition estimate. `constant` and `condition` may be NULL.
///
/// # Safety
/// `theta` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn holelab_solution_density(
    solution: *const HolelabSolution,
    theta: *mut f64,
    len: usize,
    constant: *mut f64,
    condition: *mut f64,
) -> HolelabStatus {
    guard(|| {
        let s = handle(solution, "solution")?;
        let n = s.density.theta.len();
        if len < n {
            set_error(format!("density needs {n} values, buffer holds {len}"));
            return Err(HolelabStatus::BufferTooSmall);
        }
        if theta.is_null() {
            return Err(null("theta"));
        }
        ptr::copy_nonoverlapping(s.density.theta.as_ptr(), theta, n);
        if let Some(c) = constant.as_mut() {
            *c = s.density.constant;
        }
        if let Some(c) = condition.as_mut() {
            *c = s.density.condition;
        }
        Ok(())
    })
}

/// Evaluates the solution at `(x1, x2)`. `ufrak` receives the analytic part;
/// `u` (may be NULL) receives the full solution, which requires `eps > 0`.
///
/// # Safety
/// `solution` must be a live handle, `ufrak` writable.
#[no_mangle]
pub unsafe extern "C" fn holelab_solution_eval(
    solution: *const HolelabSolution,
    x1: f64,
    x2: f64,
    ufrak: *mut f64,
    u: *mut f64,
) -> HolelabStatus {
    guard(|| {
        let s = handle(solution, "solution")?;
        let ufrak = out(ufrak, "ufrak")?;
        let sample = s.evaluator.sample([x1, x2]).map_err(fail)?;
        if let Some(u) = u.as_mut() {
            *u = sample.u.ok_or_else(|| fail(Error::InvalidInput("u is defined for eps > 0 only".into())))?;
        }
        *ufrak = sample.ufrak;
        Ok(())
    })
}

/// Limiting constant computed through the adjoint density.
///
/// # Safety
/// `problem` must be a live handle and `value` writable.
#[no_mangle]
pub unsafe extern "C" fn holelab_limit_constant(problem: *const HolelabProblem, value: *mut f64) -> HolelabStatus {
    guard(|| {
        let data = &handle(problem, "problem")?.0;
        let value = out(value, "value")?;
        *value = limit_constant(data).map_err(fail)?;
        Ok(())
    })
}
