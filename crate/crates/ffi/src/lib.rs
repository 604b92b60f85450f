//! C interface over opaque problem and solver handles.
//!
//! Every fallible function returns an [`IdsStatus`]. On failure the message is
//! kept per thread and can be copied out with [`ids_last_error`]. Panics are
//! caught at the boundary and reported as `IDS_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use idsopt::ids::{ids_evaluate, ids_range_restricted, AgdConfig};
use idsopt::instances::{gen_bilinear, gen_random_lp};
use idsopt::linalg::{MetricKind, SparseMatrix};
use idsopt::problem::{lp_to_saddle, read_mps, read_native, SaddleProblem};
use idsopt::solvers::{Solver, SolverConfig, SolverState};
use idsopt::trace::Algorithm;
use idsopt::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IdsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    StepSize = 4,
    Numerical = 5,
    Io = 6,
    Parse = 7,
    Unsupported = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IdsAlgorithm {
    Pdhg = 0,
    Ppm = 1,
    Ladmm = 2,
    Admm = 3,
}

impl From<IdsAlgorithm> for Algorithm {
    fn from(a: IdsAlgorithm) -> Self {
        match a {
            IdsAlgorithm::Pdhg => Algorithm::Pdhg,
            IdsAlgorithm::Ppm => Algorithm::Ppm,
            IdsAlgorithm::Ladmm => Algorithm::Ladmm,
            IdsAlgorithm::Admm => Algorithm::Admm,
        }
    }
}

/// A saddle problem and an optional starting point.
pub struct IdsProblem {
    problem: SaddleProblem,
    start: Option<Vec<f64>>,
}

/// A solver bound to a copy of a problem, holding the current iterate.
pub struct IdsSolver {
    problem: SaddleProblem,
    config: SolverConfig,
    state: SolverState,
    previous: Option<Vec<f64>>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> IdsStatus {
    match e {
        Error::DimensionMismatch { .. } => IdsStatus::DimensionMismatch,
        Error::InvalidArgument(_) | Error::Config(_) | Error::OutsideDomain { .. } => IdsStatus::InvalidArgument,
        Error::StepSize(_) => IdsStatus::StepSize,
        Error::Io { .. } => IdsStatus::Io,
        Error::Parse { .. } | Error::MpsUnsupported { .. } => IdsStatus::Parse,
        Error::Unsupported(_) | Error::UnsupportedConjugate { .. } | Error::SemiDefiniteMetric => {
            IdsStatus::Unsupported
        }
        _ => IdsStatus::Numerical,
    }
}

struct Fail(IdsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(IdsStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(IdsStatus::InvalidArgument, msg.into())
}

fn guard(body: impl FnOnce() -> Result<(), Fail>) -> IdsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            IdsStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            IdsStatus::Panic
        }
    }
}

unsafe fn slice<'a>(ptr: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn slice_mut<'a>(ptr: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, len))
}

unsafe fn handle<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, Fail> {
    ptr.as_ref().ok_or_else(|| null(what))
}

unsafe fn handle_mut<'a, T>(ptr: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    ptr.as_mut().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

fn copy_into(dst: &mut [f64], src: &[f64]) -> Result<(), Fail> {
    if dst.len() != src.len() {
        return Err(Error::DimensionMismatch {
            expected: src.len(),
            got: dst.len(),
        }
        .into());
    }
    dst.copy_from_slice(src);
    Ok(())
}

/// Copies the last error message of this thread into `buf` (NUL terminated,
/// truncated to `cap`). Returns the full message length plus one.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ids_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_bytes_with_nul();
        if !buf.is_null() && cap > 0 {
            let n = (bytes.len() - 1).min(cap - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ids_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Reads a problem file: MPS when the name ends in `.mps`, the native format otherwise.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ids_problem_load(path: *const c_char, out: *mut *mut IdsProblem) -> IdsStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path).to_str().map_err(|_| invalid("path is not UTF-8"))?;
        let path = Path::new(path);
        let loaded = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("mps")) {
            IdsProblem {
                problem: lp_to_saddle(&read_mps(path)?)?,
                start: None,
            }
        } else {
            let file = read_native(path)?;
            IdsProblem {
                problem: file.problem,
                start: file.start,
            }
        };
        put(out, loaded)
    })
}

/// Random LP with a planted optimum and its generator start point.
///
/// # Safety
/// `out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ids_problem_random_lp(
    n: usize,
    m: usize,
    density: f64,
    seed: u64,
    out: *mut *mut IdsProblem,
) -> IdsStatus {
    guard(|| {
        let spec = gen_random_lp(n, m, density, seed)?;
        put(
            out,
            IdsProblem {
                problem: spec.problem,
                start: Some(spec.z0),
            },
        )
    })
}

/// `min_x max_y cᵀx + yᵀAx − bᵀy` for a dense row-major `m × n` matrix `a`.
/// `c` and `b` may be null for zero vectors. Fails when no saddle point exists.
///
/// # Safety
/// `a` must hold `m·n` values, `c` (if not null) `n` and `b` (if not null) `m`.
#[no_mangle]
pub unsafe extern "C" fn ids_problem_bilinear(
    m: usize,
    n: usize,
    a: *const f64,
    c: *const f64,
    b: *const f64,
    out: *mut *mut IdsProblem,
) -> IdsStatus {
    guard(|| {
        if m == 0 || n == 0 {
            return Err(invalid("dimensions must be positive"));
        }
        let a = slice(a, m * n, "a")?;
        let rows: Vec<Vec<f64>> = a.chunks(n).map(<[f64]>::to_vec).collect();
        let a = SparseMatrix::from_dense_rows(&rows)?;
        let vector = |v: *const f64, dim: usize, what: &str| -> Result<Vec<f64>, Fail> {
            if v.is_null() {
                return Ok(vec![0.0; dim]);
            }
            Ok(slice(v, dim, what)?.to_vec())
        };
        let spec = gen_bilinear(vector(c, n, "c")?, vector(b, m, "b")?, a)?;
        put(
            out,
            IdsProblem {
                problem: spec.problem,
                start: None,
            },
        )
    })
}

/// Primal and dual dimensions.
///
/// # Safety
/// `problem` must be a live handle; `n` and `m` writable pointers.
#[no_mangle]
pub unsafe extern "C" fn ids_problem_dims(problem: *const IdsProblem, n: *mut usize, m: *mut usize) -> IdsStatus {
    guard(|| {
        let p = handle(problem, "problem")?;
        if n.is_null() || m.is_null() {
            return Err(null("n or m"));
        }
        *n = p.problem.n();
        *m = p.problem.m();
        Ok(())
    })
}

/// Copies the known saddle point into `buf` of length `n + m`.
/// `IDS_STATUS_UNSUPPORTED` when none is attached.
///
/// # Safety
/// `problem` must be a live handle and `buf` hold `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn ids_problem_z_star(problem: *const IdsProblem, buf: *mut f64, len: usize) -> IdsStatus {
    guard(|| {
        let p = handle(problem, "problem")?;
        let zs = p
            .problem
            .z_star()
            .ok_or_else(|| Fail(IdsStatus::Unsupported, "no saddle point attached".into()))?;
        copy_into(slice_mut(buf, len, "buf")?, zs)
    })
}

/// Copies the stored start point into `buf` of length `n + m`.
/// `IDS_STATUS_UNSUPPORTED` when none is stored.
///
/// # Safety
/// `problem` must be a live handle and `buf` hold `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn ids_problem_start(problem: *const IdsProblem, buf: *mut f64, len: usize) -> IdsStatus {
    guard(|| {
        let p = handle(problem, "problem")?;
        let z0 = p
            .start
            .as_deref()
            .ok_or_else(|| Fail(IdsStatus::Unsupported, "no start point stored".into()))?;
        copy_into(slice_mut(buf, len, "buf")?, z0)
    })
}

/// # Safety
/// `problem` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ids_problem_free(problem: *mut IdsProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Binds `algorithm` to a copy of `problem`, starting at `z0` (length `n + m`).
/// A `step_size` that is not positive selects the default step.
///
/// # Safety
/// `problem` must be a live handle, `z0` hold `len` values and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn ids_solver_new(
    problem: *const IdsProblem,
    algorithm: IdsAlgorithm,
    step_size: f64,
    z0: *const f64,
    len: usize,
    out: *mut *mut IdsSolver,
) -> IdsStatus {
    guard(|| {
        let p = handle(problem, "problem")?;
        let z0 = slice(z0, len, "z0")?;
        p.problem.check_dim(z0)?;
        let mut config = SolverConfig::new(algorithm.into());
        config.step_size = (step_size > 0.0).then_some(step_size);
        // fail early on a bad step
        Solver::new(&p.problem, &config)?;
        put(
            out,
            IdsSolver {
                problem: p.problem.clone(),
                config,
                state: SolverState::new(z0.to_vec()),
                previous: None,
            },
        )
    })
}

/// Advances `iters` iterations. On failure the iterate is left at the last
/// successful step.
///
/// # Safety
/// `solver` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ids_solver_run(solver: *mut IdsSolver, iters: usize) -> IdsStatus {
    guard(|| {
        let s = handle_mut(solver, "solver")?;
        let engine = Solver::new(&s.problem, &s.config)?;
        for _ in 0..iters {
            let next = engine.step(&s.state)?;
            s.previous = Some(std::mem::replace(&mut s.state, next).z);
        }
        Ok(())
    })
}

/// Copies the current iterate into `buf` of length `n + m`.
///
/// # Safety
/// `solver` must be a live handle and `buf` hold `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn ids_solver_iterate(solver: *const IdsSolver, buf: *mut f64, len: usize) -> IdsStatus {
    guard(|| {
        let s = handle(solver, "solver")?;
        copy_into(slice_mut(buf, len, "buf")?, &s.state.z)
    })
}

/// Iterations taken so far.
///
/// # Safety
/// `solver` must be a live handle and `k` writable.
#[no_mangle]
pub unsafe extern "C" fn ids_solver_iteration(solver: *const IdsSolver, k: *mut usize) -> IdsStatus {
    guard(|| {
        let s = handle(solver, "solver")?;
        if k.is_null() {
            return Err(null("k"));
        }
        *k = s.state.k;
        Ok(())
    })
}

/// IDS of the current iterate in the solver's metric, with the AGD iteration
/// count (null to skip). Under ADMM the value is range-restricted and needs
/// at least one step.
///
/// # Safety
/// `solver` must be a live handle, `value` writable, `agd_iters` null or writable.
#[no_mangle]
pub unsafe extern "C" fn ids_solver_ids(solver: *const IdsSolver, value: *mut f64, agd_iters: *mut usize) -> IdsStatus {
    guard(|| {
        let s = handle(solver, "solver")?;
        if value.is_null() {
            return Err(null("value"));
        }
        let engine = Solver::new(&s.problem, &s.config)?;
        let metric = engine.metric();
        let res = match metric.kind() {
            MetricKind::Admm { .. } => {
                let witness = s.previous.as_deref().map(|prev| (prev, s.state.z.as_slice()));
                ids_range_restricted(&s.problem, metric, &s.state.z, witness)?
            }
            _ => ids_evaluate(&s.problem, metric, &s.state.z, &AgdConfig::default())?,
        };
        *value = res.value;
        if !agd_iters.is_null() {
            *agd_iters = res.agd_iters;
        }
        Ok(())
    })
}

/// # Safety
/// `solver` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ids_solver_free(solver: *mut IdsSolver) {
    if !solver.is_null() {
        drop(Box::from_raw(solver));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    fn last_error() -> String {
        let mut buf = [0 as c_char; 256];
        unsafe { ids_last_error(buf.as_mut_ptr(), buf.len()) };
        unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
    }

    #[test]
    fn bilinear_round_trip() {
        let a = [1.0, 0.0, 0.0, 2.0];
        let mut p = ptr::null_mut();
        assert_eq!(unsafe { ids_problem_bilinear(2, 2, a.as_ptr(), ptr::null(), ptr::null(), &mut p) }, IdsStatus::Ok);
        let z0 = [1.0, 1.0, 1.0, 1.0];
        let mut s = ptr::null_mut();
        let st = unsafe { ids_solver_new(p, IdsAlgorithm::Pdhg, 0.25, z0.as_ptr(), 4, &mut s) };
        assert_eq!(st, IdsStatus::Ok);
        assert_eq!(unsafe { ids_solver_run(s, 600) }, IdsStatus::Ok);
        let mut v = f64::NAN;
        assert_eq!(unsafe { ids_solver_ids(s, &mut v, ptr::null_mut()) }, IdsStatus::Ok);
        assert!(v < 1e-10, "{v}");
        let mut k = 0;
        unsafe { ids_solver_iteration(s, &mut k) };
        assert_eq!(k, 600);
        unsafe {
            ids_solver_free(s);
            ids_problem_free(p);
        }
    }

    #[test]
    fn errors_carry_status_and_message() {
        let a = [2.0];
        let mut p = ptr::null_mut();
        unsafe { ids_problem_bilinear(1, 1, a.as_ptr(), ptr::null(), ptr::null(), &mut p) };
        let mut s = ptr::null_mut();
        let st = unsafe { ids_solver_new(p, IdsAlgorithm::Pdhg, 0.9, [0.0, 0.0].as_ptr(), 2, &mut s) };
        assert_eq!(st, IdsStatus::StepSize);
        assert!(s.is_null());
        assert!(last_error().contains("step size"), "{}", last_error());

        let st = unsafe { ids_solver_new(p, IdsAlgorithm::Pdhg, 0.0, [0.0].as_ptr(), 1, &mut s) };
        assert_eq!(st, IdsStatus::DimensionMismatch);
        assert_eq!(unsafe { ids_solver_run(ptr::null_mut(), 1) }, IdsStatus::NullPointer);
        let mut buf = [0.0; 2];
        assert_eq!(unsafe { ids_problem_z_star(p, buf.as_mut_ptr(), 2) }, IdsStatus::Ok);
        assert_eq!(unsafe { ids_problem_start(p, buf.as_mut_ptr(), 2) }, IdsStatus::Unsupported);
        unsafe { ids_problem_free(p) };
    }

    #[test]
    fn truncated_error_message() {
        set_error("abcdef");
        let mut buf = [1 as c_char; 4];
        let need = unsafe { ids_last_error(buf.as_mut_ptr(), buf.len()) };
        assert_eq!(need, 7);
        assert_eq!(unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap(), "abc");
    }

    #[test]
    fn panics_become_status() {
        let st = guard(|| panic!("boom"));
        assert_eq!(st, IdsStatus::Panic);
        assert_eq!(last_error(), "panic: boom");
    }
}
