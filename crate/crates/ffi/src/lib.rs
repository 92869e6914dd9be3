//! C ABI for `schwarz-core`.
//!
//! Every function returns a [`SchwarzStatus`]. On failure a message is kept in
//! thread-local storage and can be read with [`schwarz_last_error_message`].
//! Panics never cross the boundary; they are reported as `SCHWARZ_PANIC`.
//!
//! The matching C declarations live in `include/schwarz.h`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use schwarz_core::engine::{interface_errors, run_schwarz, CoupledProblem};
use schwarz_core::experiment::{run_experiment, ExperimentConfig};
use schwarz_core::laplace1d::{Laplace1DConfig, Laplace1DProblem};
use schwarz_core::{
    Accelerator, AcceleratorConfig, AcceleratorKind, ConvergenceCriteria, ConvergenceReport,
    InterfaceLayout, InterfaceState, SchwarzError,
};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchwarzStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidConfig = 2,
    LengthMismatch = 3,
    BackendFailure = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchwarzMethod {
    Unrelaxed = 0,
    Classical = 1,
    Aitken = 2,
    Anderson = 3,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct SchwarzAcceleratorConfig {
    /// One of the `SchwarzMethod` values.
    pub method: c_int,
    pub rho: f64,
    pub rho_init: f64,
    pub n0: usize,
    pub m_and: usize,
    pub memory_adaptation: bool,
    pub m_bar: usize,
    pub eps_and: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct SchwarzCriteria {
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub maxit: usize,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct SchwarzRunResult {
    pub converged: bool,
    pub aborted: bool,
    pub iterations: usize,
    /// Errors of the last iteration; NaN if no iteration completed.
    pub e_abs: f64,
    pub e_rel: f64,
}

/// Evaluates `T(g)`: reads `len` values from `g`, writes `len` values to `tg`.
/// A nonzero return aborts the run.
pub type SchwarzOperator = Option<
    unsafe extern "C" fn(user_data: *mut c_void, g: *const f64, tg: *mut f64, len: usize) -> c_int,
>;

/// Opaque accelerator handle.
pub struct SchwarzAccelerator {
    inner: Accelerator,
    layout: InterfaceLayout,
    e_rel_history: Vec<f64>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &SchwarzError) -> SchwarzStatus {
    match e {
        SchwarzError::InvalidConfig(_) | SchwarzError::Parse(_) => SchwarzStatus::InvalidConfig,
        SchwarzError::LayoutMismatch { .. } => SchwarzStatus::LengthMismatch,
        _ => SchwarzStatus::BackendFailure,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (SchwarzStatus, String)>) -> SchwarzStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SchwarzStatus::Ok,
        Ok(Err((status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            SchwarzStatus::Panic
        }
    }
}

fn fail(e: SchwarzError) -> (SchwarzStatus, String) {
    fail_ref(&e)
}

fn fail_ref(e: &SchwarzError) -> (SchwarzStatus, String) {
    (status_of(e), e.to_string())
}

fn null(what: &str) -> (SchwarzStatus, String) {
    (SchwarzStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a, T>(
    p: *const T,
    len: usize,
    what: &str,
) -> Result<&'a [T], (SchwarzStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(
    p: *mut T,
    len: usize,
    what: &str,
) -> Result<&'a mut [T], (SchwarzStatus, String)> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn accelerator_config(
    c: &SchwarzAcceleratorConfig,
) -> Result<AcceleratorConfig, (SchwarzStatus, String)> {
    let kind = match c.method {
        0 => AcceleratorKind::Unrelaxed,
        1 => AcceleratorKind::Classical,
        2 => AcceleratorKind::Aitken,
        3 => AcceleratorKind::Anderson,
        other => {
            return Err((
                SchwarzStatus::InvalidConfig,
                format!("unknown method {other}"),
            ))
        }
    };
    let cfg = AcceleratorConfig {
        kind,
        rho: c.rho,
        rho_init: c.rho_init,
        n0: c.n0,
        m_and: c.m_and,
        memory_adaptation: c.memory_adaptation,
        m_bar: c.m_bar,
        eps_and: c.eps_and,
    };
    cfg.validate().map_err(fail)?;
    Ok(cfg)
}

fn criteria(c: &SchwarzCriteria) -> Result<ConvergenceCriteria, (SchwarzStatus, String)> {
    ConvergenceCriteria::new(c.eps_abs, c.eps_rel, c.maxit).map_err(fail)
}

fn layout(lengths: &[usize]) -> Result<InterfaceLayout, (SchwarzStatus, String)> {
    if lengths.is_empty() || lengths.contains(&0) {
        return Err((
            SchwarzStatus::InvalidConfig,
            "interface lengths must be a nonempty list of positive counts".into(),
        ));
    }
    Ok(InterfaceLayout::from_lengths(lengths))
}

fn summarize(report: &ConvergenceReport) -> SchwarzRunResult {
    let last = report.last();
    SchwarzRunResult {
        converged: report.converged,
        aborted: report.aborted(),
        iterations: report.iterations,
        e_abs: last.map_or(f64::NAN, |r| r.e_abs),
        e_rel: last.map_or(f64::NAN, |r| r.e_rel),
    }
}

/// Default settings for `method` (rho = rho_init = 1, n0 = 2, m_and = 20,
/// m_bar = 3, eps_and = 1e-5, no memory adaptation).
#[no_mangle]
pub extern "C" fn schwarz_accelerator_config_default(method: c_int) -> SchwarzAcceleratorConfig {
    let d = AcceleratorConfig::default();
    SchwarzAcceleratorConfig {
        method,
        rho: d.rho,
        rho_init: d.rho_init,
        n0: d.n0,
        m_and: d.m_and,
        memory_adaptation: d.memory_adaptation,
        m_bar: d.m_bar,
        eps_and: d.eps_and,
    }
}

/// Creates an accelerator for interface data split into `n_interfaces`
/// blocks of the given lengths.
///
/// # Safety
/// `config` and `out` must be valid pointers; `lengths` must point to
/// `n_interfaces` values.
#[no_mangle]
pub unsafe extern "C" fn schwarz_accelerator_new(
    config: *const SchwarzAcceleratorConfig,
    lengths: *const usize,
    n_interfaces: usize,
    out: *mut *mut SchwarzAccelerator,
) -> SchwarzStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let cfg = accelerator_config(config.as_ref().ok_or_else(|| null("config"))?)?;
        let layout = layout(slice(lengths, n_interfaces, "lengths")?)?;
        let inner = Accelerator::new(cfg).map_err(fail)?;
        *out = Box::into_raw(Box::new(SchwarzAccelerator {
            inner,
            layout,
            e_rel_history: Vec::new(),
        }));
        Ok(())
    })
}

/// Computes `g^(k+1)` from `g^(k)` and `T(g^(k))`, writing it to `out`.
///
/// `k` starts at 1 and must increase by one per call. The relative errors
/// needed for memory adaptation are tracked by the handle.
///
/// # Safety
/// `handle` must come from `schwarz_accelerator_new`; `g`, `tg` and `out`
/// must each point to `len` values.
#[no_mangle]
pub unsafe extern "C" fn schwarz_accelerator_update(
    handle: *mut SchwarzAccelerator,
    k: usize,
    g: *const f64,
    tg: *const f64,
    len: usize,
    out: *mut f64,
) -> SchwarzStatus {
    guard(|| {
        let h = handle.as_mut().ok_or_else(|| null("handle"))?;
        if len != h.layout.len() {
            return Err((
                SchwarzStatus::LengthMismatch,
                format!("expected {} interface values, got {len}", h.layout.len()),
            ));
        }
        let (g, tg) = (slice(g, len, "g")?, slice(tg, len, "tg")?);
        let out = slice_mut(out, len, "out")?;
        if k == 0 {
            return Err((
                SchwarzStatus::InvalidConfig,
                "iteration index starts at 1".into(),
            ));
        }
        if k == 1 {
            h.inner.reset();
            h.e_rel_history.clear();
        }
        let (next, _) = h
            .inner
            .update(k, &h.layout, g, tg, &h.e_rel_history)
            .map_err(fail)?;
        let (_, e_rel) =
            interface_errors(&h.layout.split(g), &h.layout.split(&next)).map_err(fail)?;
        h.e_rel_history.push(e_rel);
        out.copy_from_slice(&next);
        Ok(())
    })
}

/// Clears the accelerator's history.
///
/// # Safety
/// `handle` must come from `schwarz_accelerator_new`.
#[no_mangle]
pub unsafe extern "C" fn schwarz_accelerator_reset(
    handle: *mut SchwarzAccelerator,
) -> SchwarzStatus {
    guard(|| {
        let h = handle.as_mut().ok_or_else(|| null("handle"))?;
        h.inner.reset();
        h.e_rel_history.clear();
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `handle` must come from `schwarz_accelerator_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn schwarz_accelerator_free(handle: *mut SchwarzAccelerator) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Absolute and relative errors between two interface iterates.
///
/// # Safety
/// `prev` and `curr` must point to `sum(lengths)` values, `lengths` to
/// `n_interfaces` values, and `e_abs`, `e_rel` must be valid.
#[no_mangle]
pub unsafe extern "C" fn schwarz_interface_errors(
    prev: *const f64,
    curr: *const f64,
    lengths: *const usize,
    n_interfaces: usize,
    e_abs: *mut f64,
    e_rel: *mut f64,
) -> SchwarzStatus {
    guard(|| {
        let layout = layout(slice(lengths, n_interfaces, "lengths")?)?;
        let (p, c) = (
            slice(prev, layout.len(), "prev")?,
            slice(curr, layout.len(), "curr")?,
        );
        if e_abs.is_null() || e_rel.is_null() {
            return Err(null("error output"));
        }
        let (a, r) = interface_errors(&layout.split(p), &layout.split(c)).map_err(fail)?;
        *e_abs = a;
        *e_rel = r;
        Ok(())
    })
}

struct CallbackProblem {
    op: unsafe extern "C" fn(*mut c_void, *const f64, *mut f64, usize) -> c_int,
    user_data: *mut c_void,
    layout: InterfaceLayout,
}

impl CoupledProblem for CallbackProblem {
    fn layout(&self) -> InterfaceLayout {
        self.layout.clone()
    }

    fn evaluate(&mut self, g: &InterfaceState) -> schwarz_core::Result<InterfaceState> {
        let mut tg = vec![0.0; g.len()];
        let code = unsafe {
            (self.op)(
                self.user_data,
                g.values().as_ptr(),
                tg.as_mut_ptr(),
                tg.len(),
            )
        };
        if code != 0 {
            return Err(SchwarzError::Backend(format!(
                "operator callback returned {code}"
            )));
        }
        g.with_values(tg)
    }
}

/// Runs the accelerated fixed-point iteration `g <- T(g)` with a caller
/// supplied operator. `g` holds the initial guess on entry and the final
/// iterate on return (also after an abort).
///
/// # Safety
/// `op` must be a valid function; `g` must point to `sum(lengths)` values;
/// `config`, `criteria` and `result` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn schwarz_run_fixed_point(
    op: SchwarzOperator,
    user_data: *mut c_void,
    config: *const SchwarzAcceleratorConfig,
    criteria_in: *const SchwarzCriteria,
    lengths: *const usize,
    n_interfaces: usize,
    g: *mut f64,
    result: *mut SchwarzRunResult,
) -> SchwarzStatus {
    guard(|| {
        let op = op.ok_or_else(|| null("op"))?;
        let result = result.as_mut().ok_or_else(|| null("result"))?;
        let cfg = accelerator_config(config.as_ref().ok_or_else(|| null("config"))?)?;
        let crit = criteria(criteria_in.as_ref().ok_or_else(|| null("criteria"))?)?;
        let layout = layout(slice(lengths, n_interfaces, "lengths")?)?;
        let g = slice_mut(g, layout.len(), "g")?;
        let g0 = InterfaceState::new(g.to_vec(), layout.clone()).map_err(fail)?;

        let mut problem = CallbackProblem {
            op,
            user_data,
            layout,
        };
        let mut acc = Accelerator::new(cfg).map_err(fail)?;
        let report = run_schwarz(&mut problem, &mut acc, &crit, g0).map_err(fail)?;
        *result = summarize(&report);
        g.copy_from_slice(report.final_state.values());
        match &report.failure {
            Some(e) => Err(fail_ref(e)),
            None => Ok(()),
        }
    })
}

/// Runs the 1D Laplace coupling problem with interface position `x_bar`.
///
/// # Safety
/// `config`, `criteria` and `result` must be valid; `g_final` may be null.
#[no_mangle]
pub unsafe extern "C" fn schwarz_laplace1d_run(
    x_bar: f64,
    n_points: usize,
    g_init: f64,
    config: *const SchwarzAcceleratorConfig,
    criteria_in: *const SchwarzCriteria,
    result: *mut SchwarzRunResult,
    g_final: *mut f64,
) -> SchwarzStatus {
    guard(|| {
        let result = result.as_mut().ok_or_else(|| null("result"))?;
        let cfg = accelerator_config(config.as_ref().ok_or_else(|| null("config"))?)?;
        let crit = criteria(criteria_in.as_ref().ok_or_else(|| null("criteria"))?)?;
        let lap = Laplace1DConfig {
            x_bar,
            n_points,
            g_init,
        };
        lap.validate().map_err(fail)?;
        let mut problem = Laplace1DProblem::new(lap).map_err(fail)?;
        let g0 = problem.initial_state();
        let mut acc = Accelerator::new(cfg).map_err(fail)?;
        let report = run_schwarz(&mut problem, &mut acc, &crit, g0).map_err(fail)?;
        *result = summarize(&report);
        if let Some(out) = g_final.as_mut() {
            *out = report.final_state.values()[0];
        }
        match &report.failure {
            Some(e) => Err(fail_ref(e)),
            None => Ok(()),
        }
    })
}

/// Runs every point of a TOML experiment config and writes the usual output
/// files to `out_dir` (or the config's default directory if null).
/// `n_aborted` receives the number of runs that aborted.
///
/// # Safety
/// `config_path` must be a NUL-terminated string; `out_dir` may be null;
/// `n_aborted` must be valid.
#[no_mangle]
pub unsafe extern "C" fn schwarz_run_config(
    config_path: *const c_char,
    out_dir: *const c_char,
    n_aborted: *mut usize,
) -> SchwarzStatus {
    guard(|| {
        if config_path.is_null() {
            return Err(null("config_path"));
        }
        let n_aborted = n_aborted.as_mut().ok_or_else(|| null("n_aborted"))?;
        let to_str = |p: *const c_char| {
            CStr::from_ptr(p).to_str().map_err(|_| {
                (
                    SchwarzStatus::InvalidConfig,
                    "path is not valid UTF-8".to_string(),
                )
            })
        };
        let config = ExperimentConfig::load(Path::new(to_str(config_path)?)).map_err(fail)?;
        let dir = if out_dir.is_null() {
            config.output_dir()
        } else {
            to_str(out_dir)?.into()
        };
        let result = run_experiment(&config, &dir).map_err(fail)?;
        *n_aborted = result.failures().count();
        Ok(())
    })
}

/// Message of the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn schwarz_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn schwarz_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
