//! C ABI over `relax-core`.
//!
//! Models and simulations are opaque heap handles created and released
//! through this API. Every fallible call returns a [`RelaxStatus`]; on
//! failure a description is available from [`relax_last_error`] on the same
//! thread until the next failing call. Array arguments are caller-owned and
//! must hold at least the documented number of `double`s.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use relax_core::chapman_enskog::corrector;
use relax_core::densecore::Vector;
use relax_core::harness::{RunConfig, Simulation};
use relax_core::models::{build_model, ModelParams};
use relax_core::system::RelaxationModel;
use relax_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelaxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnknownModel = 3,
    Config = 4,
    OutOfDomain = 5,
    Singular = 6,
    CflViolation = 7,
    Inadmissible = 8,
    StabilityViolation = 9,
    Io = 10,
    Internal = 11,
}

impl From<&Error> for RelaxStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::UnknownModel(_) => Self::UnknownModel,
            Error::Config(_) | Error::ModelInvalid { .. } => Self::Config,
            Error::OutOfDomain(_)
            | Error::NonPositive(_)
            | Error::InadmissiblePerturbation { .. } => Self::OutOfDomain,
            Error::SingularSystem { .. }
            | Error::SingularMatrix
            | Error::SingularAlpha
            | Error::SingularM
            | Error::SingularSigma
            | Error::IncompatibleRhs { .. } => Self::Singular,
            Error::CflViolation { .. } => Self::CflViolation,
            Error::InadmissibleResult { .. }
            | Error::DegenerateState
            | Error::EntropyIncrease { .. } => Self::Inadmissible,
            Error::StabilityViolation { .. } => Self::StabilityViolation,
            Error::Io(_) => Self::Io,
            _ => Self::InvalidArgument,
        }
    }
}

/// Opaque model handle.
pub struct RelaxModel {
    inner: Box<dyn RelaxationModel>,
}

/// Opaque simulation handle.
pub struct RelaxSim {
    inner: Simulation,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: RelaxStatus, msg: impl Into<String>) -> RelaxStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard<F: FnOnce() -> Result<(), RelaxStatus>>(f: F) -> RelaxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RelaxStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(RelaxStatus::Internal, "panic inside relax"),
    }
}

fn core_err(e: Error) -> RelaxStatus {
    fail(RelaxStatus::from(&e), e.to_string())
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, RelaxStatus> {
    if p.is_null() {
        return Err(fail(RelaxStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(RelaxStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, RelaxStatus> {
    p.as_ref()
        .ok_or_else(|| fail(RelaxStatus::NullPointer, format!("{what} is null")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], RelaxStatus> {
    if p.is_null() {
        return Err(fail(RelaxStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], RelaxStatus> {
    if p.is_null() {
        return Err(fail(RelaxStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

/// Message for the last failing call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn relax_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn relax_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a model by registry name. `keys`/`values` hold `num_params`
/// parameter overrides and may be null when `num_params` is 0.
///
/// # Safety
/// `name` and each of `keys[0..num_params]` must be NUL-terminated strings;
/// `values` must hold `num_params` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relax_model_create(
    name: *const c_char,
    keys: *const *const c_char,
    values: *const f64,
    num_params: usize,
    out: *mut *mut RelaxModel,
) -> RelaxStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(RelaxStatus::NullPointer, "out is null"));
        }
        *out = ptr::null_mut();
        let name = str_arg(name, "name")?;
        let mut params = ModelParams::default();
        if num_params > 0 {
            if keys.is_null() || values.is_null() {
                return Err(fail(RelaxStatus::NullPointer, "parameter arrays are null"));
            }
            for k in 0..num_params {
                let key = str_arg(*keys.add(k), "parameter key")?;
                params.set(key, *values.add(k)).map_err(core_err)?;
            }
        }
        let inner = build_model(name, &params).map_err(core_err)?;
        *out = Box::into_raw(Box::new(RelaxModel { inner }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from [`relax_model_create`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn relax_model_free(model: *mut RelaxModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of state components `N`; 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn relax_model_state_dim(model: *const RelaxModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.state_dim())
}

/// Number of equilibrium components `n`; 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn relax_model_equil_dim(model: *const RelaxModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.equil_dim())
}

/// First-order corrector at `(u, du_dx)`: writes `U1` (`N` doubles) and the
/// effective flux (`n` doubles). Either output may be null.
///
/// # Safety
/// `u` and `du_dx` must hold `n` doubles; non-null outputs must be writable
/// for `N` and `n` doubles respectively.
#[no_mangle]
pub unsafe extern "C" fn relax_corrector(
    model: *const RelaxModel,
    u: *const f64,
    du_dx: *const f64,
    out_u1: *mut f64,
    out_flux: *mut f64,
) -> RelaxStatus {
    guard(|| {
        let m = &ref_arg(model, "model")?.inner;
        let n = m.equil_dim();
        let u = Vector::from_slice(slice_arg(u, n, "u")?);
        let du = Vector::from_slice(slice_arg(du_dx, n, "du_dx")?);
        let r = corrector(m.as_ref(), &u, &du).map_err(core_err)?;
        if !out_u1.is_null() {
            out_slice(out_u1, m.state_dim(), "out_u1")?.copy_from_slice(r.u1.as_slice());
        }
        if !out_flux.is_null() {
            out_slice(out_flux, n, "out_flux")?.copy_from_slice(r.effective_flux.as_slice());
        }
        Ok(())
    })
}

/// Effective diffusion matrix `M(u)` (row-major, `n*n` doubles). `du_dx` is
/// only read by gradient-dependent models and may be null otherwise.
///
/// # Safety
/// `u` (and `du_dx` when non-null) must hold `n` doubles; `out` must be
/// writable for `n*n` doubles.
#[no_mangle]
pub unsafe extern "C" fn relax_effective_matrix(
    model: *const RelaxModel,
    u: *const f64,
    du_dx: *const f64,
    out: *mut f64,
) -> RelaxStatus {
    guard(|| {
        let m = &ref_arg(model, "model")?.inner;
        let n = m.equil_dim();
        let u = Vector::from_slice(slice_arg(u, n, "u")?);
        let du = if du_dx.is_null() {
            Vector::zeros(n)
        } else {
            Vector::from_slice(slice_arg(du_dx, n, "du_dx")?)
        };
        let mat = m.effective_matrix(&u, &du).map_err(core_err)?;
        let dst = out_slice(out, n * n, "out")?;
        for i in 0..n {
            dst[i * n..(i + 1) * n].copy_from_slice(mat.row(i));
        }
        Ok(())
    })
}

/// Creates a simulation from TOML configuration text. Output settings in the
/// text are ignored; results are read back through the handle.
///
/// # Safety
/// `config_toml` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relax_sim_create(
    config_toml: *const c_char,
    out: *mut *mut RelaxSim,
) -> RelaxStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(RelaxStatus::NullPointer, "out is null"));
        }
        *out = ptr::null_mut();
        let text = str_arg(config_toml, "config_toml")?;
        let mut cfg = RunConfig::from_toml(text).map_err(core_err)?;
        cfg.output.dir = None;
        let inner = Simulation::from_config(&cfg).map_err(core_err)?;
        *out = Box::into_raw(Box::new(RelaxSim { inner }));
        Ok(())
    })
}

/// # Safety
/// `sim` must come from [`relax_sim_create`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn relax_sim_free(sim: *mut RelaxSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Advances to `t_target`. `out_steps`, when non-null, receives the number
/// of steps taken. On failure the simulation keeps the last good state.
///
/// # Safety
/// `sim` must be a live handle; `out_steps` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn relax_sim_advance(
    sim: *mut RelaxSim,
    t_target: f64,
    out_steps: *mut usize,
) -> RelaxStatus {
    guard(|| {
        let s = sim
            .as_mut()
            .ok_or_else(|| fail(RelaxStatus::NullPointer, "sim is null"))?;
        if !t_target.is_finite() {
            return Err(fail(RelaxStatus::InvalidArgument, "t_target is not finite"));
        }
        let steps = s.inner.advance_to(t_target).map_err(core_err)?;
        if !out_steps.is_null() {
            *out_steps = steps;
        }
        Ok(())
    })
}

/// Current time; NaN for a null handle.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn relax_sim_time(sim: *const RelaxSim) -> f64 {
    sim.as_ref().map_or(f64::NAN, |s| s.inner.time())
}

/// Number of cells; 0 for a null handle.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn relax_sim_num_cells(sim: *const RelaxSim) -> usize {
    sim.as_ref().map_or(0, |s| s.inner.grid().num_cells())
}

/// State components per cell; 0 for a null handle.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn relax_sim_state_dim(sim: *const RelaxSim) -> usize {
    sim.as_ref().map_or(0, |s| s.inner.model().state_dim())
}

/// Copies the cell states, cell-major, into `out` of length `len`, which
/// must equal `num_cells * state_dim`.
///
/// # Safety
/// `sim` must be a live handle; `out` must be writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn relax_sim_copy_state(
    sim: *const RelaxSim,
    out: *mut f64,
    len: usize,
) -> RelaxStatus {
    guard(|| {
        let s = &ref_arg(sim, "sim")?.inner;
        let nn = s.model().state_dim();
        let need = s.grid().num_cells() * nn;
        if len != need {
            return Err(fail(
                RelaxStatus::InvalidArgument,
                format!("buffer holds {len} doubles, state needs {need}"),
            ));
        }
        let dst = out_slice(out, len, "out")?;
        for (chunk, cell) in dst.chunks_mut(nn).zip(&s.grid().cells) {
            chunk.copy_from_slice(cell.as_slice());
        }
        Ok(())
    })
}
