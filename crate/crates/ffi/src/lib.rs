//! C ABI over `propsim`.
//!
//! Scenarios and trajectories cross the boundary as opaque handles; every
//! call returns a [`PropsimStatus`] and writes results through out-pointers.
//! On failure, [`propsim_last_error`] describes what went wrong on the
//! calling thread. Strings returned to the caller are released with
//! [`propsim_string_free`], handles with their own `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use propsim::io::{parse_trajectory_csv, serialize_trajectory_csv};
use propsim::{
    classify, critical_capital, lyapunov_estimate, parse_scenario, simulate, Error, FundState, ImpactModel,
    ModelParams, Scenario, Termination, Thresholds, Trajectory,
};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropsimStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    SchemaError = 3,
    RangeError = 4,
    DegenerateDenominator = 5,
    NoRootFound = 6,
    MaturityCollapse = 7,
    UndefinedCritical = 8,
    ImpactModelMismatch = 9,
    InvalidAxis = 10,
    IndexOutOfBounds = 11,
    Panic = 99,
}

/// Why a trajectory stopped.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropsimTermination {
    HorizonReached = 0,
    Bankrupt = 1,
    DegenerateDenominator = 2,
    MaturityCollapse = 3,
    NumericalOverflow = 4,
}

/// One recorded fund state.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropsimState {
    /// Years since the start.
    pub t: f64,
    /// Capital, millions.
    pub capital: f64,
    /// Average maturity of the book, years.
    pub avg_maturity: f64,
    /// Implied mark, vol points.
    pub implied: f64,
    /// Vega notional, millions per vol point.
    pub vega: f64,
}

/// Opaque scenario handle.
pub struct PropsimScenario(Scenario);

/// Opaque trajectory handle.
pub struct PropsimTrajectory(Trajectory);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(PropsimStatus, String);

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let status = match err {
            Error::DegenerateDenominator { .. } => PropsimStatus::DegenerateDenominator,
            Error::NoRootFound { .. } => PropsimStatus::NoRootFound,
            Error::MaturityCollapse { .. } => PropsimStatus::MaturityCollapse,
            Error::UndefinedCritical => PropsimStatus::UndefinedCritical,
            Error::ImpactModelMismatch { .. } => PropsimStatus::ImpactModelMismatch,
            Error::Schema { .. } => PropsimStatus::SchemaError,
            Error::Range { .. } => PropsimStatus::RangeError,
            Error::InvalidAxis(_) => PropsimStatus::InvalidAxis,
        };
        Failure(status, err.to_string())
    }
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

/// Runs `f`, turning errors and panics into a status plus a thread-local message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PropsimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            PropsimStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_last_error(&format!("internal panic: {message}"));
            PropsimStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(PropsimStatus::NullArgument, format!("`{what}` is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(PropsimStatus::InvalidUtf8, format!("`{what}`: {e}")))
}

fn owned_string(s: String) -> *mut c_char {
    // Serialized output never contains interior NULs.
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread. Never null.
#[no_mangle]
pub extern "C" fn propsim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn propsim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn propsim_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// The built-in reference scenario.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn propsim_scenario_reference(out: *mut *mut PropsimScenario) -> PropsimStatus {
    guard(|| put(out, Box::into_raw(Box::new(PropsimScenario(Scenario::reference()))), "out"))
}

/// Parses and validates a scenario JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn propsim_scenario_from_json(
    json: *const c_char,
    out: *mut *mut PropsimScenario,
) -> PropsimStatus {
    guard(|| {
        let scenario = parse_scenario(text(json, "json")?)?;
        put(out, Box::into_raw(Box::new(PropsimScenario(scenario))), "out")
    })
}

/// Canonical JSON of a scenario, defaults resolved. Free with
/// `propsim_string_free`.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn propsim_scenario_to_json(
    scenario: *const PropsimScenario,
    out: *mut *mut c_char,
) -> PropsimStatus {
    guard(|| {
        let s = borrow(scenario, "scenario")?;
        put(out, owned_string(s.0.to_json()), "out")
    })
}

/// # Safety
/// `scenario` must be null or a live handle, and is dangling afterwards.
#[no_mangle]
pub unsafe extern "C" fn propsim_scenario_free(scenario: *mut PropsimScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Runs the scenario to termination.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn propsim_simulate(
    scenario: *const PropsimScenario,
    out: *mut *mut PropsimTrajectory,
) -> PropsimStatus {
    guard(|| {
        let s = borrow(scenario, "scenario")?;
        put(out, Box::into_raw(Box::new(PropsimTrajectory(simulate(&s.0)))), "out")
    })
}

/// Number of recorded states (steps + 1); 0 for a null handle.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn propsim_trajectory_len(traj: *const PropsimTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.states.len())
}

/// # Safety
/// `traj` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn propsim_trajectory_state(
    traj: *const PropsimTrajectory,
    index: usize,
    out: *mut PropsimState,
) -> PropsimStatus {
    guard(|| {
        let t = borrow(traj, "traj")?;
        let FundState {
            t: time,
            capital,
            avg_maturity,
            implied,
            vega,
        } = *t.0.states.get(index).ok_or_else(|| {
            Failure(
                PropsimStatus::IndexOutOfBounds,
                format!("state {index} of {}", t.0.states.len()),
            )
        })?;
        put(
            out,
            PropsimState {
                t: time,
                capital,
                avg_maturity,
                implied,
                vega,
            },
            "out",
        )
    })
}

/// # Safety
/// `traj` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn propsim_trajectory_termination(
    traj: *const PropsimTrajectory,
    out: *mut PropsimTermination,
) -> PropsimStatus {
    guard(|| {
        let t = borrow(traj, "traj")?;
        let term = match t.0.termination {
            Termination::HorizonReached => PropsimTermination::HorizonReached,
            Termination::Bankrupt => PropsimTermination::Bankrupt,
            Termination::DegenerateDenominator => PropsimTermination::DegenerateDenominator,
            Termination::MaturityCollapse => PropsimTermination::MaturityCollapse,
            Termination::NumericalOverflow => PropsimTermination::NumericalOverflow,
        };
        put(out, term, "out")
    })
}

/// Trajectory CSV text. Free with `propsim_string_free`.
///
/// # Safety
/// `traj` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn propsim_trajectory_to_csv(
    traj: *const PropsimTrajectory,
    out: *mut *mut c_char,
) -> PropsimStatus {
    guard(|| {
        let t = borrow(traj, "traj")?;
        put(out, owned_string(serialize_trajectory_csv(&t.0)), "out")
    })
}

/// Reads a trajectory back from its CSV text.
///
/// # Safety
/// `csv` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn propsim_trajectory_from_csv(
    csv: *const c_char,
    out: *mut *mut PropsimTrajectory,
) -> PropsimStatus {
    guard(|| {
        let traj = parse_trajectory_csv(text(csv, "csv")?)?;
        put(out, Box::into_raw(Box::new(PropsimTrajectory(traj))), "out")
    })
}

/// # Safety
/// `traj` must be null or a live handle, and is dangling afterwards.
#[no_mangle]
pub unsafe extern "C" fn propsim_trajectory_free(traj: *mut PropsimTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Regime report as one JSON object, using the scenario's thresholds.
/// Free with `propsim_string_free`.
///
/// # Safety
/// `traj` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn propsim_classify_json(
    traj: *const PropsimTrajectory,
    out: *mut *mut c_char,
) -> PropsimStatus {
    guard(|| {
        let t = borrow(traj, "traj")?;
        let report = classify(&t.0, &Thresholds::from(&t.0.scenario.guards));
        let json = serde_json::to_string(&report).expect("reports serialize");
        put(out, owned_string(json), "out")
    })
}

/// Critical capital for `kappa` and `lambda`. Pass NaN as `maturity` to skip
/// the exact value, which is then written as NaN. `exact_out` may be null.
///
/// # Safety
/// `approx_out` must be valid for writes; `exact_out` null or valid.
#[no_mangle]
pub unsafe extern "C" fn propsim_critical_capital(
    kappa: f64,
    lambda: f64,
    maturity: f64,
    dt: f64,
    approx_out: *mut f64,
    exact_out: *mut f64,
) -> PropsimStatus {
    guard(|| {
        let params = ModelParams {
            kappa,
            lambda,
            maturity: if maturity.is_nan() { f64::INFINITY } else { maturity },
            dt,
            impact: ImpactModel::Linear,
        };
        let cc = critical_capital(&params, (!maturity.is_nan()).then_some(maturity))?;
        put(approx_out, cc.approx, "approx_out")?;
        if !exact_out.is_null() {
            exact_out.write(cc.exact.unwrap_or(f64::NAN));
        }
        Ok(())
    })
}

/// Largest Lyapunov exponent (per year) and the steps it was measured over.
/// `steps_out` may be null.
///
/// # Safety
/// `scenario` must be a live handle; `exponent_out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn propsim_lyapunov(
    scenario: *const PropsimScenario,
    epsilon: f64,
    exponent_out: *mut f64,
    steps_out: *mut usize,
) -> PropsimStatus {
    guard(|| {
        let s = borrow(scenario, "scenario")?;
        let est = lyapunov_estimate(&s.0, epsilon)?;
        put(exponent_out, est.exponent, "exponent_out")?;
        if !steps_out.is_null() {
            steps_out.write(est.steps);
        }
        Ok(())
    })
}
