//! C ABI over the `flybs` simulator.
//!
//! Every function returns a [`FlybsStatus`]; on failure a description is kept
//! per thread and can be read with [`flybs_last_error`]. Simulations are opaque
//! handles created by [`flybs_simulation_new`] and released with
//! [`flybs_simulation_free`]. Strings returned by the library must be released
//! with [`flybs_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use flybs::power_alloc::{allocate, AllocationProblem};
use flybs::propulsion::{propulsion_power, speed_interval, PropulsionParams};
use flybs::sim::{run, RunSummary, ScenarioConfig, Snapshot, StepRecord};
use flybs::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlybsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ConfigError = 3,
    DomainError = 4,
    Infeasible = 5,
    OutOfRange = 6,
    NotRun = 7,
    Internal = 8,
    Panic = 9,
}

/// One simulated timestep.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FlybsStepRecord {
    pub drop_index: u64,
    pub k: u64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub c_tot: f64,
    pub min_c: f64,
    pub iterations: u32,
    pub feasible: bool,
    pub p_pr: f64,
    pub sum_p: f64,
}

/// Opaque simulation handle.
pub struct FlybsSimulation {
    config: ScenarioConfig,
    summary: Option<RunSummary>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(e: &Error) -> FlybsStatus {
    match e {
        Error::Config(_) | Error::Json(_) => FlybsStatus::ConfigError,
        Error::Domain(_) | Error::Contract(_) => FlybsStatus::DomainError,
        Error::PowerInfeasible { .. } | Error::NoAdmissibleSpeed { .. } => FlybsStatus::Infeasible,
        Error::Io { .. } | Error::Csv(_) => FlybsStatus::Internal,
    }
}

fn fail(status: FlybsStatus, msg: impl Into<String>) -> FlybsStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> FlybsStatus {
    fail(status_of(&e), e.to_string())
}

/// Runs `f`, turning a panic into [`FlybsStatus::Panic`].
fn guarded(f: impl FnOnce() -> FlybsStatus) -> FlybsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(FlybsStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, FlybsStatus> {
    if p.is_null() {
        return Err(fail(FlybsStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(FlybsStatus::InvalidUtf8, "string argument is not UTF-8"))
}

/// Message of the last failure on this thread, or NULL.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn flybs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Creates a simulation from a JSON scenario (`"{}"` gives the defaults).
///
/// # Safety
/// `config_json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn flybs_simulation_new(
    config_json: *const c_char,
    out: *mut *mut FlybsSimulation,
) -> FlybsStatus {
    guarded(|| {
        if out.is_null() {
            return fail(FlybsStatus::NullPointer, "null output pointer");
        }
        let text = match read_str(config_json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match ScenarioConfig::from_json_str(text) {
            Ok(config) => {
                *out = Box::into_raw(Box::new(FlybsSimulation {
                    config,
                    summary: None,
                }));
                FlybsStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Releases a simulation; NULL is ignored.
///
/// # Safety
/// `sim` must come from [`flybs_simulation_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn flybs_simulation_free(sim: *mut FlybsSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Runs every drop of the scenario; results replace those of an earlier run.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn flybs_simulation_run(sim: *mut FlybsSimulation) -> FlybsStatus {
    guarded(|| {
        let Some(sim) = sim.as_mut() else {
            return fail(FlybsStatus::NullPointer, "null simulation");
        };
        match run(&sim.config) {
            Ok(s) => {
                sim.summary = Some(s);
                FlybsStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

unsafe fn summary<'a>(sim: *const FlybsSimulation) -> Result<&'a RunSummary, FlybsStatus> {
    let Some(sim) = sim.as_ref() else {
        return Err(fail(FlybsStatus::NullPointer, "null simulation"));
    };
    sim.summary
        .as_ref()
        .ok_or_else(|| fail(FlybsStatus::NotRun, "simulation has not been run"))
}

/// Number of recorded steps over all drops.
///
/// # Safety
/// `sim` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn flybs_simulation_step_count(
    sim: *const FlybsSimulation,
    out: *mut usize,
) -> FlybsStatus {
    guarded(|| {
        if out.is_null() {
            return fail(FlybsStatus::NullPointer, "null output pointer");
        }
        match summary(sim) {
            Ok(s) => {
                *out = s.total_steps();
                FlybsStatus::Ok
            }
            Err(st) => st,
        }
    })
}

/// Step `index` counted over the drops in order.
///
/// # Safety
/// `sim` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn flybs_simulation_step(
    sim: *const FlybsSimulation,
    index: usize,
    out: *mut FlybsStepRecord,
) -> FlybsStatus {
    guarded(|| {
        if out.is_null() {
            return fail(FlybsStatus::NullPointer, "null output pointer");
        }
        let s = match summary(sim) {
            Ok(s) => s,
            Err(st) => return st,
        };
        let mut i = index;
        for d in &s.drops {
            if i < d.steps.len() {
                let r: &StepRecord = &d.steps[i];
                *out = FlybsStepRecord {
                    drop_index: d.drop_index,
                    k: r.k,
                    x: r.x,
                    y: r.y,
                    z: r.z,
                    c_tot: r.c_tot,
                    min_c: r.min_c,
                    iterations: r.iterations,
                    feasible: r.feasible,
                    p_pr: r.p_pr,
                    sum_p: r.sum_p,
                };
                return FlybsStatus::Ok;
            }
            i -= d.steps.len();
        }
        fail(
            FlybsStatus::OutOfRange,
            format!("step index {index} out of range"),
        )
    })
}

/// Mission-average sum capacity over all drops, bit/s.
///
/// # Safety
/// `sim` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn flybs_simulation_mean_sum_capacity(
    sim: *const FlybsSimulation,
    out: *mut f64,
) -> FlybsStatus {
    guarded(|| {
        if out.is_null() {
            return fail(FlybsStatus::NullPointer, "null output pointer");
        }
        match summary(sim) {
            Ok(s) => {
                *out = s.mean_sum_capacity;
                FlybsStatus::Ok
            }
            Err(st) => st,
        }
    })
}

/// JSON summary of the last run; release with [`flybs_string_free`].
///
/// # Safety
/// `sim` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn flybs_simulation_summary_json(
    sim: *const FlybsSimulation,
    out: *mut *mut c_char,
) -> FlybsStatus {
    guarded(|| {
        if out.is_null() {
            return fail(FlybsStatus::NullPointer, "null output pointer");
        }
        let s = match summary(sim) {
            Ok(s) => s,
            Err(st) => return st,
        };
        match serde_json::to_string(s) {
            Ok(text) => match CString::new(text) {
                Ok(c) => {
                    *out = c.into_raw();
                    FlybsStatus::Ok
                }
                Err(_) => fail(FlybsStatus::Internal, "summary contains NUL"),
            },
            Err(e) => fail(FlybsStatus::Internal, e.to_string()),
        }
    })
}

/// Releases a string returned by this library; NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn flybs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Checks a JSON snapshot (`q_prev`, `nodes`, `power`, optional `limits`).
///
/// Writes whether a feasible position exists and, if so, one such position.
///
/// # Safety
/// `snapshot_json` must be NUL-terminated, `feasible` valid and `witness`
/// either NULL or room for three doubles.
#[no_mangle]
pub unsafe extern "C" fn flybs_feasibility_check(
    snapshot_json: *const c_char,
    feasible: *mut bool,
    witness: *mut f64,
) -> FlybsStatus {
    guarded(|| {
        if feasible.is_null() {
            return fail(FlybsStatus::NullPointer, "null output pointer");
        }
        let text = match read_str(snapshot_json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let snap: Snapshot = match serde_json::from_str(text) {
            Ok(s) => s,
            Err(e) => return fail(FlybsStatus::ConfigError, e.to_string()),
        };
        if let Err(e) = snap.validate() {
            return from_error(e);
        }
        match snap.check() {
            Ok(out) => {
                *feasible = out.feasible;
                if let (Some(w), false) = (out.witness, witness.is_null()) {
                    std::slice::from_raw_parts_mut(witness, 3).copy_from_slice(&w);
                }
                if let Some(r) = out.reason {
                    set_error(r);
                }
                FlybsStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Capacity-maximizing power split for `n` links.
///
/// # Safety
/// Every array must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn flybs_allocate_power(
    n: usize,
    link_gain: *const f64,
    floor: *const f64,
    bandwidth: *const f64,
    p_max: f64,
    out_power: *mut f64,
) -> FlybsStatus {
    guarded(|| {
        if n > 0
            && (link_gain.is_null()
                || floor.is_null()
                || bandwidth.is_null()
                || out_power.is_null())
        {
            return fail(FlybsStatus::NullPointer, "null array argument");
        }
        let slice = |p: *const f64| {
            if n == 0 {
                Vec::new()
            } else {
                std::slice::from_raw_parts(p, n).to_vec()
            }
        };
        let prob =
            match AllocationProblem::new(slice(link_gain), slice(floor), p_max, slice(bandwidth)) {
                Ok(p) => p,
                Err(e) => return from_error(e),
            };
        match allocate(&prob) {
            Ok(p) => {
                if n > 0 {
                    std::slice::from_raw_parts_mut(out_power, n).copy_from_slice(&p);
                }
                FlybsStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Propulsion power at speed `v` with the reference rotorcraft parameters, W.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn flybs_propulsion_power(v: f64, out: *mut f64) -> FlybsStatus {
    guarded(|| {
        if out.is_null() {
            return fail(FlybsStatus::NullPointer, "null output pointer");
        }
        if !(v >= 0.0 && v.is_finite()) {
            return fail(
                FlybsStatus::DomainError,
                format!("speed must be finite and >= 0, got {v}"),
            );
        }
        *out = propulsion_power(v, &PropulsionParams::default());
        FlybsStatus::Ok
    })
}

/// Speeds whose propulsion power stays within `p_cap`, clipped to `v_max`.
///
/// # Safety
/// `v_lo` and `v_hi` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn flybs_speed_interval(
    p_cap: f64,
    v_max: f64,
    v_lo: *mut f64,
    v_hi: *mut f64,
) -> FlybsStatus {
    guarded(|| {
        if v_lo.is_null() || v_hi.is_null() {
            return fail(FlybsStatus::NullPointer, "null output pointer");
        }
        match speed_interval(p_cap, v_max, &PropulsionParams::default()) {
            Ok(si) => {
                *v_lo = si.v_lo;
                *v_hi = si.v_hi;
                FlybsStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}
