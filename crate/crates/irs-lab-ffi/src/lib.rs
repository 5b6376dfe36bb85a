//! C ABI over the simulator: opaque config handles, integer status codes,
//! JSON in, JSON/CSV text out. Strings returned through out-pointers are
//! heap-allocated here and must be released with [`irs_lab_string_free`].

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::fmt::Display;
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use irs_lab::channels::SystemConfig;
use irs_lab::dof;
use irs_lab::harness::{render_csv, run_sweep, SweepSpec};

/// Result of every fallible call. Anything but `Ok` leaves a description in
/// [`irs_lab_last_error`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IrsLabStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An input string was not valid UTF-8.
    InvalidUtf8 = 2,
    /// JSON was malformed or the described configuration is invalid.
    InvalidConfig = 3,
    /// The computation itself failed (infeasible geometry, numerics, …).
    ComputeFailed = 4,
}

/// Opaque handle around a validated system configuration.
pub struct IrsLabConfig {
    inner: SystemConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(status: IrsLabStatus, message: impl Display) -> IrsLabStatus {
    let text = message.to_string().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(text).unwrap_or_default();
    });
    status
}

/// Description of the most recent failure on the calling thread. The pointer
/// stays valid until the next failing call on the same thread; never freed by
/// the caller.
#[no_mangle]
pub extern "C" fn irs_lab_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Static library version string; never freed by the caller.
#[no_mangle]
pub extern "C" fn irs_lab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Static name of a status code; never freed by the caller.
#[no_mangle]
pub extern "C" fn irs_lab_status_name(status: IrsLabStatus) -> *const c_char {
    let name: &'static str = match status {
        IrsLabStatus::Ok => "ok\0",
        IrsLabStatus::NullPointer => "null pointer\0",
        IrsLabStatus::InvalidUtf8 => "invalid utf-8\0",
        IrsLabStatus::InvalidConfig => "invalid config\0",
        IrsLabStatus::ComputeFailed => "compute failed\0",
    };
    name.as_ptr() as *const c_char
}

unsafe fn read_utf8<'a>(text: *const c_char) -> Result<&'a str, IrsLabStatus> {
    if text.is_null() {
        return Err(fail(IrsLabStatus::NullPointer, "input string is null"));
    }
    CStr::from_ptr(text)
        .to_str()
        .map_err(|e| fail(IrsLabStatus::InvalidUtf8, e))
}

fn export_string(text: String, out: *mut *mut c_char) -> IrsLabStatus {
    match CString::new(text) {
        Ok(s) => {
            unsafe { *out = s.into_raw() };
            IrsLabStatus::Ok
        }
        Err(e) => fail(IrsLabStatus::ComputeFailed, e),
    }
}

/// Parse and validate a system configuration from JSON, returning an owned
/// handle through `out`.
///
/// # Safety
/// `json` must be a valid NUL-terminated string; `out` must be a valid
/// writable pointer. On success the handle must be released with
/// [`irs_lab_config_free`].
#[no_mangle]
pub unsafe extern "C" fn irs_lab_config_parse(
    json: *const c_char,
    out: *mut *mut IrsLabConfig,
) -> IrsLabStatus {
    if out.is_null() {
        return fail(IrsLabStatus::NullPointer, "output handle pointer is null");
    }
    *out = ptr::null_mut();
    let text = match read_utf8(json) {
        Ok(t) => t,
        Err(status) => return status,
    };
    let cfg: SystemConfig = match serde_json::from_str(text) {
        Ok(c) => c,
        Err(e) => return fail(IrsLabStatus::InvalidConfig, e),
    };
    if let Err(e) = cfg.validate() {
        return fail(IrsLabStatus::InvalidConfig, e);
    }
    *out = Box::into_raw(Box::new(IrsLabConfig { inner: cfg }));
    IrsLabStatus::Ok
}

/// Release a handle returned by [`irs_lab_config_parse`]. Null is a no-op.
///
/// # Safety
/// `cfg` must be a pointer previously returned by [`irs_lab_config_parse`]
/// and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn irs_lab_config_free(cfg: *mut IrsLabConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Release a string returned through any out-pointer here. Null is a no-op.
///
/// # Safety
/// `s` must be a string pointer previously produced by this library and not
/// yet freed.
#[no_mangle]
pub unsafe extern "C" fn irs_lab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Orthogonal-complement steering angle (degrees) for a transmit direction
/// `theta_bkt_deg`, integer offset `i`, `m` antennas and element spacing
/// `d_over_lambda`. Writes the angle to `out_deg`.
///
/// # Safety
/// `out_deg` must be a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn irs_lab_oc_angle(
    theta_bkt_deg: f64,
    i: i64,
    m: usize,
    d_over_lambda: f64,
    out_deg: *mut f64,
) -> IrsLabStatus {
    if out_deg.is_null() {
        return fail(IrsLabStatus::NullPointer, "output pointer is null");
    }
    match dof::oc_angle(theta_bkt_deg, i, m, d_over_lambda) {
        Ok(angle) => {
            *out_deg = angle;
            IrsLabStatus::Ok
        }
        Err(e) => fail(IrsLabStatus::ComputeFailed, e),
    }
}

/// Rank/bound report for a configuration as a JSON string (the `dof-check`
/// CLI payload): best effective rank over `trials` random reflections, the
/// derived upper bound, the bound case, and the no-surface rank.
///
/// # Safety
/// `cfg` must be a live handle from [`irs_lab_config_parse`]; `out_json` must
/// be a valid writable pointer. The returned string must be released with
/// [`irs_lab_string_free`].
#[no_mangle]
pub unsafe extern "C" fn irs_lab_dof_report_json(
    cfg: *const IrsLabConfig,
    trials: usize,
    master_seed: u64,
    out_json: *mut *mut c_char,
) -> IrsLabStatus {
    if cfg.is_null() || out_json.is_null() {
        return fail(IrsLabStatus::NullPointer, "config or output pointer is null");
    }
    *out_json = ptr::null_mut();
    let config = &(*cfg).inner;
    let report = catch_unwind(AssertUnwindSafe(|| dof::dof_report(config, trials, master_seed)));
    match report {
        Ok(Ok(report)) => match serde_json::to_string_pretty(&report) {
            Ok(text) => export_string(text, out_json),
            Err(e) => fail(IrsLabStatus::ComputeFailed, e),
        },
        Ok(Err(e)) => fail(IrsLabStatus::ComputeFailed, e),
        Err(_) => fail(IrsLabStatus::ComputeFailed, "internal panic"),
    }
}

/// Run a full sweep described by a JSON spec and return the result as CSV
/// text — byte-identical to the `sweep` CLI output for the same spec.
///
/// # Safety
/// `spec_json` must be a valid NUL-terminated string; `out_csv` must be a
/// valid writable pointer. The returned string must be released with
/// [`irs_lab_string_free`].
#[no_mangle]
pub unsafe extern "C" fn irs_lab_sweep_csv(
    spec_json: *const c_char,
    out_csv: *mut *mut c_char,
) -> IrsLabStatus {
    if out_csv.is_null() {
        return fail(IrsLabStatus::NullPointer, "output pointer is null");
    }
    *out_csv = ptr::null_mut();
    let text = match read_utf8(spec_json) {
        Ok(t) => t,
        Err(status) => return status,
    };
    let spec = match SweepSpec::from_json_str(text) {
        Ok(s) => s,
        Err(e) => return fail(IrsLabStatus::InvalidConfig, e),
    };
    let result = catch_unwind(AssertUnwindSafe(|| run_sweep(&spec)));
    match result {
        Ok(Ok(result)) => export_string(render_csv(&result), out_csv),
        Ok(Err(e)) => fail(IrsLabStatus::ComputeFailed, e),
        Err(_) => fail(IrsLabStatus::ComputeFailed, "internal panic"),
    }
}
