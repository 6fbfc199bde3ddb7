//! C ABI for the vconv operations.
//!
//! A session is an opaque handle holding a parsed run configuration.
//! `vconv_run` executes a named operation and hands back the verdict plus
//! the JSON report as a C string owned by the library; release it with
//! `vconv_string_free`. All functions are null-safe and return a status
//! code; the last error message is retrievable per session.

use std::ffi::{c_char, CStr, CString};
use std::ptr;
use std::sync::Mutex;

use vconv::config::RunConfig;
use vconv::report;
use vconv::runner::{self, Op};

/// Status codes returned by every entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VconvStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidConfig = 3,
    UnknownOp = 4,
    RunFailed = 5,
}

/// Opaque session: a parsed configuration plus the last error message.
pub struct VconvSession {
    config: RunConfig,
    last_error: Mutex<Option<CString>>,
}

impl VconvSession {
    fn set_error(&self, msg: String) {
        let cstr = CString::new(msg.replace('\0', " "))
            .unwrap_or_else(|_| CString::new("error").expect("static"));
        *self.last_error.lock().expect("error slot poisoned") = Some(cstr);
    }
}

/// Parse a JSON run configuration into a new session. `config_json` may be
/// null or empty for an all-defaults session. On success writes the handle
/// to `out_session`; free it with `vconv_session_free`.
#[no_mangle]
pub extern "C" fn vconv_session_new(
    config_json: *const c_char,
    out_session: *mut *mut VconvSession,
) -> VconvStatus {
    if out_session.is_null() {
        return VconvStatus::NullArgument;
    }
    unsafe { *out_session = ptr::null_mut() };
    let config = if config_json.is_null() {
        RunConfig::default()
    } else {
        let raw = unsafe { CStr::from_ptr(config_json) };
        let Ok(text) = raw.to_str() else {
            return VconvStatus::InvalidUtf8;
        };
        if text.trim().is_empty() {
            RunConfig::default()
        } else {
            match RunConfig::from_json(text) {
                Ok(cfg) => cfg,
                Err(_) => return VconvStatus::InvalidConfig,
            }
        }
    };
    let session = Box::new(VconvSession {
        config,
        last_error: Mutex::new(None),
    });
    unsafe { *out_session = Box::into_raw(session) };
    VconvStatus::Ok
}

/// Release a session created by `vconv_session_new`. Null is a no-op.
#[no_mangle]
pub extern "C" fn vconv_session_free(session: *mut VconvSession) {
    if !session.is_null() {
        drop(unsafe { Box::from_raw(session) });
    }
}

/// Run the named operation (`vdist`, `classify`, `cauchy`, `series`,
/// `abel`, `interchange`, `patch`, `corpus`) with the session's
/// configuration.
///
/// On success writes the verdict (0 holds, 1 fails, 2 inconclusive) to
/// `out_verdict` and, when `out_json` is non-null, a newly allocated JSON
/// report to `*out_json`; release it with `vconv_string_free`. On failure
/// the message is available via `vconv_session_last_error`.
#[no_mangle]
pub extern "C" fn vconv_run(
    session: *mut VconvSession,
    op: *const c_char,
    out_verdict: *mut i32,
    out_json: *mut *mut c_char,
) -> VconvStatus {
    if session.is_null() || op.is_null() || out_verdict.is_null() {
        return VconvStatus::NullArgument;
    }
    let session = unsafe { &*session };
    if !out_json.is_null() {
        unsafe { *out_json = ptr::null_mut() };
    }
    let Ok(op_name) = unsafe { CStr::from_ptr(op) }.to_str() else {
        return VconvStatus::InvalidUtf8;
    };
    let Some(op) = Op::parse(op_name) else {
        session.set_error(format!("unknown operation `{op_name}`"));
        return VconvStatus::UnknownOp;
    };
    match runner::run(op, &session.config) {
        Ok((verdict, rep)) => {
            unsafe { *out_verdict = verdict.exit_code() };
            if !out_json.is_null() {
                let json = match report::to_json(op, verdict, &rep) {
                    Ok(j) => j,
                    Err(e) => {
                        session.set_error(e.to_string());
                        return VconvStatus::RunFailed;
                    }
                };
                let cstr = match CString::new(json) {
                    Ok(c) => c,
                    Err(_) => {
                        session.set_error("report contained a NUL byte".into());
                        return VconvStatus::RunFailed;
                    }
                };
                unsafe { *out_json = cstr.into_raw() };
            }
            VconvStatus::Ok
        }
        Err(e) => {
            session.set_error(e.to_string());
            VconvStatus::RunFailed
        }
    }
}

/// Message of the session's most recent failure, or null if none. The
/// pointer stays valid until the next failing call on the same session or
/// the session is freed; do not free it.
#[no_mangle]
pub extern "C" fn vconv_session_last_error(session: *const VconvSession) -> *const c_char {
    if session.is_null() {
        return ptr::null();
    }
    let session = unsafe { &*session };
    let guard = session.last_error.lock().expect("error slot poisoned");
    match guard.as_ref() {
        Some(msg) => msg.as_ptr(),
        None => ptr::null(),
    }
}

/// Release a string returned through an `out_json` parameter. Null is a
/// no-op.
#[no_mangle]
pub extern "C" fn vconv_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}
