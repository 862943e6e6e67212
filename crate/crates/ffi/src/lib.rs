//! C ABI for the coloring engine: opaque handles, integer status codes,
//! and a per-thread last-error message. The committed header in
//! `include/palette_mpc.h` mirrors these signatures one to one.
//!
//! Ownership rules: every `*_new`/`*_load`/`pmpc_run` output is released
//! by the matching `*_free`; strings returned from accessor functions are
//! borrowed from their handle and die with it; input strings are read
//! during the call only.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use palette_mpc::coloring::{parse_coloring, verify_coloring, Verdict};
use palette_mpc::config::RunConfig;
use palette_mpc::instance::{load_instance, D1LCInstance};
use palette_mpc::pipeline::{run_pipeline, RunOutcome};

/// Status codes. 0 is success; everything else leaves a message in
/// `pmpc_last_error`.
pub const PMPC_OK: c_int = 0;
pub const PMPC_NULL_ARGUMENT: c_int = 1;
pub const PMPC_BAD_UTF8: c_int = 2;
pub const PMPC_PARSE_ERROR: c_int = 3;
pub const PMPC_CONFIG_ERROR: c_int = 4;
pub const PMPC_RUN_FAILED: c_int = 5;
pub const PMPC_INVALID_COLORING: c_int = 6;
pub const PMPC_PANIC: c_int = 7;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let clean: String = msg.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(clean).unwrap_or_default());
}

/// The message for the most recent failing call on this thread. Borrowed;
/// valid until the thread's next failing call.
#[no_mangle]
pub extern "C" fn pmpc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

pub struct PmpcInstance(D1LCInstance);
pub struct PmpcConfig(RunConfig);
pub struct PmpcOutcome {
    outcome: RunOutcome,
    coloring: CString,
    report: CString,
}

/// Every entry point traps panics: a bug reports `PMPC_PANIC` instead of
/// unwinding across the ABI.
fn guarded<F: FnOnce() -> c_int>(f: F) -> c_int {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(code) => code,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(&format!("internal panic: {msg}"));
            PMPC_PANIC
        }
    }
}

/// None ⇒ the pointer was null or not UTF-8 (error already recorded).
unsafe fn text_arg<'a>(ptr: *const c_char, what: &str) -> Option<&'a str> {
    if ptr.is_null() {
        set_error(&format!("{what} is null"));
        return None;
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Some(s),
        Err(_) => {
            set_error(&format!("{what} is not valid UTF-8"));
            None
        }
    }
}

/// Parse an instance from edge-list text and optional (nullable) palette
/// text. On success writes a handle to `out`.
///
/// # Safety
/// `graph_text` (and `palette_text` when non-null) must point to
/// NUL-terminated strings; `out` must be a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pmpc_instance_load(
    graph_text: *const c_char,
    palette_text: *const c_char,
    out: *mut *mut PmpcInstance,
) -> c_int {
    guarded(|| {
        if out.is_null() {
            set_error("out is null");
            return PMPC_NULL_ARGUMENT;
        }
        let graph = match text_arg(graph_text, "graph_text") {
            Some(s) => s,
            None => return if graph_text.is_null() { PMPC_NULL_ARGUMENT } else { PMPC_BAD_UTF8 },
        };
        let palettes = if palette_text.is_null() {
            None
        } else {
            match text_arg(palette_text, "palette_text") {
                Some(s) => Some(s),
                None => return PMPC_BAD_UTF8,
            }
        };
        match load_instance(graph, palettes) {
            Ok(inst) => {
                *out = Box::into_raw(Box::new(PmpcInstance(inst)));
                PMPC_OK
            }
            Err(e) => {
                set_error(&e.to_string());
                PMPC_PARSE_ERROR
            }
        }
    })
}

/// # Safety
/// `inst` must come from `pmpc_instance_load` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pmpc_instance_free(inst: *mut PmpcInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Node count of a loaded instance (0 for null).
///
/// # Safety
/// `inst` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn pmpc_instance_nodes(inst: *const PmpcInstance) -> u64 {
    if inst.is_null() {
        return 0;
    }
    (*inst).0.n() as u64
}

/// Fresh default configuration.
///
/// # Safety
/// `out` must be a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pmpc_config_new(out: *mut *mut PmpcConfig) -> c_int {
    guarded(|| {
        if out.is_null() {
            set_error("out is null");
            return PMPC_NULL_ARGUMENT;
        }
        *out = Box::into_raw(Box::new(PmpcConfig(RunConfig::default())));
        PMPC_OK
    })
}

/// Apply one `key`/`value` override — exactly the config-file keys.
///
/// # Safety
/// `cfg` must be a live handle; `key`/`value` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn pmpc_config_set(
    cfg: *mut PmpcConfig,
    key: *const c_char,
    value: *const c_char,
) -> c_int {
    guarded(|| {
        if cfg.is_null() {
            set_error("cfg is null");
            return PMPC_NULL_ARGUMENT;
        }
        let (key, value) = match (text_arg(key, "key"), text_arg(value, "value")) {
            (Some(k), Some(v)) => (k, v),
            _ => return PMPC_BAD_UTF8,
        };
        match (*cfg).0.set(key, value).and_then(|_| (*cfg).0.validate()) {
            Ok(()) => PMPC_OK,
            Err(e) => {
                set_error(&e.to_string());
                PMPC_CONFIG_ERROR
            }
        }
    })
}

/// # Safety
/// `cfg` must come from `pmpc_config_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pmpc_config_free(cfg: *mut PmpcConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Run the engine. `PMPC_OK` means the run finished AND the independent
/// verifier accepted the coloring; `PMPC_INVALID_COLORING` means it
/// finished but verification failed (the outcome is still returned for
/// inspection). `cfg` may be null for defaults.
///
/// # Safety
/// Handles must be live; `out` must be a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pmpc_run(
    inst: *const PmpcInstance,
    cfg: *const PmpcConfig,
    out: *mut *mut PmpcOutcome,
) -> c_int {
    guarded(|| {
        if inst.is_null() || out.is_null() {
            set_error("inst or out is null");
            return PMPC_NULL_ARGUMENT;
        }
        let default_cfg;
        let run_cfg = if cfg.is_null() {
            default_cfg = RunConfig::default();
            &default_cfg
        } else {
            &(*cfg).0
        };
        match run_pipeline(&(*inst).0, run_cfg) {
            Ok(outcome) => {
                let valid = outcome.is_valid();
                let coloring = CString::new(outcome.coloring_text.clone()).unwrap_or_default();
                let report = CString::new(outcome.report.render()).unwrap_or_default();
                *out = Box::into_raw(Box::new(PmpcOutcome {
                    outcome,
                    coloring,
                    report,
                }));
                if valid {
                    PMPC_OK
                } else {
                    set_error("run finished but the verifier rejected the coloring");
                    PMPC_INVALID_COLORING
                }
            }
            Err(e) => {
                set_error(&e.to_string());
                PMPC_RUN_FAILED
            }
        }
    })
}

/// 1 when the outcome's coloring passed the independent verifier.
///
/// # Safety
/// `outcome` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn pmpc_outcome_valid(outcome: *const PmpcOutcome) -> c_int {
    if outcome.is_null() {
        return 0;
    }
    (*outcome).outcome.is_valid() as c_int
}

/// The coloring as `v: c` lines. Borrowed from the handle.
///
/// # Safety
/// `outcome` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pmpc_outcome_coloring(outcome: *const PmpcOutcome) -> *const c_char {
    if outcome.is_null() {
        return ptr::null();
    }
    (*outcome).coloring.as_ptr()
}

/// The full rendered report. Borrowed from the handle.
///
/// # Safety
/// `outcome` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pmpc_outcome_report(outcome: *const PmpcOutcome) -> *const c_char {
    if outcome.is_null() {
        return ptr::null();
    }
    (*outcome).report.as_ptr()
}

/// Total simulated rounds of the run (0 for null).
///
/// # Safety
/// `outcome` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn pmpc_outcome_rounds(outcome: *const PmpcOutcome) -> u64 {
    if outcome.is_null() {
        return 0;
    }
    (*outcome).outcome.report.total_rounds
}

/// # Safety
/// `outcome` must come from `pmpc_run` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pmpc_outcome_free(outcome: *mut PmpcOutcome) {
    if !outcome.is_null() {
        drop(Box::from_raw(outcome));
    }
}

/// Check a coloring file against an instance: `PMPC_OK` iff complete,
/// palette-respecting, and proper.
///
/// # Safety
/// `inst` must be a live handle; `coloring_text` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn pmpc_verify(
    inst: *const PmpcInstance,
    coloring_text: *const c_char,
) -> c_int {
    guarded(|| {
        if inst.is_null() {
            set_error("inst is null");
            return PMPC_NULL_ARGUMENT;
        }
        let text = match text_arg(coloring_text, "coloring_text") {
            Some(s) => s,
            None => {
                return if coloring_text.is_null() {
                    PMPC_NULL_ARGUMENT
                } else {
                    PMPC_BAD_UTF8
                }
            }
        };
        let instance = &(*inst).0;
        let state = match parse_coloring(text, instance.n()) {
            Ok(s) => s,
            Err(e) => {
                set_error(&e);
                return PMPC_PARSE_ERROR;
            }
        };
        match verify_coloring(instance, &state) {
            Verdict::Valid => PMPC_OK,
            Verdict::Invalid(v) => {
                set_error(&v.to_string());
                PMPC_INVALID_COLORING
            }
        }
    })
}
