//! Drives the C ABI exactly as a C caller would: through the exported
//! extern "C" functions with C strings and raw pointers.

use std::ffi::{CStr, CString};
use std::ptr;

use palette_mpc_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(pmpc_last_error()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn full_run_through_the_abi() {
    unsafe {
        let graph = c("0 1\n1 2\n0 2\n");
        let mut inst: *mut PmpcInstance = ptr::null_mut();
        assert_eq!(pmpc_instance_load(graph.as_ptr(), ptr::null(), &mut inst), PMPC_OK);
        assert_eq!(pmpc_instance_nodes(inst), 3);

        let mut cfg: *mut PmpcConfig = ptr::null_mut();
        assert_eq!(pmpc_config_new(&mut cfg), PMPC_OK);
        let (k, v) = (c("local_space_words"), c("4096"));
        assert_eq!(pmpc_config_set(cfg, k.as_ptr(), v.as_ptr()), PMPC_OK);

        let mut out: *mut PmpcOutcome = ptr::null_mut();
        assert_eq!(pmpc_run(inst, cfg, &mut out), PMPC_OK);
        assert_eq!(pmpc_outcome_valid(out), 1);
        assert!(pmpc_outcome_rounds(out) > 0);

        let coloring = CStr::from_ptr(pmpc_outcome_coloring(out))
            .to_str()
            .unwrap()
            .to_string();
        assert_eq!(coloring.lines().count(), 3);
        let report = CStr::from_ptr(pmpc_outcome_report(out)).to_str().unwrap();
        assert!(report.contains("verdict: valid"));

        // The produced coloring round-trips through the verifier; a
        // corrupted one is rejected with a message.
        let ok = c(coloring.as_str());
        assert_eq!(pmpc_verify(inst, ok.as_ptr()), PMPC_OK);
        let bad = c("0: 0\n1: 0\n2: 2\n");
        assert_eq!(pmpc_verify(inst, bad.as_ptr()), PMPC_INVALID_COLORING);
        assert!(last_error().contains("monochromatic"), "{}", last_error());

        pmpc_outcome_free(out);
        pmpc_config_free(cfg);
        pmpc_instance_free(inst);
    }
}

#[test]
fn errors_surface_as_codes_and_messages() {
    unsafe {
        let mut inst: *mut PmpcInstance = ptr::null_mut();
        assert_eq!(
            pmpc_instance_load(ptr::null(), ptr::null(), &mut inst),
            PMPC_NULL_ARGUMENT
        );

        let bad = c("zero one\n");
        assert_eq!(
            pmpc_instance_load(bad.as_ptr(), ptr::null(), &mut inst),
            PMPC_PARSE_ERROR
        );
        assert!(last_error().contains("bad node id"));

        // Palette smaller than degree+1.
        let graph = c("0 1\n");
        let palettes = c("0: 5\n1: 5\n");
        assert_eq!(
            pmpc_instance_load(graph.as_ptr(), palettes.as_ptr(), &mut inst),
            PMPC_PARSE_ERROR
        );

        let mut cfg: *mut PmpcConfig = ptr::null_mut();
        assert_eq!(pmpc_config_new(&mut cfg), PMPC_OK);
        let (k, v) = (c("phi"), c("7/2"));
        assert_eq!(pmpc_config_set(cfg, k.as_ptr(), v.as_ptr()), PMPC_CONFIG_ERROR);
        let (k, v) = (c("no_such_key"), c("1"));
        assert_eq!(pmpc_config_set(cfg, k.as_ptr(), v.as_ptr()), PMPC_CONFIG_ERROR);
        assert!(last_error().contains("unknown config key"));
        pmpc_config_free(cfg);

        // Null frees are no-ops, not crashes.
        pmpc_instance_free(ptr::null_mut());
        pmpc_config_free(ptr::null_mut());
        pmpc_outcome_free(ptr::null_mut());
    }
}

#[test]
fn header_lists_every_exported_function() {
    let header = include_str!("../include/palette_mpc.h");
    let source = include_str!("../src/lib.rs");
    let mut missing = Vec::new();
    for line in source.lines() {
        let line = line.trim();
        if let Some(rest) = line
            .strip_prefix("pub extern \"C\" fn ")
            .or_else(|| line.strip_prefix("pub unsafe extern \"C\" fn "))
        {
            let name = rest.split('(').next().unwrap().trim();
            if !header.contains(name) {
                missing.push(name.to_string());
            }
        }
    }
    assert!(missing.is_empty(), "header missing: {missing:?}");
}
