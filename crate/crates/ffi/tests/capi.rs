//! Exercise the C ABI exactly as a C caller would: through raw pointers,
//! status codes, and the JSON string surface.

use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

use dsc_ffi::{
    dsc_last_error_message, dsc_run_json, dsc_session_color_edge, dsc_session_free,
    dsc_session_gain, dsc_session_new, dsc_session_phi, dsc_session_report_json,
    dsc_session_steps, dsc_string_free, DscSession, DscStatus,
};

fn new_session(n: u32, policy: &str, seed: u64) -> *mut DscSession {
    let policy = CString::new(policy).unwrap();
    let mut out: *mut DscSession = ptr::null_mut();
    let status = unsafe { dsc_session_new(n, policy.as_ptr(), seed, &mut out) };
    assert_eq!(status, DscStatus::Ok, "{}", last_error());
    assert!(!out.is_null());
    out
}

fn last_error() -> String {
    let ptr = dsc_last_error_message();
    if ptr.is_null() {
        return String::from("(no error recorded)");
    }
    let msg = unsafe { CStr::from_ptr(ptr) }.to_str().unwrap().to_string();
    unsafe { dsc_string_free(ptr) };
    msg
}

fn take_string(ptr: *mut std::ffi::c_char) -> String {
    assert!(!ptr.is_null());
    let s = unsafe { CStr::from_ptr(ptr) }.to_str().unwrap().to_string();
    unsafe { dsc_string_free(ptr) };
    s
}

#[test]
fn det_session_lifecycle() {
    let session = new_session(2, "det", 0);
    let mut palette = u32::MAX;
    let mut color = 0u64;
    // Three full edges over n = 2: each completes a fresh cover.
    for step in 1..=3u64 {
        let nodes = [1u32, 2];
        let status = unsafe {
            dsc_session_color_edge(session, nodes.as_ptr(), nodes.len(), &mut palette, &mut color)
        };
        assert_eq!(status, DscStatus::Ok, "step {step}: {}", last_error());
        let mut steps = 0u64;
        assert_eq!(
            unsafe { dsc_session_steps(session, &mut steps) },
            DscStatus::Ok
        );
        assert_eq!(steps, step);
    }
    let mut gain = 0u64;
    assert_eq!(unsafe { dsc_session_gain(session, &mut gain) }, DscStatus::Ok);
    assert_eq!(gain, 3);
    let mut phi = f64::NAN;
    assert_eq!(unsafe { dsc_session_phi(session, &mut phi) }, DscStatus::Ok);
    assert!(phi <= 2.0 + 1e-9, "Φ = {phi}");

    let mut json: *mut std::ffi::c_char = ptr::null_mut();
    let status = unsafe { dsc_session_report_json(session, true, &mut json) };
    assert_eq!(status, DscStatus::Ok, "{}", last_error());
    let report: serde_json::Value = serde_json::from_str(&take_string(json)).unwrap();
    assert_eq!(report["gain"], 3);
    assert_eq!(report["policy"], "det");
    assert_eq!(report["n"], 2);
    assert!(report["instanceDigest"].is_string());
    assert!(report["checks"].as_array().map_or(0, Vec::len) > 0);

    unsafe { dsc_session_free(session) };
}

#[test]
fn edges_are_canonicalized_and_validated() {
    let session = new_session(4, "det", 0);
    // Unordered with duplicates: accepted.
    let nodes = [3u32, 1, 3, 2];
    let status =
        unsafe { dsc_session_color_edge(session, nodes.as_ptr(), nodes.len(), ptr::null_mut(), ptr::null_mut()) };
    assert_eq!(status, DscStatus::Ok, "{}", last_error());
    // Out-of-range node: rejected, session still usable.
    let bad = [1u32, 9];
    let status = unsafe {
        dsc_session_color_edge(session, bad.as_ptr(), bad.len(), ptr::null_mut(), ptr::null_mut())
    };
    assert_eq!(status, DscStatus::InvalidInput);
    assert!(last_error().contains("1..=4"), "{}", last_error());
    // Zero-length edge: rejected.
    let status = unsafe {
        dsc_session_color_edge(session, nodes.as_ptr(), 0, ptr::null_mut(), ptr::null_mut())
    };
    assert_eq!(status, DscStatus::InvalidInput);
    let mut steps = 0u64;
    assert_eq!(
        unsafe { dsc_session_steps(session, &mut steps) },
        DscStatus::Ok
    );
    assert_eq!(steps, 1, "only the valid edge was applied");
    unsafe { dsc_session_free(session) };
}

#[test]
fn rand_sessions_reproduce_by_seed() {
    let mut colors_a = Vec::new();
    let mut colors_b = Vec::new();
    for colors in [&mut colors_a, &mut colors_b] {
        let session = new_session(6, "rand", 99);
        for t in 0..24u32 {
            // A deterministic but varied edge pattern.
            let nodes: Vec<u32> = (1..=6).filter(|v| (v + t) % 3 != 0).collect();
            let mut palette = 0u32;
            let mut color = 0u64;
            let status = unsafe {
                dsc_session_color_edge(session, nodes.as_ptr(), nodes.len(), &mut palette, &mut color)
            };
            assert_eq!(status, DscStatus::Ok, "{}", last_error());
            colors.push((palette, color));
        }
        unsafe { dsc_session_free(session) };
    }
    assert_eq!(colors_a, colors_b);

    // A different seed diverges somewhere.
    let session = new_session(6, "rand", 100);
    let mut diverged = false;
    for t in 0..24u32 {
        let nodes: Vec<u32> = (1..=6).filter(|v| (v + t) % 3 != 0).collect();
        let mut palette = 0u32;
        let mut color = 0u64;
        unsafe {
            dsc_session_color_edge(session, nodes.as_ptr(), nodes.len(), &mut palette, &mut color)
        };
        if (palette, color) != colors_a[t as usize] {
            diverged = true;
        }
    }
    assert!(diverged);
    unsafe { dsc_session_free(session) };
}

#[test]
fn session_rejects_bad_construction() {
    let mut out: *mut DscSession = ptr::null_mut();
    let det = CString::new("det").unwrap();
    // NULL out-pointer.
    assert_eq!(
        unsafe { dsc_session_new(2, det.as_ptr(), 0, ptr::null_mut()) },
        DscStatus::NullArgument
    );
    // NULL policy.
    assert_eq!(
        unsafe { dsc_session_new(2, ptr::null(), 0, &mut out) },
        DscStatus::NullArgument
    );
    // Unknown policy.
    let bogus = CString::new("simulated-annealing").unwrap();
    assert_eq!(
        unsafe { dsc_session_new(2, bogus.as_ptr(), 0, &mut out) },
        DscStatus::InvalidInput
    );
    assert!(last_error().contains("policy"), "{}", last_error());
    // Engine-free policies make no sense as sessions.
    let greedy = CString::new("greedy").unwrap();
    assert_eq!(
        unsafe { dsc_session_new(2, greedy.as_ptr(), 0, &mut out) },
        DscStatus::InvalidInput
    );
    // n = 0 has no nodes.
    assert_eq!(
        unsafe { dsc_session_new(0, det.as_ptr(), 0, &mut out) },
        DscStatus::InvalidInput
    );
    // Out-pointer was never written.
    assert!(out.is_null());

    // Operations on a NULL session fail cleanly.
    let mut gain = 0u64;
    assert_eq!(
        unsafe { dsc_session_gain(ptr::null(), &mut gain) },
        DscStatus::NullArgument
    );
}

#[test]
fn one_shot_run_json() {
    let instance = CString::new(r#"{"n": 3, "edges": [[1,2,3],[1,2,3],[1],[2],[3]]}"#).unwrap();
    for policy in ["det", "rand", "greedy"] {
        let policy_c = CString::new(policy).unwrap();
        let mut out: *mut std::ffi::c_char = ptr::null_mut();
        let status =
            unsafe { dsc_run_json(instance.as_ptr(), policy_c.as_ptr(), 5, true, &mut out) };
        assert_eq!(status, DscStatus::Ok, "{policy}: {}", last_error());
        let report: serde_json::Value = serde_json::from_str(&take_string(out)).unwrap();
        assert_eq!(report["policy"], policy);
        assert_eq!(report["edges"], 5);
        assert_eq!(report["offline"]["minDegree"], 3);
    }

    // Replay needs a trace; the one-shot surface refuses it.
    let replay = CString::new("replay").unwrap();
    let mut out: *mut std::ffi::c_char = ptr::null_mut();
    assert_eq!(
        unsafe { dsc_run_json(instance.as_ptr(), replay.as_ptr(), 0, false, &mut out) },
        DscStatus::InvalidInput
    );

    // Malformed JSON is an input error with a message.
    let broken = CString::new(r#"{"n": 3, "edges": [[0]]}"#).unwrap();
    let det = CString::new("det").unwrap();
    assert_eq!(
        unsafe { dsc_run_json(broken.as_ptr(), det.as_ptr(), 0, false, &mut out) },
        DscStatus::InvalidInput
    );
    assert!(!last_error().is_empty());
}

#[test]
fn frees_accept_null() {
    unsafe {
        dsc_session_free(ptr::null_mut());
        dsc_string_free(ptr::null_mut());
    }
}

#[test]
fn header_is_generated_with_the_full_surface() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/dsc.h");
    let text = std::fs::read_to_string(&header).expect("build.rs generates include/dsc.h");
    for symbol in [
        "DscStatus",
        "DscSession",
        "dsc_session_new",
        "dsc_session_color_edge",
        "dsc_session_gain",
        "dsc_session_phi",
        "dsc_session_steps",
        "dsc_session_report_json",
        "dsc_session_free",
        "dsc_run_json",
        "dsc_string_free",
        "dsc_last_error_message",
        "DSC_STATUS_INVARIANT_VIOLATION",
    ] {
        assert!(text.contains(symbol), "header is missing {symbol}");
    }
}
