use std::ffi::{c_char, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use cm_compete_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { cm_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0);
    unsafe { std::ffi::CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn build_run_and_query() {
    unsafe {
        let mut g: *mut CmGraph = ptr::null_mut();
        assert_eq!(cm_graph_build(2000, 2.5, 7, &mut g), CmStatus::Ok);
        assert_eq!(cm_graph_vertex_count(g), 2000);
        let mut total = 0u64;
        for v in 0..2000 {
            let mut d = 0;
            assert_eq!(cm_graph_degree(g, v, &mut d), CmStatus::Ok);
            total += d as u64;
        }
        assert_eq!(total, cm_graph_half_edges(g));

        let mut o: *mut CmOutcome = ptr::null_mut();
        assert_eq!(cm_run_competition(g, 2, 1, 0, 1, CM_TIE_ALWAYS_RED, 3, &mut o), CmStatus::Ok);
        let (r, b) = (cm_outcome_red_count(o), cm_outcome_blue_count(o));
        assert!(r > b);
        let (mut color, mut tick) = (0u8, 0u64);
        assert_eq!(cm_outcome_vertex(o, 0, &mut color, &mut tick), CmStatus::Ok);
        assert_eq!((color, tick), (CM_RED, 0));
        assert_eq!(cm_outcome_vertex(o, 1, &mut color, &mut tick), CmStatus::Ok);
        assert_eq!((color, tick), (CM_BLUE, 0));
        let mut painted = 0;
        for v in 0..2000 {
            cm_outcome_vertex(o, v, &mut color, &mut tick);
            painted += (color != CM_UNPAINTED) as u64;
        }
        assert_eq!(painted, r + b);
        let mut first = 0u64;
        assert!(cm_outcome_first_block_tick(o, &mut first) >= 0);
        cm_outcome_free(o);
        cm_graph_free(g);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    unsafe {
        let mut g: *mut CmGraph = ptr::null_mut();
        assert_eq!(cm_graph_build(10, 3.5, 1, &mut g), CmStatus::Domain);
        assert!(g.is_null());
        assert!(last_error().contains("tau"));

        assert_eq!(cm_graph_build(10, 2.5, 1, ptr::null_mut()), CmStatus::NullPointer);

        let degrees = [2u32, 2, 2];
        assert_eq!(cm_graph_from_degrees(degrees.as_ptr(), 3, 1, &mut g), CmStatus::Ok);
        let mut d = 0;
        assert_eq!(cm_graph_degree(g, 3, &mut d), CmStatus::InvalidArgument);
        let mut o: *mut CmOutcome = ptr::null_mut();
        assert_eq!(cm_run_competition(g, 2, 1, 0, 0, CM_TIE_ALWAYS_RED, 1, &mut o), CmStatus::InvalidArgument);
        assert_eq!(cm_run_competition(g, 2, 1, 0, 1, 99, 1, &mut o), CmStatus::InvalidArgument);
        assert!(last_error().contains("tie rule"));
        assert_eq!(cm_run_competition(g, 0, 1, 0, 1, CM_TIE_ALWAYS_RED, 1, &mut o), CmStatus::InvalidArgument);
        cm_graph_free(g);

        let missing = CString::new("/nonexistent/graph.bin").unwrap();
        assert_eq!(cm_graph_load(missing.as_ptr(), &mut g), CmStatus::Io);

        cm_graph_free(ptr::null_mut());
        cm_outcome_free(ptr::null_mut());
        assert_eq!(cm_graph_vertex_count(ptr::null()), 0);
    }
}

#[test]
fn save_and_load_round_trip() {
    let dir = std::env::temp_dir().join(format!("cm-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = CString::new(dir.join("g.bin").to_str().unwrap()).unwrap();
    unsafe {
        let mut g: *mut CmGraph = ptr::null_mut();
        assert_eq!(cm_graph_build(500, 2.5, 11, &mut g), CmStatus::Ok);
        assert_eq!(cm_graph_save(g, path.as_ptr()), CmStatus::Ok);
        let mut h: *mut CmGraph = ptr::null_mut();
        assert_eq!(cm_graph_load(path.as_ptr(), &mut h), CmStatus::Ok);
        assert_eq!(cm_graph_vertex_count(g), cm_graph_vertex_count(h));
        for v in 0..500 {
            let (mut a, mut b) = (0, 0);
            cm_graph_degree(g, v, &mut a);
            cm_graph_degree(h, v, &mut b);
            assert_eq!(a, b);
        }
        cm_graph_free(g);
        cm_graph_free(h);
    }
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn prediction_as_json() {
    let inputs = CmTheoryInputs {
        log_log_n: (1e6f64).ln().ln(),
        tau: 2.5,
        lambda: 2.0,
        rho_prime: 0.1,
        yr: 0.8,
        yb: 0.9,
        clogn: 8.0 * (1e6f64).ln(),
        tie_rule: CM_TIE_ALWAYS_RED,
    };
    unsafe {
        let mut needed = 0usize;
        assert_eq!(cm_predict_json(&inputs, ptr::null_mut(), 0, &mut needed), CmStatus::BufferTooSmall);
        assert!(needed > 2);
        let mut buf = vec![0 as c_char; needed];
        assert_eq!(cm_predict_json(&inputs, buf.as_mut_ptr(), needed, &mut needed), CmStatus::Ok);
        let s = std::ffi::CStr::from_ptr(buf.as_ptr()).to_str().unwrap();
        let v: serde_json::Value = serde_json::from_str(s).unwrap();
        assert!(v["T_r"].as_f64().unwrap() >= 0.0);
        assert!(v["predicted_logB"].as_f64().is_some());

        let bad = CmTheoryInputs { tau: 3.2, ..inputs };
        assert_eq!(cm_predict_json(&bad, buf.as_mut_ptr(), needed, ptr::null_mut()), CmStatus::Domain);
    }
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include").join("cm_compete.h")
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(header()).unwrap();
    for name in [
        "cm_graph_build",
        "cm_graph_load",
        "cm_graph_save",
        "cm_graph_degree",
        "cm_graph_free",
        "cm_run_competition",
        "cm_outcome_vertex",
        "cm_outcome_free",
        "cm_predict_json",
        "cm_last_error_message",
        "CM_STATUS_BUFFER_TOO_SMALL",
    ] {
        assert!(h.contains(name), "{name} missing from header");
    }
}

/// Compiles and links a small C program against the static library.
#[test]
fn c_program_links_and_runs() {
    let Ok(_) = Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler; skipped");
        return;
    };
    // tests run from target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().unwrap().parent().unwrap();
    let lib = lib_dir.join("libcm_compete_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipped", lib.display());
        return;
    }
    let dir = std::env::temp_dir().join(format!("cm-ffi-c-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("main.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "cm_compete.h"
int main(void) {
    CmGraph *g = NULL;
    CmOutcome *o = NULL;
    if (cm_graph_build(1000, 2.5, 5, &g) != CM_STATUS_OK) return 1;
    if (cm_run_competition(g, 3, 2, 0, 1, CM_TIE_FAIR_COIN, 9, &o) != CM_STATUS_OK) return 2;
    unsigned long long total = cm_outcome_red_count(o) + cm_outcome_blue_count(o);
    if (cm_graph_build(10, 1.5, 5, &g) != CM_STATUS_DOMAIN) return 3;
    char msg[128];
    if (cm_last_error_message(msg, sizeof msg) == 0) return 4;
    printf("%llu\n", total);
    cm_outcome_free(o);
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.join("main");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C build failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status);
    let total: u64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    assert!(total > 0 && total <= 1000);
    std::fs::remove_dir_all(dir).ok();
}
