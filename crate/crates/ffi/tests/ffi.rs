use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use ppsync_ffi::*;

fn last_error() -> String {
    let mut needed = 0usize;
    unsafe { ppsync_last_error_message(ptr::null_mut(), 0, &mut needed) };
    let mut buf = vec![0 as c_char; needed];
    assert_eq!(unsafe { ppsync_last_error_message(buf.as_mut_ptr(), buf.len(), ptr::null_mut()) }, PpsyncStatus::Ok);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn read_string(f: impl Fn(*mut c_char, usize, *mut usize) -> PpsyncStatus) -> String {
    let mut needed = 0usize;
    assert_eq!(f(ptr::null_mut(), 0, &mut needed), PpsyncStatus::BufferTooSmall);
    let mut buf = vec![0 as c_char; needed];
    assert_eq!(f(buf.as_mut_ptr(), buf.len(), ptr::null_mut()), PpsyncStatus::Ok);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn builtin(name: &str) -> *mut PpsyncScenario {
    let name = CString::new(name).unwrap();
    let mut sc = ptr::null_mut();
    assert_eq!(unsafe { ppsync_scenario_builtin(name.as_ptr(), &mut sc) }, PpsyncStatus::Ok);
    sc
}

fn set(sc: *mut PpsyncScenario, kv: &str) -> PpsyncStatus {
    let kv = CString::new(kv).unwrap();
    unsafe { ppsync_scenario_set(sc, kv.as_ptr()) }
}

#[test]
fn short_run_through_handles() {
    let sc = builtin("example2");
    assert_eq!(unsafe { ppsync_scenario_agents(sc) }, 5);
    assert_eq!(set(sc, "sim.T=0.5"), PpsyncStatus::Ok);
    let mut run = ptr::null_mut();
    assert_eq!(unsafe { ppsync_run(sc, &mut run) }, PpsyncStatus::Ok);
    assert_eq!(unsafe { ppsync_run_status(run) }, PpsyncStatus::Ok);
    assert!(unsafe { ppsync_run_passed(run) });
    let n = unsafe { ppsync_run_sample_count(run) };
    assert_eq!(n, 501);
    let mut t = 0.0;
    assert_eq!(unsafe { ppsync_run_time(run, n - 1, &mut t) }, PpsyncStatus::Ok);
    assert!((t - 0.5).abs() < 1e-12);
    for agent in 0..5 {
        for ch in 0..2 {
            let (mut e, mut rho) = (0.0, 0.0);
            assert_eq!(unsafe { ppsync_run_error(run, n - 1, agent, ch, &mut e) }, PpsyncStatus::Ok);
            assert_eq!(unsafe { ppsync_run_funnel(run, n - 1, agent, ch, &mut rho) }, PpsyncStatus::Ok);
            assert!(e.abs() < 7.0 * rho);
        }
    }
    let mut x = 0.0;
    assert_eq!(unsafe { ppsync_run_output(run, n, 0, 0, &mut x) }, PpsyncStatus::OutOfRange);
    assert_eq!(unsafe { ppsync_run_input(run, 0, 5, 0, &mut x) }, PpsyncStatus::OutOfRange);
    assert!(last_error().contains("agent 5"));

    let summary = read_string(|b, l, nd| unsafe { ppsync_run_summary_toml(run, b, l, nd) });
    let summary: toml::Table = summary.parse().unwrap();
    assert_eq!(summary["violation_count"].as_integer(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("trace.csv").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { ppsync_run_write_trace(run, path.as_ptr()) }, PpsyncStatus::Ok);
    let csv = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(csv.lines().count(), n + 1);

    unsafe {
        ppsync_run_free(run);
        ppsync_scenario_free(sc);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let mut sc = ptr::null_mut();
    let name = CString::new("example3").unwrap();
    assert_eq!(unsafe { ppsync_scenario_builtin(name.as_ptr(), &mut sc) }, PpsyncStatus::UnknownExample);
    assert!(sc.is_null());

    let bad = CString::new("models = \"example1\"\nbogus = 1\n").unwrap();
    assert_eq!(unsafe { ppsync_scenario_from_toml(bad.as_ptr(), &mut sc) }, PpsyncStatus::Config);
    assert!(last_error().contains("bogus"));

    assert_eq!(unsafe { ppsync_scenario_from_toml(ptr::null(), &mut sc) }, PpsyncStatus::NullPointer);

    let sc = builtin("example1");
    assert_eq!(set(sc, "sim.bogus=1"), PpsyncStatus::Config);
    // a rejected override leaves the scenario untouched
    assert!(read_string(|b, l, nd| unsafe { ppsync_scenario_check(sc, b, l, nd) }).contains("sylvester_ok"));
    let mut needed = 0;
    assert_eq!(set(sc, "graph.pinning=[0,0,0,0,0]"), PpsyncStatus::Ok);
    assert_eq!(unsafe { ppsync_scenario_check(sc, ptr::null_mut(), 0, &mut needed) }, PpsyncStatus::Graph);
    assert_eq!(set(sc, "graph.pinning=[1,0,0,0,1]"), PpsyncStatus::Ok);
    assert_eq!(set(sc, "controller.lambda=-1"), PpsyncStatus::Ok);
    assert_eq!(unsafe { ppsync_scenario_check(sc, ptr::null_mut(), 0, &mut needed) }, PpsyncStatus::Filter);
    assert_eq!(set(sc, "controller.lambda=2"), PpsyncStatus::Ok);

    assert_eq!(set(sc, "ppf.rho0=0.2"), PpsyncStatus::Ok);
    assert_eq!(set(sc, "ppf.delta_upper=2"), PpsyncStatus::Ok);
    assert_eq!(set(sc, "ppf.delta_lower=2"), PpsyncStatus::Ok);
    let mut run = ptr::null_mut();
    assert_eq!(unsafe { ppsync_run(sc, &mut run) }, PpsyncStatus::FunnelViolation);
    assert!(run.is_null());
    assert!(last_error().contains("t = 0"));
    unsafe { ppsync_scenario_free(sc) };
}

#[test]
fn scenario_round_trips_through_toml() {
    let sc = builtin("example1");
    let text = read_string(|b, l, nd| unsafe { ppsync_scenario_to_toml(sc, b, l, nd) });
    let c = CString::new(text.clone()).unwrap();
    let mut again = ptr::null_mut();
    assert_eq!(unsafe { ppsync_scenario_from_toml(c.as_ptr(), &mut again) }, PpsyncStatus::Ok);
    let text2 = read_string(|b, l, nd| unsafe { ppsync_scenario_to_toml(again, b, l, nd) });
    assert_eq!(text, text2);
    unsafe {
        ppsync_scenario_free(sc);
        ppsync_scenario_free(again);
    }
}

#[test]
fn transform_primitives() {
    let p = PpsyncPpf { rho0: 5.0, rho_inf: 0.03, ell: 0.6, delta_upper: 1.0, delta_lower: 1.0 };
    let mut eps = 0.0;
    assert_eq!(unsafe { ppsync_transform_error(0.5, 1.0, &p, PpsyncBranch::Positive, &mut eps) }, PpsyncStatus::Ok);
    assert!((eps - 0.5 * 3.0_f64.ln()).abs() < 1e-15);
    let mut r = 0.0;
    assert_eq!(unsafe { ppsync_r_factor(0.0, 1.0, &p, PpsyncBranch::Positive, &mut r) }, PpsyncStatus::Ok);
    assert!((r - 1.0).abs() < 1e-15);
    assert_eq!(
        unsafe { ppsync_transform_error(1.5, 1.0, &p, PpsyncBranch::Positive, &mut eps) },
        PpsyncStatus::FunnelViolation
    );
    let bad = PpsyncPpf { rho0: -1.0, ..p };
    assert_eq!(unsafe { ppsync_r_factor(0.0, 1.0, &bad, PpsyncBranch::Positive, &mut r) }, PpsyncStatus::Config);
}

#[test]
fn null_handles_are_harmless() {
    unsafe {
        ppsync_scenario_free(ptr::null_mut());
        ppsync_run_free(ptr::null_mut());
        assert_eq!(ppsync_run_sample_count(ptr::null()), 0);
        assert!(!ppsync_run_passed(ptr::null()));
        assert_eq!(ppsync_run_status(ptr::null()), PpsyncStatus::NullPointer);
    }
    let v = unsafe { CStr::from_ptr(ppsync_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

/// Compile and run a small C program against the generated header and the
/// shared library.
#[test]
fn c_program_links_against_header() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header_dir = manifest.join("include");
    assert!(header_dir.join("ppsync.h").is_file());
    // tests run from target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().unwrap().parent().unwrap().to_path_buf();
    assert!(lib_dir.join("libppsync_ffi.so").is_file(), "no shared library in {}", lib_dir.display());

    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include <string.h>
#include "ppsync.h"

int main(void) {
    PpsyncScenario *sc = NULL;
    if (ppsync_scenario_builtin("example1", &sc) != PPSYNC_STATUS_OK) return 10;
    if (ppsync_scenario_set(sc, "sim.T=0.05") != PPSYNC_STATUS_OK) return 11;
    PpsyncRun *run = NULL;
    if (ppsync_run(sc, &run) != PPSYNC_STATUS_OK) return 12;
    size_t n = ppsync_run_sample_count(run);
    double e = 0.0;
    if (ppsync_run_error(run, n - 1, 0, 0, &e) != PPSYNC_STATUS_OK) return 13;
    if (ppsync_run_error(run, n, 0, 0, &e) != PPSYNC_STATUS_OUT_OF_RANGE) return 14;
    char msg[256];
    ppsync_last_error_message(msg, sizeof msg, NULL);
    if (strlen(msg) == 0) return 15;
    printf("%zu %d\n", n, (int)ppsync_run_passed(run));
    ppsync_run_free(run);
    ppsync_scenario_free(sc);
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("main");
    let cc = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&header_dir)
        .arg("-L")
        .arg(&lib_dir)
        .arg("-lppsync_ffi")
        .arg(format!("-Wl,-rpath,{}", lib_dir.display()))
        .arg("-o")
        .arg(&bin)
        .output()
        .expect("a C compiler");
    assert!(cc.status.success(), "{}", String::from_utf8_lossy(&cc.stderr));
    let run = Command::new(&bin).output().unwrap();
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "51 1");
}
