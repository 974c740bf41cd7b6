use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use bps_vortex_ffi::*;

const TORUS: &str = r#"{"mode":"torus","lambda":1.0,"domain":{"Lx":6.0,"Ly":6.0},
    "grid":{"nx":32,"ny":32},"phi_zeros":[[2.0,3.0],[4.0,3.0]]}"#;

fn last_error() -> String {
    unsafe { CStr::from_ptr(bps_last_error()) }
        .to_string_lossy()
        .into_owned()
}

fn new_run(json: &str) -> (BpsStatus, *mut BpsRun) {
    let text = CString::new(json).unwrap();
    let mut run = ptr::null_mut();
    let status = unsafe { bps_run_new(text.as_ptr(), &mut run) };
    (status, run)
}

#[test]
fn existence_matches_the_analytic_threshold() {
    let mut t = BpsThreshold::default();
    let area = 20.0;
    let critical = 4.0 * std::f64::consts::PI / area;
    unsafe {
        assert_eq!(
            bps_check_existence(BpsModel::Base, 1.1 * critical, area, 2, 0, &mut t),
            BpsStatus::Ok
        );
        assert!(t.solvable && t.margin > 0.0);
        assert_eq!(
            bps_check_existence(BpsModel::Base, critical, area, 2, 0, &mut t),
            BpsStatus::Ok
        );
        assert!(!t.solvable);
        assert_eq!(
            bps_check_existence(
                BpsModel::Extended,
                1.0,
                9.0 * std::f64::consts::PI,
                1,
                3,
                &mut t
            ),
            BpsStatus::Ok
        );
        assert!(t.first > 0.0 && t.second <= 0.0 && !t.solvable);
    }
}

#[test]
fn invalid_arguments_are_reported() {
    let mut t = BpsThreshold::default();
    unsafe {
        assert_eq!(
            bps_check_existence(BpsModel::Base, -1.0, 1.0, 1, 0, &mut t),
            BpsStatus::InvalidArgument
        );
        assert!(last_error().contains("positive"));
        assert_eq!(
            bps_check_existence(BpsModel::Base, 1.0, 1.0, 1, 0, ptr::null_mut()),
            BpsStatus::NullPointer
        );
        let mut run = ptr::null_mut();
        assert_eq!(bps_run_new(ptr::null(), &mut run), BpsStatus::NullPointer);
        assert!(run.is_null());
        assert_eq!(bps_run_solve(ptr::null_mut()), BpsStatus::NullPointer);
        bps_run_free(ptr::null_mut());
        bps_string_free(ptr::null_mut());
    }
    let (status, run) = new_run(r#"{"mode":"torus","lambda":1.0}"#);
    assert_eq!(status, BpsStatus::InvalidArgument);
    assert!(run.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn solve_and_read_fields() {
    let (status, run) = new_run(TORUS);
    assert_eq!(status, BpsStatus::Ok);
    unsafe {
        let mut nodes = 0usize;
        assert_eq!(bps_run_node_count(run, &mut nodes), BpsStatus::Ok);
        assert_eq!(nodes, 32 * 32);
        let name = CString::new("phi_abs").unwrap();
        let mut buf = vec![0.0; nodes];
        assert_eq!(
            bps_run_field(run, name.as_ptr(), buf.as_mut_ptr(), nodes),
            BpsStatus::NotSolved
        );

        assert_eq!(bps_run_solve(run), BpsStatus::Ok);
        assert_eq!(
            bps_run_field(run, name.as_ptr(), buf.as_mut_ptr(), nodes),
            BpsStatus::Ok
        );
        assert!(buf.iter().all(|v| (0.0..1.0 + 1e-9).contains(v)));
        assert_eq!(
            bps_run_field(run, name.as_ptr(), buf.as_mut_ptr(), nodes - 1),
            BpsStatus::BufferTooSmall
        );
        let bad = CString::new("pressure").unwrap();
        assert_eq!(
            bps_run_field(run, bad.as_ptr(), buf.as_mut_ptr(), nodes),
            BpsStatus::InvalidArgument
        );

        let mut json = ptr::null_mut();
        assert_eq!(bps_run_report_json(run, &mut json), BpsStatus::Ok);
        let report: serde_json::Value =
            serde_json::from_str(CStr::from_ptr(json).to_str().unwrap()).unwrap();
        bps_string_free(json);
        assert_eq!(report["outcome"]["status"], "ok");
        assert!(report["methods"][0]["gradient_sup"].as_f64().unwrap() < 1e-8);
        bps_run_free(run);
    }
}

#[test]
fn unsolvable_configuration_keeps_a_report() {
    let (status, run) = new_run(&TORUS.replace("\"lambda\":1.0", "\"lambda\":0.2"));
    assert_eq!(status, BpsStatus::Ok);
    unsafe {
        assert_eq!(bps_run_solve(run), BpsStatus::ThresholdViolated);
        let mut json = ptr::null_mut();
        assert_eq!(bps_run_report_json(run, &mut json), BpsStatus::Ok);
        let text = CStr::from_ptr(json).to_string_lossy().into_owned();
        bps_string_free(json);
        assert!(text.contains("threshold_violated"));
        bps_run_free(run);
    }
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/bps_vortex.h");
    let Ok(out) = Command::new("cc")
        .args([
            "-std=c99",
            "-Wall",
            "-Werror",
            "-fsyntax-only",
            "-x",
            "c",
            header,
        ])
        .output()
    else {
        eprintln!("no C compiler available; skipping");
        return;
    };
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
