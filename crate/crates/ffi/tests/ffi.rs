// SPDX-License-Identifier: Apache-2.0

use std::ffi::{c_char, CStr, CString};
use std::ptr;

use palette_ffi::*;

unsafe fn take(s: *mut c_char) -> String {
    let out = CStr::from_ptr(s).to_str().unwrap().to_owned();
    palette_string_free(s);
    out
}

unsafe fn last_error() -> String {
    let p = palette_last_error();
    assert!(!p.is_null());
    CStr::from_ptr(p).to_string_lossy().into_owned()
}

fn synth(seed: u64) -> *mut PaletteEnsemble {
    let mode = CString::new("soft").unwrap();
    let mut e = ptr::null_mut();
    let st = unsafe { palette_synthesize(30, 3, 4, 0.05, mode.as_ptr(), seed, &mut e) };
    assert_eq!(st, PaletteStatus::Ok);
    e
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(palette_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn ensemble_life_cycle() {
    unsafe {
        let e = synth(1);
        assert_eq!(palette_ensemble_n_vertices(e), 30);
        assert_eq!(palette_ensemble_n_partitions(e), 4);
        assert_eq!(palette_ensemble_n_groups(e), 12);

        let mut s = ptr::null_mut();
        assert_eq!(palette_ensemble_json(e, &mut s), PaletteStatus::Ok);
        let json = CString::new(take(s)).unwrap();
        let mut back = ptr::null_mut();
        assert_eq!(palette_ensemble_from_json(json.as_ptr(), &mut back), PaletteStatus::Ok);

        let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(palette_ensemble_id(e, &mut a), PaletteStatus::Ok);
        assert_eq!(palette_ensemble_id(back, &mut b), PaletteStatus::Ok);
        assert_eq!(take(a), take(b));

        palette_ensemble_free(back);
        palette_ensemble_free(e);
        palette_ensemble_free(ptr::null_mut());
        palette_string_free(ptr::null_mut());
    }
}

#[test]
fn run_produces_report_and_diagrams() {
    unsafe {
        let e = synth(2);
        let cfg = CString::new(r#"{"m": 3, "tsne": {"iterations": 250}}"#).unwrap();
        let mut r = ptr::null_mut();
        assert_eq!(palette_run(e, cfg.as_ptr(), &mut r), PaletteStatus::Ok);
        assert_eq!(palette_report_n_vertices(r), 30);
        assert_eq!(palette_report_n_rows(r), 3);

        let mut s = ptr::null_mut();
        assert_eq!(palette_report_json(r, &mut s), PaletteStatus::Ok);
        let report: serde_json::Value = serde_json::from_str(&take(s)).unwrap();
        assert_eq!(report["reduced"]["rows"].as_array().unwrap().len(), 3);

        let mut order = vec![0usize; 30];
        assert_eq!(palette_report_vertex_order(r, order.as_mut_ptr(), 30), PaletteStatus::Ok);
        let want: Vec<usize> = report["vertex_order"]["permutation"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_u64().unwrap() as usize)
            .collect();
        assert_eq!(order, want);
        assert_eq!(palette_report_vertex_order(r, order.as_mut_ptr(), 29), PaletteStatus::Validation);

        for kind in [PALETTE_DIAGRAM_1D, PALETTE_DIAGRAM_2D] {
            assert_eq!(palette_report_svg(r, kind, &mut s), PaletteStatus::Ok);
            assert!(take(s).contains("<svg"));
        }
        assert_eq!(palette_report_svg(r, 7, &mut s), PaletteStatus::Validation);
        assert!(last_error().contains("kind"));

        assert_eq!(palette_report_timings_json(r, &mut s), PaletteStatus::Ok);
        let t: serde_json::Value = serde_json::from_str(&take(s)).unwrap();
        assert!(t["total_seconds"].as_f64().unwrap() >= 0.0);

        palette_report_free(r);
        palette_ensemble_free(e);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut e = ptr::null_mut();
        assert_eq!(palette_ensemble_from_json(ptr::null(), &mut e), PaletteStatus::NullPointer);
        let bad = CString::new("{").unwrap();
        assert_eq!(palette_ensemble_from_json(bad.as_ptr(), &mut e), PaletteStatus::Parse);
        assert!(!last_error().is_empty());
        let bytes = [0xffu8, 0xfe, 0];
        assert_eq!(
            palette_ensemble_from_json(bytes.as_ptr() as *const c_char, &mut e),
            PaletteStatus::InvalidUtf8
        );
        let mismatch = CString::new(r#"{"n_vertices":2,"partitions":[{"name":"a","kind":"hard","labels":[0,1]},{"name":"b","kind":"hard","labels":[0]}]}"#).unwrap();
        assert_eq!(palette_ensemble_from_json(mismatch.as_ptr(), &mut e), PaletteStatus::Validation);

        let ens = synth(3);
        let mut r = ptr::null_mut();
        let too_many = CString::new(r#"{"m": 40}"#).unwrap();
        assert_eq!(palette_run(ens, too_many.as_ptr(), &mut r), PaletteStatus::Validation);
        assert!(last_error().contains("at most 12"));
        let diverge = CString::new(r#"{"m": 3, "tsne": {"learning_rate": 1e300}}"#).unwrap();
        assert_eq!(palette_run(ens, diverge.as_ptr(), &mut r), PaletteStatus::Numerical);
        assert!(r.is_null());
        assert_eq!(palette_run(ens, too_many.as_ptr(), ptr::null_mut()), PaletteStatus::NullPointer);

        let mode = CString::new("fuzzy").unwrap();
        assert_eq!(palette_synthesize(10, 2, 2, 0.1, mode.as_ptr(), 0, &mut e), PaletteStatus::Validation);

        // A successful call clears the message.
        let mut s = ptr::null_mut();
        assert_eq!(palette_ensemble_id(ens, &mut s), PaletteStatus::Ok);
        assert!(palette_last_error().is_null());
        palette_string_free(s);
        palette_ensemble_free(ens);
    }
}

#[test]
fn divergence_matches_core() {
    let p = [0.2, 0.3, 0.5];
    let q = [0.4, 0.4, 0.2];
    let mut out = 0.0;
    let st = unsafe { palette_alpha_divergence(p.as_ptr(), q.as_ptr(), 3, 0.5, &mut out) };
    assert_eq!(st, PaletteStatus::Ok);
    let bc: f64 = p.iter().zip(q.iter()).map(|(a, b)| (a * b).sqrt()).sum();
    assert!((out - 4.0 * (1.0 - bc)).abs() < 1e-12);
    let st = unsafe { palette_alpha_divergence(ptr::null(), q.as_ptr(), 3, 0.5, &mut out) };
    assert_eq!(st, PaletteStatus::NullPointer);
}
