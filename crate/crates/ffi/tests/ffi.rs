use std::ffi::CStr;
use std::ptr;

use sensorshift_ffi::*;

fn last_error() -> String {
    let p = ss_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn constant_sensor_gives_two_vertices() {
    let sensor = [1.0, 1.0];
    let rhs = [0.4];
    let mut p = ptr::null_mut();
    unsafe {
        assert_eq!(ss_identify(sensor.as_ptr(), 1, 2, rhs.as_ptr(), &mut p), SsStatus::Ok);
        assert_eq!(ss_polytope_dimension(p), 2);
        assert_eq!(ss_polytope_vertex_count(p), 2);
        let mut buf = [0.0; 4];
        assert_eq!(ss_polytope_vertices(p, buf.as_mut_ptr(), buf.len()), SsStatus::Ok);
        let mut vs = vec![(buf[0], buf[1]), (buf[2], buf[3])];
        vs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((vs[0].0).abs() < 1e-12 && (vs[0].1 - 0.4).abs() < 1e-12);
        assert!((vs[1].0 - 0.4).abs() < 1e-12 && (vs[1].1).abs() < 1e-12);

        let mut inside = false;
        let mid = [0.2, 0.2];
        assert_eq!(ss_polytope_contains(p, mid.as_ptr(), 2, 1e-9, &mut inside), SsStatus::Ok);
        assert!(inside);
        let off = [0.3, 0.3];
        assert_eq!(ss_polytope_contains(p, off.as_ptr(), 2, 1e-9, &mut inside), SsStatus::Ok);
        assert!(!inside);
        ss_polytope_free(p);
    }
}

#[test]
fn short_buffer_is_reported() {
    let sensor = [1.0, 0.0, 0.0, 1.0];
    let rhs = [0.3, 0.2];
    let mut p = ptr::null_mut();
    unsafe {
        assert_eq!(ss_identify(sensor.as_ptr(), 2, 2, rhs.as_ptr(), &mut p), SsStatus::Ok);
        let mut buf = [0.0; 1];
        assert_eq!(ss_polytope_vertices(p, buf.as_mut_ptr(), 1), SsStatus::BufferTooSmall);
        assert!(last_error().contains("need 2"));
        ss_polytope_free(p);
    }
}

#[test]
fn error_codes_and_messages() {
    let bad = [0.5, 1.0];
    let rhs = [0.4];
    let mut p = ptr::null_mut();
    unsafe {
        assert_eq!(ss_identify(bad.as_ptr(), 1, 2, rhs.as_ptr(), &mut p), SsStatus::InvalidInput);
        assert!(p.is_null());
        assert!(last_error().contains("sums to"));

        assert_eq!(ss_identify(ptr::null(), 1, 2, rhs.as_ptr(), &mut p), SsStatus::NullPointer);

        // invertible sensor whose unique solution is negative
        let sensor = [0.9, 0.1, 0.1, 0.9];
        let rhs = [0.0, 0.5];
        assert_eq!(ss_identify(sensor.as_ptr(), 2, 2, rhs.as_ptr(), &mut p), SsStatus::Infeasible);
    }
    let mut out = 0.0;
    unsafe {
        assert_eq!(ss_kl_divergence([1.0].as_ptr(), [1.0].as_ptr(), 1, &mut out), SsStatus::Ok);
    }
    assert!(ss_last_error_message().is_null());
    let name = unsafe { CStr::from_ptr(ss_status_name(SsStatus::Infeasible)) };
    assert_eq!(name.to_str().unwrap(), "infeasible");
}

#[test]
fn kl_matches_closed_form() {
    let p = [0.5, 0.5];
    let q = [0.25, 0.75];
    let mut out = 0.0;
    unsafe {
        assert_eq!(ss_kl_divergence(p.as_ptr(), q.as_ptr(), 2, &mut out), SsStatus::Ok);
    }
    let expected = 0.5 * (0.5f64 / 0.25).ln() + 0.5 * (0.5f64 / 0.75).ln();
    assert!((out - expected).abs() < 1e-15);
    unsafe {
        assert_eq!(ss_kl_divergence(p.as_ptr(), [1.0, 0.0].as_ptr(), 2, &mut out), SsStatus::Infeasible);
    }
}

#[test]
fn linear_model_recovers_coefficients() {
    let f = [1.0, 0.3, -0.2, 0.8];
    let nn = [0.1, 0.0, 0.0, 0.1];
    let d = [0.7];
    let e = [0.2, -0.5];
    let oo = [0.04];
    let cov = [1.0, 0.4, 0.2, 0.4, 1.0, 0.3, 0.2, 0.3, 1.0];
    let mut m = ptr::null_mut();
    let (mut d_hat, mut e_hat) = ([0.0; 1], [0.0; 2]);
    unsafe {
        assert_eq!(ss_linear_model_new(2, 1, 1, f.as_ptr(), nn.as_ptr(), d.as_ptr(), e.as_ptr(), oo.as_ptr(), &mut m), SsStatus::Ok);
        assert_eq!(ss_linear_recover_effect(m, cov.as_ptr(), 0.0, d_hat.as_mut_ptr(), e_hat.as_mut_ptr()), SsStatus::Ok);
        ss_linear_model_free(m);
    }
    assert!((d_hat[0] - 0.7).abs() < 1e-9);
    assert!((e_hat[0] - 0.2).abs() < 1e-9 && (e_hat[1] + 0.5).abs() < 1e-9);
}

#[test]
fn singular_sensor_is_a_numerical_failure() {
    let f = [1.0, 1.0, 1.0, 1.0];
    let nn = [0.1, 0.0, 0.0, 0.1];
    let mut m = ptr::null_mut();
    let (mut d_hat, mut e_hat) = ([0.0; 1], [0.0; 2]);
    let cov = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
    unsafe {
        assert_eq!(
            ss_linear_model_new(2, 1, 1, f.as_ptr(), nn.as_ptr(), [1.0].as_ptr(), [0.0, 0.0].as_ptr(), [0.1].as_ptr(), &mut m),
            SsStatus::Ok
        );
        let status = ss_linear_recover_effect(m, cov.as_ptr(), 0.0, d_hat.as_mut_ptr(), e_hat.as_mut_ptr());
        ss_linear_model_free(m);
        assert_eq!(status, SsStatus::Numerical);
    }
}

#[test]
fn audit_counts() {
    let (mut rows, mut violations) = (usize::MAX, usize::MAX);
    unsafe {
        assert_eq!(ss_audit_bounds(2, 4, &mut rows, &mut violations), SsStatus::Ok);
    }
    assert_eq!(rows, 12);
    assert_eq!(violations, 0);
}

#[test]
fn free_accepts_null() {
    unsafe {
        ss_polytope_free(ptr::null_mut());
        ss_linear_model_free(ptr::null_mut());
        assert_eq!(ss_polytope_vertex_count(ptr::null()), 0);
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/sensorshift.h")).unwrap();
    for name in ["ss_identify", "ss_polytope_free", "ss_linear_recover_effect", "ss_last_error_message", "SS_STATUS_OK"] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

#[test]
fn header_compiles_as_c() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let src = std::env::temp_dir().join(format!("ss_header_{}.c", std::process::id()));
    std::fs::write(&src, "#include \"sensorshift.h\"\nint main(void) { return SS_STATUS_OK; }\n").unwrap();
    let status = match std::process::Command::new("cc").args(["-fsyntax-only", "-Wall", "-I", dir]).arg(&src).status() {
        Ok(s) => s,
        Err(_) => {
            eprintln!("cc not found, skipping");
            return;
        }
    };
    let _ = std::fs::remove_file(&src);
    assert!(status.success());
}
