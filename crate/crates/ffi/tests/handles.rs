use std::ffi::CStr;
use std::ptr;

use semistable_ffi::*;

fn last_error() -> String {
    let p = ss_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn params_validation_sets_status_and_message() {
    let mut p = ptr::null_mut();
    let st = unsafe { ss_params_new(0.5, 0.5, 1.2, &mut p) };
    assert_eq!(st, SsStatus::InvalidParameter);
    assert!(p.is_null());
    assert!(last_error().contains("b must lie in (0, 1)"));
}

#[test]
fn null_arguments_are_rejected() {
    let st = unsafe { ss_params_new(0.5, 0.5, 0.25, ptr::null_mut()) };
    assert_eq!(st, SsStatus::NullPointer);
    let mut e = ptr::null_mut();
    assert_eq!(
        unsafe { ss_expr_semi_stable(ptr::null(), &mut e) },
        SsStatus::NullPointer
    );
    assert_eq!(unsafe { ss_pmf_len(ptr::null()) }, 0);
    assert!(unsafe { ss_params_epoch(ptr::null()) }.is_nan());
    unsafe {
        ss_params_free(ptr::null_mut());
        ss_expr_free(ptr::null_mut());
        ss_string_free(ptr::null_mut());
    }
}

#[test]
fn poisson_table_through_handles() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(ss_params_new(1.0, 0.0, 0.5, &mut p), SsStatus::Ok);
        assert!((ss_params_epoch(p) - 0.5).abs() < 1e-15);
        let mut e = ptr::null_mut();
        assert_eq!(ss_expr_semi_stable(p, &mut e), SsStatus::Ok);
        let mut thin = ptr::null_mut();
        assert_eq!(ss_expr_thinned(e, 0.5, &mut thin), SsStatus::Ok);
        let mut t = ptr::null_mut();
        assert_eq!(ss_pmf_new(thin, 0, 1e-12, 0.0, &mut t), SsStatus::Ok);
        let n = ss_pmf_len(t);
        let probs = std::slice::from_raw_parts(ss_pmf_probs(t), n);
        let mut want = (-0.5f64).exp();
        for (k, &got) in probs.iter().enumerate().take(15) {
            assert!((got - want).abs() < 1e-12, "k={k}");
            want *= 0.5 / (k + 1) as f64;
        }
        assert_eq!(ss_pmf_get(t, n + 10), 0.0);
        ss_pmf_free(t);
        ss_expr_free(thin);
        ss_expr_free(e);
        ss_params_free(p);
    }
}

#[test]
fn eval_and_combinators() {
    unsafe {
        let mut a = ptr::null_mut();
        let mut b = ptr::null_mut();
        assert_eq!(ss_expr_poisson(1.0, &mut a), SsStatus::Ok);
        assert_eq!(ss_expr_poisson(2.0, &mut b), SsStatus::Ok);
        let mut prod = ptr::null_mut();
        assert_eq!(ss_expr_product(a, b, &mut prod), SsStatus::Ok);
        let mut pw = ptr::null_mut();
        assert_eq!(ss_expr_power(prod, 0.5, &mut pw), SsStatus::Ok);
        let (mut re, mut im) = (0.0, 0.0);
        assert_eq!(ss_expr_eval(pw, 0.0, 0.0, &mut re, &mut im), SsStatus::Ok);
        assert!((re - (-1.5f64).exp()).abs() < 1e-15 && im == 0.0);
        assert_eq!(
            ss_expr_eval(pw, 2.0, 0.0, &mut re, &mut im),
            SsStatus::Domain
        );
        assert_eq!(ss_expr_poisson(-1.0, &mut a), SsStatus::InvalidParameter);
        for e in [a, b, prod, pw] {
            ss_expr_free(e);
        }
    }
}

#[test]
fn inadmissible_law_reports_numerical_status() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(ss_params_new(0.5, 0.5, 0.25, &mut p), SsStatus::Ok);
        assert!(ss_params_admissible_amplitude(p) < 1e-3);
        let mut e = ptr::null_mut();
        ss_expr_semi_stable(p, &mut e);
        let mut t = ptr::null_mut();
        assert_eq!(
            ss_pmf_new(e, 64, 1e-10, 0.0, &mut t),
            SsStatus::ModulusExceedsOne
        );
        assert_eq!(
            ss_pmf_new(e, 64, 1e-10, 0.1, &mut t),
            SsStatus::NegativeCoefficient
        );
        assert!(t.is_null());
        ss_expr_free(e);
        ss_params_free(p);
    }
}

#[test]
fn ar1_is_reproducible() {
    unsafe {
        let mut p = ptr::null_mut();
        ss_params_new(1.0, 0.0, 0.5, &mut p);
        let run = || {
            let mut a = ptr::null_mut();
            assert_eq!(ss_ar1_simulate(p, 5, 100, 9, 0, &mut a), SsStatus::Ok);
            assert_eq!(ss_ar1_n_paths(a), 100);
            assert_eq!(ss_ar1_n_steps(a), 5);
            let v = std::slice::from_raw_parts(ss_ar1_data(a), 600).to_vec();
            ss_ar1_free(a);
            v
        };
        assert_eq!(run(), run());
        let mut a = ptr::null_mut();
        assert_eq!(ss_ar1_simulate(p, 3, 10, 1, 1, &mut a), SsStatus::Ok);
        assert_eq!(*ss_ar1_data(a), 0);
        ss_ar1_free(a);
        ss_params_free(p);
    }
}

#[test]
fn verify_report_as_json() {
    unsafe {
        let mut p = ptr::null_mut();
        ss_params_new(1.0, 0.0, 0.5, &mut p);
        let mut json = ptr::null_mut();
        let mut overall = -1;
        let st = ss_verify_json(p, 3, 5000, 10_000, 300, 1, &mut json, &mut overall);
        assert_eq!(st, SsStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        ss_string_free(json);
        let report = semistable::verify::VerificationReport::from_json(&text).unwrap();
        assert_eq!(overall, i32::from(report.overall));
        assert!(report.checks.iter().any(|c| c.negative_control));
        ss_params_free(p);
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(ss_version()) }.to_str().unwrap();
    assert_eq!(v, semistable::VERSION);
}
