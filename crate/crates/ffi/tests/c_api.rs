use std::ffi::{CStr, CString};
use std::ptr;

use sepsaddle_ffi::*;

fn last_error() -> String {
    let p = sep_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn synthetic(n: usize, d: usize) -> *mut SepDataset {
    let mut ds = ptr::null_mut();
    assert_eq!(unsafe { sep_dataset_synthetic(n, d, 1, &mut ds) }, SepStatus::Ok);
    assert!(!ds.is_null());
    ds
}

#[test]
fn dataset_lifecycle() {
    let ds = synthetic(30, 7);
    let (mut n, mut d) = (0, 0);
    unsafe {
        assert_eq!(sep_dataset_dims(ds, &mut n, &mut d), SepStatus::Ok);
        assert_eq!((n, d), (30, 7));
        let mut biased = ptr::null_mut();
        assert_eq!(sep_dataset_add_bias(ds, &mut biased), SepStatus::Ok);
        sep_dataset_dims(biased, &mut n, &mut d);
        assert_eq!((n, d), (30, 8));
        sep_dataset_free(biased);
        sep_dataset_free(ds);
        sep_dataset_free(ptr::null_mut());
    }
    assert!(sep_last_error_message().is_null());
}

#[test]
fn null_and_invalid_arguments() {
    unsafe {
        assert_eq!(sep_dataset_synthetic(3, 3, 0, ptr::null_mut()), SepStatus::NullPointer);
        assert!(last_error().contains("null"));
        let mut ds = ptr::null_mut();
        assert_eq!(sep_dataset_synthetic(0, 3, 0, &mut ds), SepStatus::InvalidArgument);
        assert!(ds.is_null());
        let (mut n, mut d) = (0, 0);
        assert_eq!(sep_dataset_dims(ptr::null(), &mut n, &mut d), SepStatus::NullPointer);

        let ds = synthetic(5, 2);
        let mut cfg = sep_solver_config_default(SepVariant::Adaspdc);
        cfg.m = 6;
        let mut trace = ptr::null_mut();
        assert_eq!(sep_run(ds, SepLoss::Ridge, 1e-2, &cfg, f64::NAN, &mut trace), SepStatus::InvalidArgument);
        assert!(last_error().contains("m"));
        sep_trace_free(trace);
        assert_eq!(sep_run(ds, SepLoss::Logistic, 1e-2, &cfg, f64::NAN, &mut trace), SepStatus::InvalidArgument);
        sep_dataset_free(ds);
    }
}

#[test]
fn run_and_read_trace() {
    let ds = synthetic(40, 5);
    unsafe {
        let mut objective = 0.0;
        let mut x_star = vec![0.0; 5];
        assert_eq!(sep_ridge_reference(ds, 1e-2, &mut objective, x_star.as_mut_ptr(), 5), SepStatus::Ok);
        assert_eq!(sep_ridge_reference(ds, 1e-2, &mut objective, ptr::null_mut(), 0), SepStatus::Ok);
        assert_eq!(
            sep_ridge_reference(ds, 1e-2, &mut objective, x_star.as_mut_ptr(), 4),
            SepStatus::DimensionMismatch
        );

        let mut cfg = sep_solver_config_default(SepVariant::Adaspdc);
        cfg.m = 4;
        cfg.max_passes = 60.0;
        let mut trace = ptr::null_mut();
        assert_eq!(sep_run(ds, SepLoss::Ridge, 1e-2, &cfg, objective, &mut trace), SepStatus::Ok);
        let mut len = 0;
        assert_eq!(sep_trace_len(trace, &mut len), SepStatus::Ok);
        assert_eq!(len, 61);
        let mut first = std::mem::zeroed::<SepTraceRecord>();
        let mut last = std::mem::zeroed::<SepTraceRecord>();
        assert_eq!(sep_trace_get(trace, 0, &mut first), SepStatus::Ok);
        assert_eq!(sep_trace_get(trace, len - 1, &mut last), SepStatus::Ok);
        assert!(first.theta.is_nan());
        assert!(last.theta > 0.0 && last.theta < 1.0);
        assert_eq!(last.pass, 60.0);
        assert!(last.suboptimality < first.suboptimality * 1e-6);
        assert_eq!(sep_trace_get(trace, len, &mut last), SepStatus::InvalidArgument);

        let mut x = vec![0.0; 5];
        assert_eq!(sep_trace_solution(trace, x.as_mut_ptr(), 5), SepStatus::Ok);
        for (u, v) in x.iter().zip(&x_star) {
            assert!((u - v).abs() < 1e-2, "{x:?} vs {x_star:?}");
        }
        assert_eq!(sep_trace_solution(trace, x.as_mut_ptr(), 3), SepStatus::DimensionMismatch);
        sep_trace_free(trace);
        sep_dataset_free(ds);
    }
}

#[test]
fn pdcp_through_ffi_has_unit_theta() {
    let ds = synthetic(20, 4);
    unsafe {
        let mut cfg = sep_solver_config_default(SepVariant::Pdcp);
        cfg.max_passes = 5.0;
        let mut trace = ptr::null_mut();
        assert_eq!(sep_run(ds, SepLoss::Ridge, 1e-2, &cfg, f64::NAN, &mut trace), SepStatus::Ok);
        let mut rec = std::mem::zeroed::<SepTraceRecord>();
        for i in 1..6 {
            sep_trace_get(trace, i, &mut rec);
            assert_eq!(rec.theta, 1.0);
            assert!(rec.suboptimality.is_nan());
        }
        sep_trace_free(trace);
        sep_dataset_free(ds);
    }
}

#[test]
fn libsvm_loading() {
    let dir = std::env::temp_dir().join(format!("sepsaddle-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let good = dir.join("good.svm");
    std::fs::write(&good, "+1 1:0.5 3:2\n-1 2:1\n").unwrap();
    let bad = dir.join("bad.svm");
    std::fs::write(&bad, "+1 3:1 1:2\n").unwrap();
    unsafe {
        let mut ds = ptr::null_mut();
        let path = CString::new(good.to_str().unwrap()).unwrap();
        assert_eq!(sep_dataset_load_libsvm(path.as_ptr(), 0, &mut ds), SepStatus::Ok);
        let (mut n, mut d) = (0, 0);
        sep_dataset_dims(ds, &mut n, &mut d);
        assert_eq!((n, d), (2, 3));
        sep_dataset_free(ds);
        assert_eq!(sep_dataset_load_libsvm(path.as_ptr(), 5, &mut ds), SepStatus::Ok);
        sep_dataset_dims(ds, &mut n, &mut d);
        assert_eq!(d, 5);
        sep_dataset_free(ds);

        let path = CString::new(bad.to_str().unwrap()).unwrap();
        assert_eq!(sep_dataset_load_libsvm(path.as_ptr(), 0, &mut ds), SepStatus::Parse);
        let path = CString::new(dir.join("missing.svm").to_str().unwrap()).unwrap();
        assert_eq!(sep_dataset_load_libsvm(path.as_ptr(), 0, &mut ds), SepStatus::Io);
        assert_eq!(sep_dataset_load_libsvm(ptr::null(), 0, &mut ds), SepStatus::NullPointer);
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn step_sizes() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(sep_compute_sigma(1.0, 4, 1, 1.0, 1.0, &mut v), SepStatus::Ok);
        assert_eq!(v, 1.0);
        assert_eq!(sep_compute_tau(2.0, 1000, 1, 1e-3, 1.0, &mut v), SepStatus::Ok);
        assert!((v - 0.25).abs() < 1e-15);
        assert_eq!(sep_compute_theta(1.0, 4, 1, 1.0, 1.0, &mut v), SepStatus::Ok);
        assert!((v - 5.0 / 6.0).abs() < 1e-15);
        assert_eq!(sep_compute_sigma(0.0, 4, 1, 1.0, 1.0, &mut v), SepStatus::InvalidArgument);
        assert_eq!(sep_compute_tau(1.0, 4, 5, 1.0, 1.0, &mut v), SepStatus::InvalidArgument);
    }
}

#[test]
fn verify_counts_violations() {
    let mut violations = usize::MAX;
    unsafe {
        assert_eq!(sep_verify(5, 0, false, &mut violations), SepStatus::Ok);
        assert_eq!(violations, 0);
        assert_eq!(sep_verify(5, 0, true, &mut violations), SepStatus::Ok);
        assert!(violations > 0);
        assert_eq!(sep_verify(0, 0, false, &mut violations), SepStatus::InvalidArgument);
    }
}

#[test]
fn version_is_set() {
    let v = unsafe { CStr::from_ptr(sep_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
