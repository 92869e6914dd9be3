use std::ffi::{c_int, c_void, CStr, CString};
use std::ptr;

use schwarz_ffi::*;

fn last_error() -> String {
    let p = schwarz_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn criteria(maxit: usize) -> SchwarzCriteria {
    SchwarzCriteria {
        eps_abs: 1e-10,
        eps_rel: 1e-10,
        maxit,
    }
}

#[test]
fn accelerator_handle_lifecycle() {
    let mut cfg = schwarz_accelerator_config_default(SchwarzMethod::Classical as c_int);
    cfg.rho = 0.5;
    let lengths = [2usize];
    let mut h = ptr::null_mut();
    unsafe {
        assert_eq!(
            schwarz_accelerator_new(&cfg, lengths.as_ptr(), 1, &mut h),
            SchwarzStatus::Ok
        );
        assert!(!h.is_null());
        let (g, tg) = ([1.0, 2.0], [3.0, 6.0]);
        let mut out = [0.0; 2];
        assert_eq!(
            schwarz_accelerator_update(h, 1, g.as_ptr(), tg.as_ptr(), 2, out.as_mut_ptr()),
            SchwarzStatus::Ok
        );
        assert_eq!(out, [2.0, 4.0]);
        assert_eq!(
            schwarz_accelerator_update(h, 2, g.as_ptr(), tg.as_ptr(), 3, out.as_mut_ptr()),
            SchwarzStatus::LengthMismatch
        );
        assert!(last_error().contains("expected 2"));
        assert_eq!(
            schwarz_accelerator_update(h, 2, ptr::null(), tg.as_ptr(), 2, out.as_mut_ptr()),
            SchwarzStatus::NullPointer
        );
        assert_eq!(schwarz_accelerator_reset(h), SchwarzStatus::Ok);
        schwarz_accelerator_free(h);
        schwarz_accelerator_free(ptr::null_mut());
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let lengths = [1usize];
    let mut h = ptr::null_mut();
    let mut cfg = schwarz_accelerator_config_default(SchwarzMethod::Classical as c_int);
    cfg.rho = 0.0;
    unsafe {
        assert_eq!(
            schwarz_accelerator_new(&cfg, lengths.as_ptr(), 1, &mut h),
            SchwarzStatus::InvalidConfig
        );
        assert!(h.is_null());
        cfg.rho = 0.5;
        cfg.method = 17;
        assert_eq!(
            schwarz_accelerator_new(&cfg, lengths.as_ptr(), 1, &mut h),
            SchwarzStatus::InvalidConfig
        );
        assert!(last_error().contains("unknown method"));
        assert_eq!(
            schwarz_accelerator_new(ptr::null(), lengths.as_ptr(), 1, &mut h),
            SchwarzStatus::NullPointer
        );
        cfg.method = SchwarzMethod::Anderson as c_int;
        assert_eq!(
            schwarz_accelerator_new(&cfg, lengths.as_ptr(), 0, &mut h),
            SchwarzStatus::InvalidConfig
        );
    }
}

#[test]
fn interface_errors_match_core() {
    let prev = [1.0, 0.0, 2.0];
    let curr = [1.0, 1.0, 2.0];
    let lengths = [2usize, 1];
    let (mut a, mut r) = (0.0, 0.0);
    let status = unsafe {
        schwarz_interface_errors(
            prev.as_ptr(),
            curr.as_ptr(),
            lengths.as_ptr(),
            2,
            &mut a,
            &mut r,
        )
    };
    assert_eq!(status, SchwarzStatus::Ok);
    assert_eq!(a, 1.0);
    assert!((r - 1.0 / 2f64.sqrt()).abs() < 1e-15);
}

unsafe extern "C" fn cosine(_: *mut c_void, g: *const f64, tg: *mut f64, len: usize) -> c_int {
    for i in 0..len {
        *tg.add(i) = (*g.add(i)).cos();
    }
    0
}

unsafe extern "C" fn counting_failure(
    user: *mut c_void,
    g: *const f64,
    tg: *mut f64,
    len: usize,
) -> c_int {
    let calls = &mut *(user as *mut usize);
    *calls += 1;
    if *calls == 3 {
        return 7;
    }
    cosine(ptr::null_mut(), g, tg, len)
}

#[test]
fn callback_fixed_point_converges() {
    let mut cfg = schwarz_accelerator_config_default(SchwarzMethod::Aitken as c_int);
    cfg.n0 = 2;
    let lengths = [1usize];
    let mut g = [1.0];
    let mut result = SchwarzRunResult::default();
    let status = unsafe {
        schwarz_run_fixed_point(
            Some(cosine),
            ptr::null_mut(),
            &cfg,
            &criteria(50),
            lengths.as_ptr(),
            1,
            g.as_mut_ptr(),
            &mut result,
        )
    };
    assert_eq!(status, SchwarzStatus::Ok);
    assert!(result.converged && !result.aborted);
    assert!(result.iterations < 10);
    assert!((g[0] - 0.739_085_133_215_160_6).abs() < 1e-9);
}

#[test]
fn failing_callback_aborts_with_backend_status() {
    let cfg = schwarz_accelerator_config_default(SchwarzMethod::Unrelaxed as c_int);
    let lengths = [1usize];
    let mut g = [1.0];
    let mut calls = 0usize;
    let mut result = SchwarzRunResult::default();
    let status = unsafe {
        schwarz_run_fixed_point(
            Some(counting_failure),
            &mut calls as *mut usize as *mut c_void,
            &cfg,
            &criteria(50),
            lengths.as_ptr(),
            1,
            g.as_mut_ptr(),
            &mut result,
        )
    };
    assert_eq!(status, SchwarzStatus::BackendFailure);
    assert!(result.aborted && !result.converged);
    assert_eq!(result.iterations, 2);
    assert_eq!(g[0], 1f64.cos().cos());
    assert!(last_error().contains("returned 7"));
    let status = unsafe {
        schwarz_run_fixed_point(
            None,
            ptr::null_mut(),
            &cfg,
            &criteria(5),
            lengths.as_ptr(),
            1,
            g.as_mut_ptr(),
            &mut result,
        )
    };
    assert_eq!(status, SchwarzStatus::NullPointer);
}

#[test]
fn laplace_run_reaches_interface_value() {
    let mut cfg = schwarz_accelerator_config_default(SchwarzMethod::Classical as c_int);
    cfg.rho = 0.5;
    let mut result = SchwarzRunResult::default();
    let mut g = f64::NAN;
    let crit = SchwarzCriteria {
        eps_abs: 1e-8,
        eps_rel: 1e-8,
        maxit: 50,
    };
    let status = unsafe { schwarz_laplace1d_run(0.5, 20, 0.3, &cfg, &crit, &mut result, &mut g) };
    assert_eq!(status, SchwarzStatus::Ok);
    assert!(result.converged);
    assert_eq!(result.iterations, 2);
    assert!((g - 0.5).abs() < 1e-12);

    let status =
        unsafe { schwarz_laplace1d_run(1.5, 20, 0.3, &cfg, &crit, &mut result, ptr::null_mut()) };
    assert_eq!(status, SchwarzStatus::InvalidConfig);
    assert!(last_error().contains("x_bar"));
}

#[test]
fn run_config_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.toml");
    std::fs::write(
        &config,
        "name = \"c\"\nbackend = \"laplace1d\"\n[criteria]\neps_abs = 1e-8\neps_rel = 1e-8\nmaxit = 50\n\
         [sweep]\nx_bar = [0.5, 0.7]\n[[accelerators]]\nkind = \"aitken\"\n",
    )
    .unwrap();
    let path = CString::new(config.to_str().unwrap()).unwrap();
    let out = CString::new(dir.path().join("out").to_str().unwrap()).unwrap();
    let mut n_aborted = usize::MAX;
    let status = unsafe { schwarz_run_config(path.as_ptr(), out.as_ptr(), &mut n_aborted) };
    assert_eq!(status, SchwarzStatus::Ok);
    assert_eq!(n_aborted, 0);
    assert!(dir.path().join("out/iterations.csv").exists());

    let missing = CString::new("/nonexistent/config.toml").unwrap();
    let status = unsafe { schwarz_run_config(missing.as_ptr(), ptr::null(), &mut n_aborted) };
    assert_ne!(status, SchwarzStatus::Ok);
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(schwarz_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
