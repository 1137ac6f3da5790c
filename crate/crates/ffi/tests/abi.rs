use std::ffi::{CStr, CString};
use std::ptr;

use driftsim_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(ds_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn reference_params() -> DsScenarioParams {
    DsScenarioParams {
        alpha: 0.3,
        beta: 0.2,
        x0: -1.0,
        u0: 1.0,
        gamma0: 0.9,
        kappa: 1.2,
        delta: 0.3,
        lambda: 0.5,
        horizon: 5,
    }
}

#[test]
fn step_and_ex_post_agree() {
    let clicks = [1u8, 0, 1, 1, 0];
    let (alpha, beta, x0, u0) = (0.35, 0.25, -0.4, 0.9);
    let mut x = x0;
    for &c in &clicks {
        let mut next = 0.0;
        assert_eq!(
            unsafe { ds_step(x, x0, u0, c != 0, alpha, beta, &mut next) },
            DsStatus::Ok
        );
        x = next;
    }
    let (mut opinion, mut weight) = (0.0, 0.0);
    let st = unsafe {
        ds_ex_post_opinion(
            x0,
            u0,
            clicks.as_ptr(),
            clicks.len(),
            alpha,
            beta,
            &mut opinion,
            &mut weight,
        )
    };
    assert_eq!(st, DsStatus::Ok);
    assert!((opinion - x).abs() < 1e-12);
    assert!((opinion - ((1.0 - weight) * x0 + weight * u0)).abs() < 1e-12);

    let st = unsafe {
        ds_ex_post_opinion(
            x0,
            u0,
            ptr::null(),
            0,
            alpha,
            beta,
            &mut opinion,
            &mut weight,
        )
    };
    assert_eq!(st, DsStatus::Ok);
    assert_eq!((opinion, weight), (x0, 0.0));
}

#[test]
fn invalid_dynamics_reports_config_error() {
    let mut x = 0.0;
    assert_eq!(
        unsafe { ds_step(0.0, 0.0, 1.0, true, 0.2, 0.3, &mut x) },
        DsStatus::InvalidConfig
    );
    assert!(last_error().contains("beta"), "{}", last_error());
}

#[test]
fn scenario_queries() {
    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { ds_scenario_new(&reference_params(), &mut h) },
        DsStatus::Ok
    );
    let mut bound = DsAdvantageBound::default();
    assert_eq!(
        unsafe { ds_scenario_advantage_bound(h, &mut bound) },
        DsStatus::Ok
    );
    assert_eq!((bound.min_clicks, bound.min_skips), (1, 2));
    assert!((bound.lambda_star - 0.3125).abs() < 1e-4);

    let (mut e0, mut lim) = (0.0, 0.0);
    assert_eq!(
        unsafe { ds_scenario_expected_opinion(h, 0, &mut e0) },
        DsStatus::Ok
    );
    assert_eq!(e0, -1.0);
    assert_eq!(
        unsafe { ds_scenario_limit_fixed(h, &mut lim) },
        DsStatus::Ok
    );
    let mut far = 0.0;
    assert_eq!(
        unsafe { ds_scenario_expected_opinion(h, 500, &mut far) },
        DsStatus::Ok
    );
    assert!((far - lim).abs() < 1e-12);
    let mut threshold = 0.0;
    assert_eq!(
        unsafe { ds_scenario_lambda_threshold(h, &mut threshold) },
        DsStatus::Ok
    );
    assert!(threshold > 0.0 && threshold < 1.0);
    unsafe { ds_scenario_free(h) };
}

#[test]
fn inapplicable_bound_is_reported() {
    let mut h = ptr::null_mut();
    let params = DsScenarioParams {
        gamma0: 0.0,
        ..reference_params()
    };
    assert_eq!(unsafe { ds_scenario_new(&params, &mut h) }, DsStatus::Ok);
    let mut bound = DsAdvantageBound::default();
    assert_eq!(
        unsafe { ds_scenario_advantage_bound(h, &mut bound) },
        DsStatus::NotApplicable
    );
    assert!(!last_error().is_empty());
    unsafe { ds_scenario_free(h) };
}

#[test]
fn invalid_scenario_is_rejected() {
    let mut h = ptr::null_mut();
    let params = DsScenarioParams {
        x0: 2.0,
        ..reference_params()
    };
    assert_eq!(
        unsafe { ds_scenario_new(&params, &mut h) },
        DsStatus::InvalidConfig
    );
    assert!(h.is_null());
}

#[test]
fn experiment_round_trip() {
    let json = CString::new(
        r#"{
            "dynamics": {"alpha": 0.4, "beta": 0.2},
            "x0": -1.0,
            "lambda": 0.5,
            "horizon": 20,
            "agent": {"kind": "adaptive", "gamma0": 0.9, "kappa": 1.2, "delta": 0.3},
            "platform": {"kind": "fixed", "u0": 1.0},
            "reward": {"slope": 0.1},
            "trials": 200,
            "master_seed": 3
        }"#,
    )
    .unwrap();
    let mut exp = ptr::null_mut();
    assert_eq!(
        unsafe { ds_experiment_from_json(json.as_ptr(), &mut exp) },
        DsStatus::Ok,
        "{}",
        last_error()
    );
    let mut series = ptr::null_mut();
    assert_eq!(unsafe { ds_experiment_run(exp, &mut series) }, DsStatus::Ok);
    assert_eq!(unsafe { ds_series_len(series) }, 21);
    let mut first = DsStepEstimate::default();
    assert_eq!(
        unsafe { ds_series_get(series, 0, &mut first) },
        DsStatus::Ok
    );
    assert_eq!(
        (first.k, first.mean_opinion, first.mean_gamma),
        (0, -1.0, 0.9)
    );
    let mut prev = first.mean_gamma;
    for i in 1..21 {
        let mut st = DsStepEstimate::default();
        assert_eq!(unsafe { ds_series_get(series, i, &mut st) }, DsStatus::Ok);
        assert!(st.mean_gamma <= prev + 1e-15);
        prev = st.mean_gamma;
    }
    let mut st = DsStepEstimate::default();
    assert_eq!(
        unsafe { ds_series_get(series, 21, &mut st) },
        DsStatus::InvalidConfig
    );
    unsafe {
        ds_series_free(series);
        ds_experiment_free(exp);
    }
}

#[test]
fn bad_json_is_a_config_error() {
    let json = CString::new(r#"{"dynamics": 3}"#).unwrap();
    let mut exp = ptr::null_mut();
    assert_eq!(
        unsafe { ds_experiment_from_json(json.as_ptr(), &mut exp) },
        DsStatus::InvalidConfig
    );
    assert!(exp.is_null());
    assert!(last_error().starts_with("invalid config"));
}

#[test]
fn null_handles() {
    let mut out = 0.0;
    assert_eq!(
        unsafe { ds_scenario_limit_fixed(ptr::null(), &mut out) },
        DsStatus::NullPointer
    );
    assert_eq!(unsafe { ds_series_len(ptr::null()) }, 0);
    unsafe {
        ds_scenario_free(ptr::null_mut());
        ds_experiment_free(ptr::null_mut());
        ds_series_free(ptr::null_mut());
    }
}

#[test]
fn version_is_nonempty() {
    let v = unsafe { CStr::from_ptr(ds_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
