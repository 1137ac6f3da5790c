//! C ABI for `driftsim`.
//!
//! Every fallible function returns a [`DsStatus`] and writes results through
//! out-pointers. On failure, [`ds_last_error_message`] describes the error
//! on the calling thread. Handles are opaque and must be released with the
//! matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use driftsim::analytics::{self, ScenarioParams};
use driftsim::dynamics::{self, DynamicsParams};
use driftsim::montecarlo::{self, ExperimentConfig, SeriesEstimate};
use driftsim::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidConfig = 2,
    NotApplicable = 3,
    InvalidUtf8 = 4,
    Panic = 5,
}

/// Scenario inputs for the closed-form queries.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DsScenarioParams {
    pub alpha: f64,
    pub beta: f64,
    pub x0: f64,
    pub u0: f64,
    pub gamma0: f64,
    pub kappa: f64,
    pub delta: f64,
    pub lambda: f64,
    pub horizon: u64,
}

/// The finite-horizon advantage bound and its intermediate quantities.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DsAdvantageBound {
    pub min_clicks: u64,
    pub min_skips: u64,
    pub click_rate_lb: f64,
    pub fixed_drift: f64,
    pub one_reduction_opinion: f64,
    pub clean_return_prob: f64,
    pub adaptive_drift_ub: f64,
    pub lambda_star: f64,
}

/// Monte Carlo estimates at one step.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DsStepEstimate {
    pub k: u64,
    pub mean_opinion: f64,
    pub se_opinion: f64,
    pub mean_utility: f64,
    pub se_utility: f64,
    pub mean_payoff: f64,
    pub se_payoff: f64,
    pub mean_gamma: f64,
    pub se_gamma: f64,
}

/// Opaque validated scenario.
pub struct DsScenario(ScenarioParams);

/// Opaque validated experiment configuration.
pub struct DsExperiment(ExperimentConfig);

/// Opaque per-step estimates produced by [`ds_experiment_run`].
pub struct DsSeries(SeriesEstimate);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn fail(e: Error) -> DsStatus {
    let status = match e {
        Error::NotApplicable(_) => DsStatus::NotApplicable,
        Error::InvalidConfig(_) | Error::InvalidHorizon(_) => DsStatus::InvalidConfig,
    };
    set_error(e.to_string());
    status
}

fn null() -> DsStatus {
    set_error("null pointer argument");
    DsStatus::NullPointer
}

/// Runs `body`, converting panics into [`DsStatus::Panic`].
fn guard(body: impl FnOnce() -> DsStatus) -> DsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => {
            if status == DsStatus::Ok {
                set_error("");
            }
            status
        }
        Err(_) => {
            set_error("internal panic");
            DsStatus::Panic
        }
    }
}

/// Message for the last failed call on this thread; empty after a
/// success. Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn ds_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ds_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// One opinion update.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ds_step(
    x_prev: f64,
    x0: f64,
    u_prev: f64,
    clicked: bool,
    alpha: f64,
    beta: f64,
    out: *mut f64,
) -> DsStatus {
    guard(|| {
        if out.is_null() {
            return null();
        }
        match DynamicsParams::new(alpha, beta) {
            Ok(p) => {
                *out = dynamics::step(x_prev, x0, u_prev, clicked, &p);
                DsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Opinion after a click sequence (`clicks[i] != 0` means a click), and
/// the weight on the recommendation.
///
/// # Safety
/// `clicks` must point to `len` bytes (or be null with `len == 0`); the
/// out-pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ds_ex_post_opinion(
    x0: f64,
    u0: f64,
    clicks: *const u8,
    len: usize,
    alpha: f64,
    beta: f64,
    out_opinion: *mut f64,
    out_weight: *mut f64,
) -> DsStatus {
    guard(|| {
        if out_opinion.is_null() || out_weight.is_null() || (clicks.is_null() && len > 0) {
            return null();
        }
        let raw: &[u8] = if len == 0 {
            &[]
        } else {
            std::slice::from_raw_parts(clicks, len)
        };
        let seq: Vec<bool> = raw.iter().map(|&c| c != 0).collect();
        match DynamicsParams::new(alpha, beta) {
            Ok(p) => {
                let (x, w) = dynamics::ex_post_opinion(x0, u0, &seq, &p);
                *out_opinion = x;
                *out_weight = w;
                DsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Validates `params` and returns a scenario handle in `out`.
///
/// # Safety
/// `params` must be readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ds_scenario_new(
    params: *const DsScenarioParams,
    out: *mut *mut DsScenario,
) -> DsStatus {
    guard(|| {
        if params.is_null() || out.is_null() {
            return null();
        }
        let p = &*params;
        let dynamics = match DynamicsParams::new(p.alpha, p.beta) {
            Ok(d) => d,
            Err(e) => return fail(e),
        };
        let s = ScenarioParams {
            dynamics,
            x0: p.x0,
            u0: p.u0,
            gamma0: p.gamma0,
            kappa: p.kappa,
            delta: p.delta,
            lambda: p.lambda,
            horizon: p.horizon as usize,
        };
        if let Err(e) = s.validate() {
            return fail(e);
        }
        *out = Box::into_raw(Box::new(DsScenario(s)));
        DsStatus::Ok
    })
}

/// # Safety
/// `scenario` must come from [`ds_scenario_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ds_scenario_free(scenario: *mut DsScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

unsafe fn scenario_query(
    scenario: *const DsScenario,
    out: *mut f64,
    query: impl FnOnce(&ScenarioParams) -> driftsim::Result<f64>,
) -> DsStatus {
    guard(|| {
        if scenario.is_null() || out.is_null() {
            return null();
        }
        match query(&(*scenario).0) {
            Ok(v) => {
                *out = v;
                DsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Expected opinion at step `k` under the fixed policy.
///
/// # Safety
/// `scenario` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ds_scenario_expected_opinion(
    scenario: *const DsScenario,
    k: u64,
    out: *mut f64,
) -> DsStatus {
    scenario_query(scenario, out, |s| {
        Ok(analytics::expected_opinion_fixed(k as usize, s))
    })
}

/// Long-run expected opinion under the fixed policy.
///
/// # Safety
/// `scenario` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ds_scenario_limit_fixed(
    scenario: *const DsScenario,
    out: *mut f64,
) -> DsStatus {
    scenario_query(scenario, out, |s| Ok(analytics::limit_opinion_fixed(s)))
}

/// Long-run expected opinion under the adaptive policy.
///
/// # Safety
/// `scenario` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ds_scenario_limit_adaptive(
    scenario: *const DsScenario,
    out: *mut f64,
) -> DsStatus {
    scenario_query(scenario, out, analytics::limit_opinion_adaptive)
}

/// Consumption weight above which the fixed policy wins in the long run.
///
/// # Safety
/// `scenario` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ds_scenario_lambda_threshold(
    scenario: *const DsScenario,
    out: *mut f64,
) -> DsStatus {
    scenario_query(scenario, out, analytics::longrun_lambda_threshold)
}

/// Finite-horizon bound below which the adaptive policy wins.
///
/// # Safety
/// `scenario` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ds_scenario_advantage_bound(
    scenario: *const DsScenario,
    out: *mut DsAdvantageBound,
) -> DsStatus {
    guard(|| {
        if scenario.is_null() || out.is_null() {
            return null();
        }
        match analytics::adaptive_advantage_bound(&(*scenario).0) {
            Ok(b) => {
                let c = b.components;
                *out = DsAdvantageBound {
                    min_clicks: c.min_clicks as u64,
                    min_skips: c.min_skips as u64,
                    click_rate_lb: c.click_rate_lb,
                    fixed_drift: c.fixed_drift,
                    one_reduction_opinion: c.one_reduction_opinion,
                    clean_return_prob: c.clean_return_prob,
                    adaptive_drift_ub: c.adaptive_drift_ub,
                    lambda_star: b.lambda_star,
                };
                DsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Parses and validates an experiment configuration given as JSON, with
/// the same field names as the Rust `ExperimentConfig`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ds_experiment_from_json(
    json: *const c_char,
    out: *mut *mut DsExperiment,
) -> DsStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return null();
        }
        let Ok(text) = CStr::from_ptr(json).to_str() else {
            set_error("config is not valid UTF-8");
            return DsStatus::InvalidUtf8;
        };
        let cfg: ExperimentConfig = match serde_json::from_str(text) {
            Ok(c) => c,
            Err(e) => {
                set_error(format!("invalid config: {e}"));
                return DsStatus::InvalidConfig;
            }
        };
        if let Err(e) = cfg.validate() {
            return fail(e);
        }
        *out = Box::into_raw(Box::new(DsExperiment(cfg)));
        DsStatus::Ok
    })
}

/// # Safety
/// `experiment` must come from [`ds_experiment_from_json`] and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn ds_experiment_free(experiment: *mut DsExperiment) {
    if !experiment.is_null() {
        drop(Box::from_raw(experiment));
    }
}

/// Runs all trials and returns the per-step estimates in `out`.
///
/// # Safety
/// `experiment` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ds_experiment_run(
    experiment: *const DsExperiment,
    out: *mut *mut DsSeries,
) -> DsStatus {
    guard(|| {
        if experiment.is_null() || out.is_null() {
            return null();
        }
        match montecarlo::run_experiment(&(*experiment).0) {
            Ok(series) => {
                *out = Box::into_raw(Box::new(DsSeries(series)));
                DsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Number of steps in the series (`horizon + 1`); 0 for a null handle.
///
/// # Safety
/// `series` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ds_series_len(series: *const DsSeries) -> usize {
    if series.is_null() {
        0
    } else {
        (*series).0.steps.len()
    }
}

/// Copies the estimates at position `index` into `out`.
///
/// # Safety
/// `series` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ds_series_get(
    series: *const DsSeries,
    index: usize,
    out: *mut DsStepEstimate,
) -> DsStatus {
    guard(|| {
        if series.is_null() || out.is_null() {
            return null();
        }
        let steps = &(*series).0.steps;
        let Some(st) = steps.get(index) else {
            set_error(format!(
                "index {index} out of range for series of length {}",
                steps.len()
            ));
            return DsStatus::InvalidConfig;
        };
        *out = DsStepEstimate {
            k: st.k as u64,
            mean_opinion: st.opinion.mean,
            se_opinion: st.opinion.se,
            mean_utility: st.utility.mean,
            se_utility: st.utility.se,
            mean_payoff: st.payoff.mean,
            se_payoff: st.payoff.se,
            mean_gamma: st.gamma.mean,
            se_gamma: st.gamma.se,
        };
        DsStatus::Ok
    })
}

/// # Safety
/// `series` must come from [`ds_experiment_run`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ds_series_free(series: *mut DsSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    #[test]
    fn error_message_is_cleared_on_success() {
        let mut x = 0.0;
        let st = unsafe { ds_step(0.0, 0.0, 1.0, true, 0.1, 0.5, &mut x) };
        assert_eq!(st, DsStatus::InvalidConfig);
        let msg = unsafe { CStr::from_ptr(ds_last_error_message()) };
        assert!(!msg.to_bytes().is_empty());
        let st = unsafe { ds_step(0.0, 0.0, 1.0, true, 0.3, 0.2, &mut x) };
        assert_eq!(st, DsStatus::Ok);
        assert!(unsafe { CStr::from_ptr(ds_last_error_message()) }
            .to_bytes()
            .is_empty());
    }

    #[test]
    fn null_out_pointer() {
        assert_eq!(
            unsafe { ds_step(0.0, 0.0, 1.0, true, 0.3, 0.2, ptr::null_mut()) },
            DsStatus::NullPointer
        );
    }
}
