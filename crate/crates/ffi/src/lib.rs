//! C ABI over `lidar-range`.
//!
//! Scenarios are opaque heap handles created by `lr_scenario_table1` or
//! `lr_scenario_load` and released with `lr_scenario_free`. Every fallible
//! call returns an [`LrStatus`]; results go through out-pointers, which are
//! left untouched on failure. The message of the last failure on the
//! calling thread is available from `lr_last_error_message`.
//!
//! Panics never cross the boundary; they surface as `LR_STATUS_PANIC`.
//! A handle may be read from several threads at once but must not be
//! mutated concurrently.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use lidar_range::apd::optimize_gain;
use lidar_range::range::{
    closed_form_max_range, get_parameter, max_range, optical_powers, sensitivity, set_parameter, snr_at_range,
    DetectorChoice, SipmSnrMode,
};
use lidar_range::scenario::{load_scenario, table1_preset, DetectorKind};
use lidar_range::sipm::monte_carlo::SipmMcConfig;
use lidar_range::sipm::{fired_count, SipmParams};
use lidar_range::tdc::{correct_detection_prob, false_alarm_prob, TdcPolicy};
use lidar_range::{Error, ScenarioConfig};

/// Opaque scenario handle.
pub struct LrScenario {
    cfg: ScenarioConfig,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    IoError = 4,
    Saturation = 5,
    NoDetection = 6,
    UnboundedRange = 7,
    UnknownParameter = 8,
    ZeroParameter = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LrDetector {
    Apd = 0,
    Sipm = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LrSipmMode {
    Analytic = 0,
    Approx = 1,
    MonteCarlo = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LrRangeResult {
    pub r_max_m: f64,
    pub snr_at_rmax: f64,
    pub min_detectable_power_w: f64,
    pub background_power_w: f64,
    /// Zero unless the SiPM is evaluated by Monte Carlo.
    pub snr_std_error: f64,
    pub iterations: u32,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(message: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = message);
}

fn status_of(e: &Error) -> LrStatus {
    match e {
        Error::Config { .. } => LrStatus::InvalidArgument,
        Error::Parse { .. } => LrStatus::ParseError,
        Error::Io { .. } => LrStatus::IoError,
        Error::Saturation { .. } => LrStatus::Saturation,
        Error::NoDetection { .. } => LrStatus::NoDetection,
        Error::UnboundedRange { .. } => LrStatus::UnboundedRange,
        Error::UnknownParameter(_) => LrStatus::UnknownParameter,
        Error::ZeroParameter(_) => LrStatus::ZeroParameter,
    }
}

enum Fail {
    Null(&'static str),
    Arg(String),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

/// Runs `f`, recording failures and containing panics.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> LrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            LrStatus::Ok
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("{what} is null"));
            LrStatus::NullPointer
        }
        Ok(Err(Fail::Arg(msg))) => {
            set_error(msg);
            LrStatus::InvalidArgument
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".to_owned());
            LrStatus::Panic
        }
    }
}

unsafe fn scenario<'a>(ptr: *const LrScenario) -> Result<&'a LrScenario, Fail> {
    ptr.as_ref().ok_or(Fail::Null("scenario"))
}

unsafe fn scenario_mut<'a>(ptr: *mut LrScenario) -> Result<&'a mut LrScenario, Fail> {
    ptr.as_mut().ok_or(Fail::Null("scenario"))
}

unsafe fn out<'a, T>(ptr: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    ptr.as_mut().ok_or(Fail::Null(what))
}

unsafe fn string<'a>(ptr: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if ptr.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| Fail::Arg(format!("{what} is not valid UTF-8")))
}

fn boxed(cfg: ScenarioConfig) -> *mut LrScenario {
    Box::into_raw(Box::new(LrScenario { cfg }))
}

/// Reference design with the given detector (SiPM in analytic mode).
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn lr_scenario_table1(detector: LrDetector, out: *mut *mut LrScenario) -> LrStatus {
    guard(|| {
        let slot = unsafe { self::out(out, "out") }?;
        let kind = match detector {
            LrDetector::Apd => DetectorKind::Apd,
            LrDetector::Sipm => DetectorKind::Sipm,
        };
        *slot = boxed(table1_preset(kind));
        Ok(())
    })
}

/// Loads and validates a scenario TOML file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn lr_scenario_load(path: *const c_char, out: *mut *mut LrScenario) -> LrStatus {
    guard(|| {
        let path = unsafe { string(path, "path") }?;
        let slot = unsafe { self::out(out, "out") }?;
        *slot = boxed(load_scenario(Path::new(path))?);
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `scenario` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lr_scenario_free(scenario: *mut LrScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Independent copy of a handle.
///
/// # Safety
/// `scenario` must be a live handle; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn lr_scenario_clone(scenario: *const LrScenario, out: *mut *mut LrScenario) -> LrStatus {
    guard(|| {
        let s = unsafe { self::scenario(scenario) }?;
        let slot = unsafe { self::out(out, "out") }?;
        *slot = boxed(s.cfg.clone());
        Ok(())
    })
}

/// Sets a named design parameter (SI units, angles in radians). The
/// scenario is left unchanged when the new value is invalid.
///
/// # Safety
/// `scenario` must be a live handle; `name` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn lr_scenario_set_param(scenario: *mut LrScenario, name: *const c_char, value: f64) -> LrStatus {
    guard(|| {
        let s = unsafe { scenario_mut(scenario) }?;
        let name = unsafe { string(name, "name") }?;
        let mut cfg = s.cfg.clone();
        let mut det = cfg.detector;
        set_parameter(&mut cfg, &mut det, name, value)?;
        cfg.detector = det;
        cfg.validate()?;
        s.cfg = cfg;
        Ok(())
    })
}

/// Reads a named design parameter.
///
/// # Safety
/// `scenario` must be a live handle; `name` a NUL-terminated string;
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lr_scenario_get_param(
    scenario: *const LrScenario,
    name: *const c_char,
    out: *mut f64,
) -> LrStatus {
    guard(|| {
        let s = unsafe { self::scenario(scenario) }?;
        let name = unsafe { string(name, "name") }?;
        let slot = unsafe { self::out(out, "out") }?;
        *slot = get_parameter(&s.cfg, &s.cfg.detector, name)?;
        Ok(())
    })
}

/// Selects how a SiPM scenario evaluates its SNR. `seed` is used in Monte
/// Carlo mode, which runs with default simulation settings.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn lr_scenario_set_sipm_mode(scenario: *mut LrScenario, mode: LrSipmMode, seed: u64) -> LrStatus {
    guard(|| {
        let s = unsafe { scenario_mut(scenario) }?;
        let DetectorChoice::Sipm { params, mode: current } = &mut s.cfg.detector else {
            return Err(Fail::Arg("scenario detector is not a SiPM".to_owned()));
        };
        *current = match mode {
            LrSipmMode::Analytic => SipmSnrMode::Analytic,
            LrSipmMode::Approx => SipmSnrMode::Approx,
            LrSipmMode::MonteCarlo => SipmSnrMode::MonteCarlo(SipmMcConfig {
                seed,
                ..SipmMcConfig::defaults_for(params)
            }),
        };
        Ok(())
    })
}

/// Trigger SNR with the target at `range_m`.
///
/// # Safety
/// `scenario` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lr_snr_at_range(scenario: *const LrScenario, range_m: f64, out: *mut f64) -> LrStatus {
    guard(|| {
        let s = unsafe { self::scenario(scenario) }?;
        let slot = unsafe { self::out(out, "out") }?;
        *slot = snr_at_range(&s.cfg, &s.cfg.detector, range_m)?;
        Ok(())
    })
}

/// Maximum detectable range under the scenario's threshold policy.
///
/// # Safety
/// `scenario` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lr_max_range(scenario: *const LrScenario, out: *mut LrRangeResult) -> LrStatus {
    guard(|| {
        let s = unsafe { self::scenario(scenario) }?;
        let slot = unsafe { self::out(out, "out") }?;
        let r = max_range(&s.cfg, &s.cfg.detector, &s.cfg.tdc)?;
        *slot = LrRangeResult {
            r_max_m: r.r_max_m,
            snr_at_rmax: r.snr_at_rmax,
            min_detectable_power_w: r.min_detectable_power_w,
            background_power_w: r.background_power_w,
            snr_std_error: r.snr_std_error,
            iterations: r.iterations,
        };
        Ok(())
    })
}

/// Photon-limited closed-form maximum range.
///
/// # Safety
/// `scenario` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lr_closed_form_max_range(scenario: *const LrScenario, out: *mut f64) -> LrStatus {
    guard(|| {
        let s = unsafe { self::scenario(scenario) }?;
        let slot = unsafe { self::out(out, "out") }?;
        *slot = closed_form_max_range(&s.cfg, &s.cfg.detector)?;
        Ok(())
    })
}

/// Elasticity d ln R_max / d ln parameter.
///
/// # Safety
/// `scenario` must be a live handle; `name` a NUL-terminated string;
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lr_sensitivity(
    scenario: *const LrScenario,
    name: *const c_char,
    rel_step: f64,
    out: *mut f64,
) -> LrStatus {
    guard(|| {
        let s = unsafe { self::scenario(scenario) }?;
        let name = unsafe { string(name, "name") }?;
        let slot = unsafe { self::out(out, "out") }?;
        *slot = sensitivity(&s.cfg, &s.cfg.detector, &s.cfg.tdc, name, rel_step)?;
        Ok(())
    })
}

/// APD gain in `[gain_min, gain_max]` maximising the SNR at `range_m`.
///
/// # Safety
/// `scenario` must be a live handle; `gain_out` and `snr_out` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn lr_optimize_gain(
    scenario: *const LrScenario,
    range_m: f64,
    gain_min: f64,
    gain_max: f64,
    gain_out: *mut f64,
    snr_out: *mut f64,
) -> LrStatus {
    guard(|| {
        let s = unsafe { self::scenario(scenario) }?;
        let gain_slot = unsafe { out(gain_out, "gain_out") }?;
        let snr_slot = unsafe { out(snr_out, "snr_out") }?;
        let DetectorChoice::Apd(params) = &s.cfg.detector else {
            return Err(Fail::Arg("scenario detector is not an APD".to_owned()));
        };
        if !(range_m > 0.0 && range_m.is_finite()) {
            return Err(Fail::Arg(format!("range {range_m} must be > 0")));
        }
        let p = optical_powers(&s.cfg, range_m)?;
        let best = optimize_gain(
            params,
            s.cfg.laser.wavelength_m,
            p.echo_w,
            p.background_w,
            s.cfg.tdc.bandwidth_hz,
            (gain_min, gain_max),
        )?;
        *gain_slot = best.gain;
        *snr_slot = best.snr;
        Ok(())
    })
}

/// Per-comparison false-alarm probability at threshold `tnr`.
#[no_mangle]
pub extern "C" fn lr_false_alarm_prob(tnr: f64) -> f64 {
    false_alarm_prob(tnr)
}

/// Probability that the first trigger in the window is the echo. NaN for
/// invalid arguments.
#[no_mangle]
pub extern "C" fn lr_correct_detection_prob(tnr: f64, window_s: f64, bandwidth_hz: f64, p_detect: f64) -> f64 {
    let policy = TdcPolicy {
        tnr,
        window_s,
        bandwidth_hz,
        limit_detection_prob: 0.5,
    };
    if policy.validate().is_err() || !(0.0..=1.0).contains(&p_detect) {
        return f64::NAN;
    }
    correct_detection_prob(&policy, p_detect)
}

/// Expected fired pixels of a SiPM for `n_photon` incident photons. NaN
/// for invalid arguments.
#[no_mangle]
pub extern "C" fn lr_fired_count(n_pixels: u32, pde: f64, n_photon: f64) -> f64 {
    let params = SipmParams {
        n_pixels,
        pde,
        dead_time_s: 1.0,
        dark_count_rate_cps: 0.0,
    };
    if params.validate().is_err() || n_photon.is_nan() || n_photon < 0.0 {
        return f64::NAN;
    }
    fired_count(&params, n_photon)
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length
/// without the terminator; zero when the last call succeeded.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn lr_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
