//! Threshold-trigger statistics of the time-to-digital converter.
//!
//! Background noise at the comparator input is Gaussian with standard
//! deviation σ. The threshold sits at `tnr · σ`; within one detection
//! window the comparator makes `M = window · bandwidth` comparisons.

use std::f64::consts::SQRT_2;

use crate::{Error, Result};

/// Threshold policy. The detection limit is the signal level at which the
/// trigger SNR equals `tnr`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdcPolicy {
    /// Threshold-to-noise ratio U_TDC / σ(U_b).
    pub tnr: f64,
    pub window_s: f64,
    pub bandwidth_hz: f64,
    /// Single-pulse detection probability at the sensitivity limit.
    pub limit_detection_prob: f64,
}

impl Default for TdcPolicy {
    fn default() -> Self {
        TdcPolicy {
            tnr: 5.0,
            window_s: 4e-6,
            bandwidth_hz: 167e6,
            limit_detection_prob: 0.5,
        }
    }
}

impl TdcPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.tnr > 0.0 && self.tnr.is_finite()) {
            return Err(Error::config("tnr", format!("{} must be > 0", self.tnr)));
        }
        if !(self.window_s > 0.0) {
            return Err(Error::config("window", "must be > 0"));
        }
        if !(self.bandwidth_hz > 0.0 && self.bandwidth_hz.is_finite()) {
            return Err(Error::config("bandwidth", "must be > 0"));
        }
        if !(self.limit_detection_prob > 0.0 && self.limit_detection_prob <= 1.0) {
            return Err(Error::config("limit_detection_prob", "must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Comparisons per detection window, rounded, at least one.
    pub fn comparisons(&self) -> u64 {
        ((self.window_s * self.bandwidth_hz).round() as u64).max(1)
    }

    pub fn false_alarm_prob(&self) -> f64 {
        false_alarm_prob(self.tnr)
    }
}

/// Per-comparison probability that Gaussian noise alone crosses the
/// threshold, ½ − ½·erf(tnr/√2).
///
/// Evaluated as ½·erfc(tnr/√2) so the tail keeps full relative precision;
/// `libm::erfc` is accurate to about one ulp.
pub fn false_alarm_prob(tnr: f64) -> f64 {
    0.5 * libm::erfc(tnr / SQRT_2)
}

/// Probability that the first trigger in a window comes from the laser
/// pulse, with the pulse at the end of the window (worst case):
///
/// `q·p_d / (1 − q·(1 − p_d))`, `q = (1 − P_f)^(M−1)`.
pub fn correct_detection_prob(policy: &TdcPolicy, p_d: f64) -> f64 {
    correct_detection_prob_with(false_alarm_prob(policy.tnr), policy.comparisons(), p_d)
}

pub(crate) fn correct_detection_prob_with(p_f: f64, comparisons: u64, p_d: f64) -> f64 {
    let log_quiet = (comparisons - 1) as f64 * (-p_f).ln_1p();
    let quiet = log_quiet.exp();
    // 1 − q(1 − p_d) written as (1 − q) + q·p_d keeps exactness at q = 1.
    let denom = -log_quiet.exp_m1() + quiet * p_d;
    if denom <= 0.0 {
        // p_d = 0 with no false alarms: nothing ever triggers.
        return 0.0;
    }
    (quiet * p_d / denom).clamp(0.0, 1.0)
}

/// Weakest detectable peak signal, `tnr · σ`.
pub fn min_detectable_signal(policy: &TdcPolicy, noise_sigma: f64) -> f64 {
    policy.tnr * noise_sigma
}
