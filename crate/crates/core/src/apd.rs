//! Linear-mode avalanche photodiode: photocurrent, noise budget, trigger SNR
//! and the multiplication gain that maximises it.
//!
//! The signal is the multiplied photocurrent at the echo's peak power. The
//! noise used for triggering is the no-echo noise: background shot noise,
//! dark-current shot noise, Johnson noise of the load and a lumped
//! amplifier term, all independent and added in quadrature.

use crate::constants::{BOLTZMANN, ELEMENTARY_CHARGE, PLANCK, SPEED_OF_LIGHT};
use crate::optimize::maximize_scalar;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExcessNoise {
    /// F = M^x.
    PowerLaw { index: f64 },
    /// F = k·M + (1 − k)(2 − 1/M), k the electron ionization-rate ratio.
    Ionization { electron_ionization_rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApdParams {
    /// Multiplication factor M.
    pub gain: f64,
    pub quantum_efficiency: f64,
    pub excess_noise: ExcessNoise,
    /// Surface leakage, not multiplied.
    pub surface_dark_current_a: f64,
    /// Bulk dark current, multiplied with the photocurrent.
    pub bulk_dark_current_a: f64,
    pub load_resistance_ohm: f64,
    pub temperature_k: f64,
    /// RMS amplifier and coupling noise, amperes.
    pub amplifier_noise_a: f64,
}

impl ApdParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gain >= 1.0 && self.gain.is_finite()) {
            return Err(Error::config("gain", format!("{} must be >= 1", self.gain)));
        }
        if !(self.quantum_efficiency > 0.0 && self.quantum_efficiency <= 1.0) {
            return Err(Error::config("quantum_efficiency", "must lie in (0, 1]"));
        }
        match self.excess_noise {
            ExcessNoise::PowerLaw { index } if !(index >= 0.0) => {
                return Err(Error::config("excess_noise_index", "must be >= 0"))
            }
            ExcessNoise::Ionization {
                electron_ionization_rate: k,
            } if !(0.0..=1.0).contains(&k) => {
                return Err(Error::config("electron_ionization_rate", "must lie in [0, 1]"))
            }
            _ => {}
        }
        for (field, v) in [
            ("surface_dark_current", self.surface_dark_current_a),
            ("bulk_dark_current", self.bulk_dark_current_a),
            ("temperature", self.temperature_k),
            ("amplifier_noise", self.amplifier_noise_a),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(field, format!("{v} must be >= 0")));
            }
        }
        if !(self.load_resistance_ohm > 0.0) {
            return Err(Error::config("load_resistance", "must be > 0"));
        }
        Ok(())
    }

    fn with_gain(&self, gain: f64) -> Self {
        ApdParams { gain, ..*self }
    }
}

/// RMS noise components in amperes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseBudget {
    pub sigma_signal_a: f64,
    pub sigma_background_a: f64,
    pub sigma_dark_a: f64,
    pub sigma_thermal_a: f64,
    pub sigma_amplifier_a: f64,
    pub total_a: f64,
}

/// K_PD = e·η·λ/(h·c), A/W before multiplication.
pub fn responsivity(wavelength_m: f64, quantum_efficiency: f64) -> f64 {
    ELEMENTARY_CHARGE * quantum_efficiency * wavelength_m / (PLANCK * SPEED_OF_LIGHT)
}

/// Peak photocurrent K_PD·M·P_r.
pub fn signal_current(params: &ApdParams, wavelength_m: f64, p_r: f64) -> f64 {
    responsivity(wavelength_m, params.quantum_efficiency) * params.gain * p_r
}

pub fn excess_noise_factor(params: &ApdParams) -> f64 {
    let m = params.gain;
    match params.excess_noise {
        ExcessNoise::PowerLaw { index } => m.powf(index),
        ExcessNoise::Ionization {
            electron_ionization_rate: k,
        } => k * m + (1.0 - k) * (2.0 - 1.0 / m),
    }
}

/// Noise components for echo power `p_r` on top of background `p_rs`.
/// Pass `p_r = 0` for the no-echo noise that sets the trigger threshold.
pub fn noise_sigma(params: &ApdParams, wavelength_m: f64, p_rs: f64, p_r: f64, bandwidth_hz: f64) -> NoiseBudget {
    let e = ELEMENTARY_CHARGE;
    let k_pd = responsivity(wavelength_m, params.quantum_efficiency);
    let mult = params.gain * params.gain * excess_noise_factor(params);

    let signal2 = 2.0 * e * k_pd * p_r * mult * bandwidth_hz;
    let background2 = 2.0 * e * k_pd * p_rs * mult * bandwidth_hz;
    let dark2 = 2.0 * e * params.surface_dark_current_a * bandwidth_hz
        + 2.0 * e * params.bulk_dark_current_a * mult * bandwidth_hz;
    let thermal2 = 4.0 * BOLTZMANN * params.temperature_k * bandwidth_hz / params.load_resistance_ohm;
    let amp2 = params.amplifier_noise_a * params.amplifier_noise_a;

    NoiseBudget {
        sigma_signal_a: signal2.sqrt(),
        sigma_background_a: background2.sqrt(),
        sigma_dark_a: dark2.sqrt(),
        sigma_thermal_a: thermal2.sqrt(),
        sigma_amplifier_a: params.amplifier_noise_a,
        total_a: (signal2 + background2 + dark2 + thermal2 + amp2).sqrt(),
    }
}

/// Peak signal current over the no-echo noise.
pub fn trigger_snr(params: &ApdParams, wavelength_m: f64, p_r: f64, p_rs: f64, bandwidth_hz: f64) -> f64 {
    let signal = signal_current(params, wavelength_m, p_r);
    if signal == 0.0 {
        return 0.0;
    }
    signal / noise_sigma(params, wavelength_m, p_rs, 0.0, bandwidth_hz).total_a
}

/// Gain-independent coefficients of the reduced SNR form
/// `K·M·P_r / √(a·K·P_rs·M^(2+x) + b·M^(2+x) + c)`, power-law excess noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseCoefficients {
    /// Optical: 2e·B_w.
    pub a: f64,
    /// Multiplied dark current: 2e·i_db·B_w.
    pub b: f64,
    /// Unmultiplied electrical: 2e·i_ds·B_w + 4k_B·T·B_w/R_l + σ_c².
    pub c: f64,
}

impl NoiseCoefficients {
    pub fn new(params: &ApdParams, bandwidth_hz: f64) -> Self {
        let e = ELEMENTARY_CHARGE;
        NoiseCoefficients {
            a: 2.0 * e * bandwidth_hz,
            b: 2.0 * e * params.bulk_dark_current_a * bandwidth_hz,
            c: 2.0 * e * params.surface_dark_current_a * bandwidth_hz
                + 4.0 * BOLTZMANN * params.temperature_k * bandwidth_hz / params.load_resistance_ohm
                + params.amplifier_noise_a * params.amplifier_noise_a,
        }
    }

    /// Reduced-form SNR at gain `m` with excess-noise index `x`.
    pub fn snr(&self, k_pd: f64, m: f64, x: f64, p_r: f64, p_rs: f64) -> f64 {
        let mx = m.powf(2.0 + x);
        k_pd * m * p_r / (self.a * k_pd * p_rs * mx + self.b * mx + self.c).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainOptimum {
    pub gain: f64,
    pub snr: f64,
}

pub const DEFAULT_GAIN_BOUNDS: (f64, f64) = (1.0, 1000.0);

/// Gain that maximises the trigger SNR at fixed optical powers.
///
/// A 64-point log scan brackets the global optimum, then golden-section
/// search narrows it to 1e-6 relative width. SNR is linear in `p_r`, so the
/// argmax does not depend on it.
pub fn optimize_gain(
    params: &ApdParams,
    wavelength_m: f64,
    p_r: f64,
    p_rs: f64,
    bandwidth_hz: f64,
    gain_bounds: (f64, f64),
) -> Result<GainOptimum> {
    let (lo, hi) = gain_bounds;
    if !(lo >= 1.0 && hi > lo && hi.is_finite()) {
        return Err(Error::config(
            "gain_bounds",
            format!("[{lo}, {hi}] must satisfy 1 <= lo < hi"),
        ));
    }
    // Optimise SNR per watt of echo so a zero echo still has a well-defined argmax.
    let per_watt = |m: f64| trigger_snr(&params.with_gain(m), wavelength_m, 1.0, p_rs, bandwidth_hz);
    let (gain, _) = maximize_scalar(per_watt, lo, hi, 64, 1e-6);
    Ok(GainOptimum {
        gain,
        snr: trigger_snr(&params.with_gain(gain), wavelength_m, p_r, p_rs, bandwidth_hz),
    })
}
