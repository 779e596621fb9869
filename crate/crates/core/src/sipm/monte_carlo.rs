//! Time-domain SiPM simulation with per-pixel dead time.
//!
//! Every pixel is a two-state machine on a fixed time grid: armed, or dead
//! for `τ` after firing. An armed pixel fires in a step when at least one
//! background photon, dark count or echo photon is detected in it. Steps
//! with a constant rate are skipped with geometric waiting times, which is
//! the same process as testing every step.
//!
//! After a warm-up, the count of newly fired pixels per counting period
//! (one bandwidth period, `1/B_w`) is recorded for `noise_periods`
//! background-only periods, followed by one period aligned on the echo.
//! The signal is the mean echo-period count minus the mean background
//! count; the noise is the standard deviation of the background counts.
//! The standard error comes from a leave-one-trial-out jackknife.
//!
//! Each trial draws from its own ChaCha stream `(seed, trial index)`, so
//! results do not depend on how trials are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{signal_photons, SipmParams};
use crate::constants::photon_energy;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PulseShape {
    /// Flat top of width equal to the FWHM.
    #[default]
    Rectangular,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SipmMcConfig {
    pub n_trials: u32,
    pub time_step_s: f64,
    pub pulse_shape: PulseShape,
    pub seed: u64,
    pub warmup_s: f64,
    /// Background-only counting periods recorded per trial.
    pub noise_periods: u32,
}

impl SipmMcConfig {
    /// Step τ/60, warm-up 10τ, 1000 trials, 16 noise periods per trial.
    pub fn defaults_for(params: &SipmParams) -> Self {
        SipmMcConfig {
            n_trials: 1000,
            time_step_s: params.dead_time_s / 60.0,
            pulse_shape: PulseShape::Rectangular,
            seed: 0,
            warmup_s: 10.0 * params.dead_time_s,
            noise_periods: 16,
        }
    }

    pub fn validate(&self, params: &SipmParams) -> Result<()> {
        if self.n_trials < 2 {
            return Err(Error::config("n_trials", "needs at least 2 trials"));
        }
        if self.noise_periods == 0 {
            return Err(Error::config("noise_periods", "must be >= 1"));
        }
        if !(self.time_step_s > 0.0 && self.time_step_s <= params.dead_time_s / 10.0 * (1.0 + 1e-12)) {
            return Err(Error::config(
                "time_step",
                format!(
                    "{} s must be positive and at most a tenth of the dead time ({} s)",
                    self.time_step_s, params.dead_time_s
                ),
            ));
        }
        if !(self.warmup_s >= 3.0 * params.dead_time_s * (1.0 - 1e-12)) {
            return Err(Error::config("warmup", "must cover at least three dead times"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSnr {
    pub snr: f64,
    pub std_error: f64,
    /// Mean excess fired count in the echo period.
    pub signal: f64,
    /// Standard deviation of background-only period counts.
    pub noise: f64,
    pub noiseless: bool,
}

/// Optical inputs of one simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McInputs {
    pub p_r: f64,
    pub p_rs: f64,
    pub pulse_fwhm_s: f64,
    pub wavelength_m: f64,
    pub bandwidth_hz: f64,
}

struct Timeline {
    dead_steps: u64,
    period_steps: u64,
    noise_start: u64,
    noise_periods: u64,
    pulse_window_start: u64,
    /// First step with echo light and the per-step fire probability of an
    /// armed pixel from then on.
    pulse_start: u64,
    pulse_fire_prob: Vec<f64>,
    end: u64,
    /// Per-step fire probability outside the echo.
    background_fire_prob: f64,
}

impl Timeline {
    fn new(params: &SipmParams, inputs: &McInputs, mc: &SipmMcConfig) -> Self {
        let dt = mc.time_step_s;
        let dead_steps = ((params.dead_time_s / dt).round() as u64).max(1);
        let period_steps = ((1.0 / (inputs.bandwidth_hz * dt)).round() as u64).max(1);
        let noise_start = (mc.warmup_s / dt).ceil() as u64;
        let noise_periods = u64::from(mc.noise_periods);
        let pulse_window_start = noise_start + noise_periods * period_steps;

        let n = f64::from(params.n_pixels);
        let hv = photon_energy(inputs.wavelength_m);
        let background_rate = inputs.p_rs * params.pde / (hv * n) + params.dark_count_rate_cps;
        let background_per_step = background_rate * dt;

        // Echo photons credited to the half-maximum window, per pixel, detected.
        let detected_per_pixel = signal_photons(inputs.p_r, inputs.pulse_fwhm_s, inputs.wavelength_m) * params.pde / n;
        let centre = pulse_window_start as f64 + period_steps as f64 / 2.0;
        let (pulse_start, per_step) = match mc.pulse_shape {
            PulseShape::Rectangular => {
                let width = ((inputs.pulse_fwhm_s / dt).round() as u64).max(1);
                let start = (centre - width as f64 / 2.0).round().max(0.0) as u64;
                (start, vec![detected_per_pixel / width as f64; width as usize])
            }
            PulseShape::Gaussian => {
                let sigma = inputs.pulse_fwhm_s / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt()) / dt;
                // Fraction of a Gaussian pulse inside its FWHM.
                let in_fwhm = libm::erf(std::f64::consts::LN_2.sqrt());
                let total = detected_per_pixel / in_fwhm;
                let start = (centre - 5.0 * sigma).floor().max(0.0) as u64;
                let stop = (centre + 5.0 * sigma).ceil() as u64;
                let cdf = |x: f64| 0.5 * libm::erfc(-(x - centre) / (sigma * std::f64::consts::SQRT_2));
                let steps = (start..stop)
                    .map(|k| total * (cdf((k + 1) as f64) - cdf(k as f64)))
                    .collect();
                (start, steps)
            }
        };
        let pulse_fire_prob = per_step
            .iter()
            .map(|s| -(-(background_per_step + s)).exp_m1())
            .collect::<Vec<_>>();
        let end = (pulse_window_start + period_steps).max(pulse_start + pulse_fire_prob.len() as u64);

        Timeline {
            dead_steps,
            period_steps,
            noise_start,
            noise_periods,
            pulse_window_start,
            pulse_start,
            pulse_fire_prob,
            end,
            background_fire_prob: -(-background_per_step).exp_m1(),
        }
    }

    fn pulse_end(&self) -> u64 {
        self.pulse_start + self.pulse_fire_prob.len() as u64
    }

    /// Steps until the first success of a per-step Bernoulli(p), counting
    /// the success step as 0.
    fn geometric(&self, rng: &mut ChaCha8Rng) -> u64 {
        let p = self.background_fire_prob;
        if p <= 0.0 {
            return u64::MAX;
        }
        if p >= 1.0 {
            return 0;
        }
        let u: f64 = 1.0 - rng.random::<f64>();
        let k = (u.ln() / (-p).ln_1p()).floor();
        if k >= u64::MAX as f64 {
            u64::MAX
        } else {
            k as u64
        }
    }

    fn run_trial(&self, n_pixels: u32, rng: &mut ChaCha8Rng) -> TrialStats {
        let mut noise_counts = vec![0u32; self.noise_periods as usize];
        let mut pulse_count = 0u32;
        let noise_end = self.noise_start + self.noise_periods * self.period_steps;
        let pulse_window_end = self.pulse_window_start + self.period_steps;

        for _ in 0..n_pixels {
            let mut t = 0u64;
            while t < self.end {
                let fire = if t < self.pulse_start || t >= self.pulse_end() {
                    let limit = if t < self.pulse_start {
                        self.pulse_start
                    } else {
                        self.end
                    };
                    let k = t.saturating_add(self.geometric(rng));
                    if k < limit {
                        Some(k)
                    } else {
                        t = limit;
                        None
                    }
                } else {
                    let p = self.pulse_fire_prob[(t - self.pulse_start) as usize];
                    if rng.random::<f64>() < p {
                        Some(t)
                    } else {
                        t += 1;
                        None
                    }
                };
                if let Some(k) = fire {
                    if (self.noise_start..noise_end).contains(&k) {
                        noise_counts[((k - self.noise_start) / self.period_steps) as usize] += 1;
                    } else if (self.pulse_window_start..pulse_window_end).contains(&k) {
                        pulse_count += 1;
                    }
                    t = k + self.dead_steps;
                }
            }
        }

        let noise_sum = noise_counts.iter().map(|&c| f64::from(c)).sum();
        let noise_sq = noise_counts.iter().map(|&c| f64::from(c) * f64::from(c)).sum();
        TrialStats {
            pulse: f64::from(pulse_count),
            noise_sum,
            noise_sq,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct TrialStats {
    pulse: f64,
    noise_sum: f64,
    noise_sq: f64,
}

impl std::ops::Add for TrialStats {
    type Output = TrialStats;
    fn add(self, o: TrialStats) -> TrialStats {
        TrialStats {
            pulse: self.pulse + o.pulse,
            noise_sum: self.noise_sum + o.noise_sum,
            noise_sq: self.noise_sq + o.noise_sq,
        }
    }
}

impl std::ops::Sub for TrialStats {
    type Output = TrialStats;
    fn sub(self, o: TrialStats) -> TrialStats {
        TrialStats {
            pulse: self.pulse - o.pulse,
            noise_sum: self.noise_sum - o.noise_sum,
            noise_sq: self.noise_sq - o.noise_sq,
        }
    }
}

/// (signal, noise) from pooled sums over `trials` trials.
fn estimate(total: TrialStats, trials: f64, periods: f64) -> (f64, f64) {
    let samples = trials * periods;
    let mean_noise = total.noise_sum / samples;
    let var = ((total.noise_sq - samples * mean_noise * mean_noise) / (samples - 1.0)).max(0.0);
    (total.pulse / trials - mean_noise, var.sqrt())
}

/// Trigger SNR of the simulated array, with its standard error.
pub fn monte_carlo_snr(params: &SipmParams, inputs: &McInputs, mc: &SipmMcConfig) -> Result<McSnr> {
    params.validate()?;
    mc.validate(params)?;
    if !(inputs.bandwidth_hz > 0.0) {
        return Err(Error::config("bandwidth", "must be > 0"));
    }
    let timeline = Timeline::new(params, inputs, mc);

    let trials: Vec<TrialStats> = (0..mc.n_trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(mc.seed);
            rng.set_stream(u64::from(i));
            timeline.run_trial(params.n_pixels, &mut rng)
        })
        .collect();

    // Sequential fold keeps the floating-point sum order fixed.
    let total = trials.iter().fold(TrialStats::default(), |acc, &t| acc + t);
    let n = f64::from(mc.n_trials);
    let periods = timeline.noise_periods as f64;
    let (signal, noise) = estimate(total, n, periods);

    if noise == 0.0 {
        return Ok(McSnr {
            snr: if signal > 0.0 { f64::INFINITY } else { 0.0 },
            std_error: 0.0,
            signal,
            noise,
            noiseless: true,
        });
    }
    let snr = signal / noise;

    let jack: Vec<f64> = trials
        .iter()
        .map(|&t| {
            let (s, sd) = estimate(total - t, n - 1.0, periods);
            s / sd
        })
        .collect();
    let jack_mean = jack.iter().sum::<f64>() / n;
    let std_error = ((n - 1.0) / n * jack.iter().map(|v| (v - jack_mean).powi(2)).sum::<f64>()).sqrt();

    Ok(McSnr {
        snr,
        std_error,
        signal,
        noise,
        noiseless: false,
    })
}
