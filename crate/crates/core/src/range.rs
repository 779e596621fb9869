//! From optical powers to the maximum detectable range.
//!
//! The pipeline evaluates the trigger SNR of the chosen detector at a given
//! range and solves `SNR(R) = TNR` by bisection. Closed-form photon-limited
//! ranges and log-log sensitivities are provided on top of it.

use std::f64::consts::{PI, SQRT_2};

use crate::apd::{self, ApdParams, ExcessNoise};
use crate::constants::photon_energy;
use crate::optimize::bisect_decreasing;
use crate::scenario::ScenarioConfig;
use crate::scene::{
    background_power_from_irradiance, echo_power, effective_aperture, sun_equivalent_irradiance, AtmosphereModel,
    OpticalPowers, SceneGeometry, SolarModel,
};
use crate::sipm::monte_carlo::{monte_carlo_snr, McInputs, SipmMcConfig};
use crate::sipm::{self, PhotonCounts, SipmParams};
use crate::tdc::TdcPolicy;
use crate::{Error, Result};

/// Lower end of the range bracket, metres.
pub const MIN_RANGE_M: f64 = 1.0;
/// Upper cap of the range bracket, metres.
pub const MAX_RANGE_CAP_M: f64 = 100_000.0;

/// Largest acceptable SNR standard error at the bracket ends, relative to TNR.
const MC_STD_ERROR_BUDGET: f64 = 0.05;
const MC_MAX_TRIALS: u32 = 64_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SipmSnrMode {
    /// Occupancy model with binomial background noise.
    Analytic,
    /// Large-array, photon-limited simplification.
    Approx,
    /// Time-domain dead-time simulation.
    MonteCarlo(SipmMcConfig),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetectorChoice {
    Apd(ApdParams),
    Sipm { params: SipmParams, mode: SipmSnrMode },
}

impl DetectorChoice {
    /// Short name used in CSV headers and status strings.
    pub fn label(&self) -> &'static str {
        match self {
            DetectorChoice::Apd(_) => "apd",
            DetectorChoice::Sipm { mode, .. } => match mode {
                SipmSnrMode::Analytic => "sipm",
                SipmSnrMode::Approx => "sipm_approx",
                SipmSnrMode::MonteCarlo(_) => "sipm_mc",
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DetectorChoice::Apd(p) => p.validate(),
            DetectorChoice::Sipm { params, mode } => {
                params.validate()?;
                if let SipmSnrMode::MonteCarlo(mc) = mode {
                    mc.validate(params)?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RangeMethod {
    Pipeline,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeResult {
    pub r_max_m: f64,
    pub snr_at_rmax: f64,
    /// Echo power at `r_max_m`, the weakest detectable signal.
    pub min_detectable_power_w: f64,
    pub background_power_w: f64,
    pub method: RangeMethod,
    /// Zero for deterministic detector models.
    pub snr_std_error: f64,
    pub iterations: u32,
}

/// Trigger SNR with the flags the detector models raise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrEstimate {
    pub value: f64,
    /// Zero for deterministic detector models.
    pub std_error: f64,
    /// The echo fires most of the free SiPM pixels (near-range limit).
    pub saturated: bool,
    pub noiseless: bool,
}

/// Termination settings for [`max_range_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub width_tol_m: f64,
    /// Required |SNR − TNR| / TNR at the returned range. Ignored in Monte
    /// Carlo mode, where the residual is dominated by sampling noise.
    pub snr_rel_tol: f64,
    pub max_iterations: u32,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            width_tol_m: 1e-3,
            snr_rel_tol: 1e-7,
            max_iterations: 200,
        }
    }
}

/// Echo and background power with the target at `range_m`.
pub fn optical_powers(cfg: &ScenarioConfig, range_m: f64) -> Result<OpticalPowers> {
    let e_sun = sun_equivalent_irradiance(&cfg.solar)?;
    Ok(powers_with_irradiance(cfg, range_m, e_sun))
}

fn powers_with_irradiance(cfg: &ScenarioConfig, range_m: f64, e_sun: f64) -> OpticalPowers {
    let scene = SceneGeometry { range_m, ..cfg.scene };
    OpticalPowers {
        echo_w: echo_power(&scene, &cfg.atmosphere, &cfg.optics, &cfg.target, &cfg.laser),
        background_w: background_power_from_irradiance(&scene, &cfg.atmosphere, &cfg.optics, &cfg.target, e_sun),
    }
}

/// Trigger SNR of `detector` for powers `p`, with the scenario's laser and
/// bandwidth.
pub fn detector_snr(cfg: &ScenarioConfig, detector: &DetectorChoice, p: &OpticalPowers) -> Result<SnrEstimate> {
    let lambda = cfg.laser.wavelength_m;
    let bw = cfg.tdc.bandwidth_hz;
    match detector {
        DetectorChoice::Apd(params) => Ok(SnrEstimate {
            value: apd::trigger_snr(params, lambda, p.echo_w, p.background_w, bw),
            std_error: 0.0,
            saturated: false,
            noiseless: false,
        }),
        DetectorChoice::Sipm { params, mode } => {
            let fwhm = cfg.laser.pulse_fwhm_s;
            match mode {
                SipmSnrMode::Analytic => {
                    let counts = PhotonCounts::from_powers(params, p.echo_w, p.background_w, fwhm, lambda);
                    let s = sipm::trigger_snr_analytic(params, &counts)?;
                    Ok(SnrEstimate {
                        value: s.value,
                        std_error: 0.0,
                        saturated: s.saturated,
                        noiseless: s.noiseless,
                    })
                }
                SipmSnrMode::Approx => {
                    let s = sipm::trigger_snr_approx(params, p.echo_w, p.background_w, fwhm, lambda);
                    Ok(SnrEstimate {
                        value: s.value,
                        std_error: 0.0,
                        saturated: s.saturated,
                        noiseless: s.noiseless,
                    })
                }
                SipmSnrMode::MonteCarlo(mc) => {
                    let inputs = McInputs {
                        p_r: p.echo_w,
                        p_rs: p.background_w,
                        pulse_fwhm_s: fwhm,
                        wavelength_m: lambda,
                        bandwidth_hz: bw,
                    };
                    let n_s_photon = sipm::signal_photons(p.echo_w, fwhm, lambda);
                    let s = monte_carlo_snr(params, &inputs, mc)?;
                    Ok(SnrEstimate {
                        value: s.snr,
                        std_error: s.std_error,
                        saturated: sipm::fire_probability(params, n_s_photon) >= sipm::SATURATION_FILL,
                        noiseless: s.noiseless,
                    })
                }
            }
        }
    }
}

/// Trigger SNR with flags at `range_m`.
pub fn snr_estimate(cfg: &ScenarioConfig, detector: &DetectorChoice, range_m: f64) -> Result<SnrEstimate> {
    if !(range_m > 0.0 && range_m.is_finite()) {
        return Err(Error::config("range_m", format!("{range_m} must be > 0")));
    }
    let p = optical_powers(cfg, range_m)?;
    detector_snr(cfg, detector, &p).map_err(|e| e.at_range(range_m))
}

/// Trigger SNR at `range_m`.
pub fn snr_at_range(cfg: &ScenarioConfig, detector: &DetectorChoice, range_m: f64) -> Result<f64> {
    snr_estimate(cfg, detector, range_m).map(|s| s.value)
}

/// Range at which the trigger SNR falls to the threshold, default solver.
pub fn max_range(cfg: &ScenarioConfig, detector: &DetectorChoice, policy: &TdcPolicy) -> Result<RangeResult> {
    max_range_with(cfg, detector, policy, &SolverOptions::default())
}

/// Bisection on `[1 m, r_hi]`; `r_hi` starts at 100 m and doubles until the
/// SNR drops below TNR, capped at 100 km.
///
/// In Monte Carlo mode the trial count is doubled until the SNR standard
/// error at the upper bracket end and at the returned range is below 5 % of
/// TNR, and every evaluation
/// reuses the same seed so the sampled SNR curve is smooth in range.
pub fn max_range_with(
    cfg: &ScenarioConfig,
    detector: &DetectorChoice,
    policy: &TdcPolicy,
    opts: &SolverOptions,
) -> Result<RangeResult> {
    policy.validate()?;
    detector.validate()?;
    let cfg = ScenarioConfig {
        tdc: *policy,
        ..cfg.clone()
    };
    let tnr = policy.tnr;
    let e_sun = sun_equivalent_irradiance(&cfg.solar)?;
    let eval = |det: &DetectorChoice, r: f64| -> Result<SnrEstimate> {
        let p = powers_with_irradiance(&cfg, r, e_sun);
        detector_snr(&cfg, det, &p).map_err(|e| e.at_range(r))
    };

    let at_lo = eval(detector, MIN_RANGE_M)?;
    if at_lo.value < tnr {
        return Err(Error::NoDetection {
            snr: at_lo.value,
            tnr,
            range_m: MIN_RANGE_M,
        });
    }
    let mut hi = 100.0_f64;
    let mut at_hi = eval(detector, hi)?;
    while at_hi.value >= tnr {
        if hi >= MAX_RANGE_CAP_M {
            return Err(Error::UnboundedRange {
                snr: at_hi.value,
                tnr,
                range_m: hi,
            });
        }
        hi = (hi * 2.0).min(MAX_RANGE_CAP_M);
        at_hi = eval(detector, hi)?;
    }

    // The Monte Carlo error budget applies near the root: at the upper
    // bracket end and at the returned range, both within a factor two of it.
    // Far inside the bracket the SNR is many TNRs away and its absolute
    // error is irrelevant to the sign test.
    let mut detector = *detector;
    let (residual_tol, budget) = match &mut detector {
        DetectorChoice::Sipm {
            params,
            mode: SipmSnrMode::MonteCarlo(mc),
        } => {
            let budget = MC_STD_ERROR_BUDGET * tnr;
            let mut err = at_hi.std_error;
            while err > budget && mc.n_trials < MC_MAX_TRIALS {
                mc.n_trials = (mc.n_trials * 2).min(MC_MAX_TRIALS);
                let det = DetectorChoice::Sipm {
                    params: *params,
                    mode: SipmSnrMode::MonteCarlo(*mc),
                };
                err = eval(&det, hi)?.std_error;
            }
            (f64::INFINITY, Some(budget))
        }
        _ => (opts.snr_rel_tol * tnr, None),
    };

    let (b, last) = loop {
        let mut last = at_hi;
        let b = bisect_decreasing(
            |r| {
                last = eval(&detector, r)?;
                Ok::<_, Error>(last.value)
            },
            tnr,
            MIN_RANGE_M,
            hi,
            opts.width_tol_m,
            residual_tol,
            opts.max_iterations,
        )?;
        match (&mut detector, budget) {
            (
                DetectorChoice::Sipm {
                    mode: SipmSnrMode::MonteCarlo(mc),
                    ..
                },
                Some(budget),
            ) if last.std_error > budget && mc.n_trials < MC_MAX_TRIALS => {
                mc.n_trials = (mc.n_trials * 2).min(MC_MAX_TRIALS);
            }
            _ => break (b, last),
        }
    };
    let p = powers_with_irradiance(&cfg, b.root, e_sun);
    Ok(RangeResult {
        r_max_m: b.root,
        snr_at_rmax: b.value,
        min_detectable_power_w: p.echo_w,
        background_power_w: p.background_w,
        method: RangeMethod::Pipeline,
        snr_std_error: last.std_error,
        iterations: b.iterations,
    })
}

/// Photon-limited closed-form maximum range.
///
/// SiPM (large array, background dominated):
///
/// `R = [τ^1.5·η_r·cosθ / (2π·√(hν·η_rs·τ_dead·cosθ_s))]^½ ·
///      (η_PDE·ρ·A/E_sun)^¼ · (P_t·B_pulse·f / (TNR·r_pD))^½`
///
/// APD (background shot noise only):
///
/// `R = [τ^1.5·η_r·cosθ / (√2·π·√(hν·η_rs·cosθ_s))]^½ ·
///      (η_qe·ρ·A/(E_sun·F·B_w))^¼ · (P_t·f / (TNR·r_pD))^½`
///
/// Both follow from setting the simplified SNR equal to TNR; the SiPM form
/// reproduces the `Approx` pipeline exactly. Requires a fixed-transmittance
/// atmosphere, since extinction makes the range equation transcendental.
pub fn closed_form_max_range(cfg: &ScenarioConfig, detector: &DetectorChoice) -> Result<f64> {
    let tau = match cfg.atmosphere {
        AtmosphereModel::FixedTransmittance(t) => t,
        AtmosphereModel::Extinction { .. } => {
            return Err(Error::config(
                "atmosphere",
                "closed-form range needs a fixed transmittance",
            ))
        }
    };
    let e_sun = sun_equivalent_irradiance(&cfg.solar)?;
    let o = &cfg.optics;
    let hv = photon_energy(cfg.laser.wavelength_m);
    let area = effective_aperture(o, cfg.scene.elevation_angle_rad);
    let geometry = tau.powf(1.5) * o.laser_efficiency * cfg.scene.incidence_angle_rad.cos();
    let sun_cos = cfg.scene.sun_angle_rad.cos();
    let rho = cfg.target.reflectivity;
    let tnr = cfg.tdc.tnr;
    let optics_ratio = o.focal_length_m / o.detector_radius_m;
    let p_t = cfg.laser.peak_power_w;

    let r = match detector {
        DetectorChoice::Sipm { params, .. } => {
            let lead = geometry / (2.0 * PI * (hv * o.sun_efficiency * params.dead_time_s * sun_cos).sqrt());
            let quarter = params.pde * rho * area / e_sun;
            let half = p_t * cfg.laser.pulse_fwhm_s * optics_ratio / tnr;
            lead.sqrt() * quarter.powf(0.25) * half.sqrt()
        }
        DetectorChoice::Apd(params) => {
            let f = apd::excess_noise_factor(params);
            let lead = geometry / (SQRT_2 * PI * (hv * o.sun_efficiency * sun_cos).sqrt());
            let quarter = params.quantum_efficiency * rho * area / (e_sun * f * cfg.tdc.bandwidth_hz);
            let half = p_t * optics_ratio / tnr;
            lead.sqrt() * quarter.powf(0.25) * half.sqrt()
        }
    };
    Ok(r)
}

/// Names accepted by [`sensitivity`] and [`set_parameter`].
///
/// Angles are in radians, everything else in SI units. The detector
/// parameters apply only to the matching detector kind.
pub const PARAMETERS: &[&str] = &[
    "peak_power",
    "repetition_rate",
    "pulse_width",
    "wavelength",
    "reflectivity",
    "transmittance",
    "laser_efficiency",
    "sun_efficiency",
    "aperture_radius",
    "focal_length",
    "detector_radius",
    "sun_irradiance",
    "incidence_angle",
    "elevation_angle",
    "sun_angle",
    "bandwidth",
    "window",
    "tnr",
    "gain",
    "quantum_efficiency",
    "excess_noise_index",
    "electron_ionization_rate",
    "surface_dark_current",
    "bulk_dark_current",
    "load_resistance",
    "temperature",
    "amplifier_noise",
    "n_pixels",
    "pde",
    "dead_time",
    "dark_count_rate",
];

fn not_for(name: &str, detector: &DetectorChoice) -> Error {
    Error::UnknownParameter(format!("{name} does not apply to the {} detector", detector.label()))
}

/// Current value of a registry parameter.
pub fn get_parameter(cfg: &ScenarioConfig, detector: &DetectorChoice, name: &str) -> Result<f64> {
    let v = match name {
        "peak_power" => cfg.laser.peak_power_w,
        "repetition_rate" => cfg.laser.repetition_hz,
        "pulse_width" => cfg.laser.pulse_fwhm_s,
        "wavelength" => cfg.laser.wavelength_m,
        "reflectivity" => cfg.target.reflectivity,
        "transmittance" => match cfg.atmosphere {
            AtmosphereModel::FixedTransmittance(t) => t,
            AtmosphereModel::Extinction { .. } => {
                return Err(Error::config(
                    "transmittance",
                    "atmosphere uses an extinction coefficient",
                ))
            }
        },
        "laser_efficiency" => cfg.optics.laser_efficiency,
        "sun_efficiency" => cfg.optics.sun_efficiency,
        "aperture_radius" => cfg.optics.aperture_radius_m,
        "focal_length" => cfg.optics.focal_length_m,
        "detector_radius" => cfg.optics.detector_radius_m,
        "sun_irradiance" => sun_equivalent_irradiance(&cfg.solar)?,
        "incidence_angle" => cfg.scene.incidence_angle_rad,
        "elevation_angle" => cfg.scene.elevation_angle_rad,
        "sun_angle" => cfg.scene.sun_angle_rad,
        "bandwidth" => cfg.tdc.bandwidth_hz,
        "window" => cfg.tdc.window_s,
        "tnr" => cfg.tdc.tnr,
        _ => match (detector, name) {
            (DetectorChoice::Apd(p), _) => match name {
                "gain" => p.gain,
                "quantum_efficiency" => p.quantum_efficiency,
                "excess_noise_index" => match p.excess_noise {
                    ExcessNoise::PowerLaw { index } => index,
                    _ => return Err(not_for(name, detector)),
                },
                "electron_ionization_rate" => match p.excess_noise {
                    ExcessNoise::Ionization {
                        electron_ionization_rate,
                    } => electron_ionization_rate,
                    _ => return Err(not_for(name, detector)),
                },
                "surface_dark_current" => p.surface_dark_current_a,
                "bulk_dark_current" => p.bulk_dark_current_a,
                "load_resistance" => p.load_resistance_ohm,
                "temperature" => p.temperature_k,
                "amplifier_noise" => p.amplifier_noise_a,
                _ if PARAMETERS.contains(&name) => return Err(not_for(name, detector)),
                _ => return Err(Error::UnknownParameter(name.to_owned())),
            },
            (DetectorChoice::Sipm { params: p, .. }, _) => match name {
                "n_pixels" => f64::from(p.n_pixels),
                "pde" => p.pde,
                "dead_time" => p.dead_time_s,
                "dark_count_rate" => p.dark_count_rate_cps,
                _ if PARAMETERS.contains(&name) => return Err(not_for(name, detector)),
                _ => return Err(Error::UnknownParameter(name.to_owned())),
            },
        },
    };
    Ok(v)
}

/// Sets a registry parameter. `n_pixels` is rounded to the nearest integer.
/// Setting `sun_irradiance` replaces the solar model by a direct irradiance.
pub fn set_parameter(cfg: &mut ScenarioConfig, detector: &mut DetectorChoice, name: &str, value: f64) -> Result<()> {
    // Resolves unknown names and detector mismatches first.
    get_parameter(cfg, detector, name)?;
    match name {
        "peak_power" => cfg.laser.peak_power_w = value,
        "repetition_rate" => cfg.laser.repetition_hz = value,
        "pulse_width" => cfg.laser.pulse_fwhm_s = value,
        "wavelength" => cfg.laser.wavelength_m = value,
        "reflectivity" => cfg.target.reflectivity = value,
        "transmittance" => cfg.atmosphere = AtmosphereModel::FixedTransmittance(value),
        "laser_efficiency" => cfg.optics.laser_efficiency = value,
        "sun_efficiency" => cfg.optics.sun_efficiency = value,
        "aperture_radius" => cfg.optics.aperture_radius_m = value,
        "focal_length" => cfg.optics.focal_length_m = value,
        "detector_radius" => cfg.optics.detector_radius_m = value,
        "sun_irradiance" => cfg.solar = SolarModel::Direct { irradiance_w_m2: value },
        "incidence_angle" => cfg.scene.incidence_angle_rad = value,
        "elevation_angle" => cfg.scene.elevation_angle_rad = value,
        "sun_angle" => cfg.scene.sun_angle_rad = value,
        "bandwidth" => cfg.tdc.bandwidth_hz = value,
        "window" => cfg.tdc.window_s = value,
        "tnr" => cfg.tdc.tnr = value,
        _ => match detector {
            DetectorChoice::Apd(p) => match name {
                "gain" => p.gain = value,
                "quantum_efficiency" => p.quantum_efficiency = value,
                "excess_noise_index" => p.excess_noise = ExcessNoise::PowerLaw { index: value },
                "electron_ionization_rate" => {
                    p.excess_noise = ExcessNoise::Ionization {
                        electron_ionization_rate: value,
                    }
                }
                "surface_dark_current" => p.surface_dark_current_a = value,
                "bulk_dark_current" => p.bulk_dark_current_a = value,
                "load_resistance" => p.load_resistance_ohm = value,
                "temperature" => p.temperature_k = value,
                "amplifier_noise" => p.amplifier_noise_a = value,
                _ => unreachable!("checked by get_parameter"),
            },
            DetectorChoice::Sipm { params: p, .. } => match name {
                "n_pixels" => {
                    if !(value >= 1.0 && value <= f64::from(u32::MAX)) {
                        return Err(Error::config("n_pixels", format!("{value} must be >= 1")));
                    }
                    p.n_pixels = value.round() as u32
                }
                "pde" => p.pde = value,
                "dead_time" => p.dead_time_s = value,
                "dark_count_rate" => p.dark_count_rate_cps = value,
                _ => unreachable!("checked by get_parameter"),
            },
        },
    }
    Ok(())
}

/// Elasticity ∂ln R_max / ∂ln p by central differences at `p·e^{±rel_step}`.
///
/// The derivative uses the values actually applied, so an integer
/// parameter such as `n_pixels` is stepped by at least one. When a step
/// would leave the valid domain (an efficiency at 1, say) a one-sided
/// difference is used instead.
pub fn sensitivity(
    cfg: &ScenarioConfig,
    detector: &DetectorChoice,
    policy: &TdcPolicy,
    param: &str,
    rel_step: f64,
) -> Result<f64> {
    if !(rel_step > 0.0 && rel_step <= 0.1) {
        return Err(Error::config("rel_step", format!("{rel_step} must lie in (0, 0.1]")));
    }
    let base = ScenarioConfig {
        tdc: *policy,
        ..cfg.clone()
    };
    let p0 = get_parameter(&base, detector, param)?;
    if p0 == 0.0 {
        return Err(Error::ZeroParameter(param.to_owned()));
    }
    let opts = SolverOptions {
        width_tol_m: 1e-9,
        snr_rel_tol: 1e-12,
        max_iterations: 200,
    };

    let solve_at = |value: f64| -> Result<(f64, f64)> {
        let mut c = base.clone();
        let mut d = *detector;
        set_parameter(&mut c, &mut d, param, value)?;
        let applied = get_parameter(&c, &d, param)?;
        c.validate_physics()?;
        let r = max_range_with(&c, &d, &c.tdc, &opts)?;
        Ok((applied, r.r_max_m))
    };

    let (mut up, mut down) = (p0 * rel_step.exp(), p0 * (-rel_step).exp());
    if param == "n_pixels" {
        up = up.round().max(p0 + 1.0);
        down = down.round().min(p0 - 1.0);
    }
    let centre = || solve_at(p0);
    let hi = match solve_at(up) {
        Err(Error::Config { .. }) => centre()?,
        other => other?,
    };
    let lo = match solve_at(down) {
        Err(Error::Config { .. }) => centre()?,
        other => other?,
    };
    if hi.0 == lo.0 {
        return Err(Error::config(
            "rel_step",
            format!("{param} cannot be perturbed around {p0}"),
        ));
    }
    Ok((hi.1.ln() - lo.1.ln()) / (hi.0.abs().ln() - lo.0.abs().ln()))
}
