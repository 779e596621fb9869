//! Scenario files and the reference parameter set.
//!
//! Scenarios are TOML documents in engineering units (W, nm, ns, kHz, MHz,
//! µs, %, klux, mm, nA, Ω, cps, m, degrees). Everything is converted to SI
//! on load and back on save; unknown keys are rejected.
//!
//! ```toml
//! schema_version = 1
//!
//! [scene]
//! range_m = 100.0
//! incidence_angle_deg = 0.0
//! elevation_angle_deg = 0.0
//! sun_angle_deg = 60.0
//!
//! [atmosphere]
//! mode = "fixed_transmittance"     # or "extinction" with extinction_per_km
//! transmittance_percent = 98.0
//!
//! [optics]
//! aperture_radius_m = 0.025
//! focal_length_m = 0.03
//! detector_radius_mm = 0.1
//! laser_efficiency_percent = 72.06
//! sun_efficiency_percent = 79.86
//! aperture_model = "constant"       # or "cosine"
//!
//! [target]
//! reflectivity_percent = 10.0
//!
//! [laser]
//! peak_power_w = 45.0
//! wavelength_nm = 905.0
//! pulse_width_ns = 6.0
//! repetition_khz = 50.0
//!
//! [solar]
//! mode = "illuminance_scaled"       # or "direct" / "spectrum"
//! illuminance_klux = 100.0
//! reference_klux = 100.0
//! reference_irradiance_w_m2 = 29.4
//!
//! [tdc]
//! tnr = 5.0
//! window_us = 4.0
//! bandwidth_mhz = 167.0
//! limit_detection_prob = 0.5
//!
//! [detector]
//! kind = "sipm"
//! n_pixels = 400
//! pde_percent = 22.0
//! dead_time_ns = 6.0
//! dark_count_rate_cps = 2007.0
//! snr_mode = "analytic"             # or "approx" / "monte_carlo"
//! ```
//!
//! An APD detector block carries `gain`, `quantum_efficiency_percent`,
//! `excess_noise_mode` (`power_law` with `excess_noise_index`, or
//! `ionization` with `electron_ionization_rate`), `surface_dark_current_na`,
//! `bulk_dark_current_na`, `load_resistance_ohm`, `temperature_k` and
//! `amplifier_noise_na`. A `monte_carlo` SiPM may add a
//! `[detector.monte_carlo]` table with `n_trials`, `time_step_ns`,
//! `warmup_ns`, `pulse_shape`, `seed` and `noise_periods`.
//!
//! A spectrum solar model takes either `spectrum_file` (CSV, relative to
//! the scenario file) or inline `rows = [[nm, W/m²/nm, transmittance], ...]`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::apd::{ApdParams, ExcessNoise};
use crate::range::{DetectorChoice, SipmSnrMode};
use crate::scene::{
    ApertureModel, AtmosphereModel, LaserParams, ReceiverOptics, SceneGeometry, SolarModel, SpectrumRow, SpectrumTable,
    TargetModel,
};
use crate::sipm::monte_carlo::{PulseShape, SipmMcConfig};
use crate::sipm::SipmParams;
use crate::tdc::TdcPolicy;
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Solar irradiance in the receiver band at 100 klux.
pub const REFERENCE_IRRADIANCE_W_M2: f64 = 29.4;
pub const REFERENCE_ILLUMINANCE_KLUX: f64 = 100.0;

/// Full parameter set of one Lidar design in one scene.
///
/// The comparator bandwidth lives in `tdc`; detector noise models read it
/// from there.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scene: SceneGeometry,
    pub atmosphere: AtmosphereModel,
    pub optics: ReceiverOptics,
    pub target: TargetModel,
    pub laser: LaserParams,
    pub solar: SolarModel,
    pub tdc: TdcPolicy,
    pub detector: DetectorChoice,
}

impl ScenarioConfig {
    /// Everything except the detector.
    pub fn validate_physics(&self) -> Result<()> {
        self.scene.validate()?;
        self.atmosphere.validate()?;
        self.optics.validate()?;
        self.target.validate()?;
        self.laser.validate()?;
        self.solar.validate()?;
        self.tdc.validate()
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_physics()?;
        self.detector.validate()
    }

    pub fn with_detector(&self, detector: DetectorChoice) -> Self {
        ScenarioConfig {
            detector,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorKind {
    Apd,
    Sipm,
}

pub fn table1_apd() -> ApdParams {
    ApdParams {
        gain: 80.0,
        quantum_efficiency: 70.0 / 100.0,
        excess_noise: ExcessNoise::PowerLaw { index: 0.3 },
        surface_dark_current_a: 0.1 / 1e9,
        bulk_dark_current_a: 0.1 / 1e9,
        load_resistance_ohm: 10e3,
        temperature_k: 300.0,
        amplifier_noise_a: 0.0,
    }
}

pub fn table1_sipm() -> SipmParams {
    SipmParams {
        n_pixels: 20 * 20,
        pde: 22.0 / 100.0,
        dead_time_s: 6.0 / 1e9,
        dark_count_rate_cps: 2007.0,
    }
}

/// Reference design: 45 W, 905 nm, 6 ns pulses into a 25 mm aperture,
/// 10 % target at 100 klux, sun 60° off the target normal, 167 MHz
/// comparator, TNR 5 over a 4 µs window.
pub fn table1_preset(detector: DetectorKind) -> ScenarioConfig {
    ScenarioConfig {
        scene: SceneGeometry {
            range_m: 100.0,
            incidence_angle_rad: 0.0,
            elevation_angle_rad: 0.0,
            sun_angle_rad: 60f64.to_radians(),
        },
        atmosphere: AtmosphereModel::FixedTransmittance(98.0 / 100.0),
        optics: ReceiverOptics {
            aperture_radius_m: 0.025,
            focal_length_m: 0.03,
            detector_radius_m: 0.1 / 1e3,
            laser_efficiency: 72.06 / 100.0,
            sun_efficiency: 79.86 / 100.0,
            aperture_model: ApertureModel::Constant,
        },
        target: TargetModel {
            reflectivity: 10.0 / 100.0,
        },
        laser: LaserParams {
            peak_power_w: 45.0,
            wavelength_m: 905.0 / 1e9,
            pulse_fwhm_s: 6.0 / 1e9,
            repetition_hz: 50.0 * 1e3,
        },
        solar: SolarModel::IlluminanceScaled {
            illuminance_klux: 100.0,
            reference_klux: REFERENCE_ILLUMINANCE_KLUX,
            reference_irradiance_w_m2: REFERENCE_IRRADIANCE_W_M2,
        },
        tdc: TdcPolicy {
            tnr: 5.0,
            window_s: 4.0 / 1e6,
            bandwidth_hz: 167.0 * 1e6,
            limit_detection_prob: 0.5,
        },
        detector: match detector {
            DetectorKind::Apd => DetectorChoice::Apd(table1_apd()),
            DetectorKind::Sipm => DetectorChoice::Sipm {
                params: table1_sipm(),
                mode: SipmSnrMode::Analytic,
            },
        },
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_scenario(&text, path)
}

/// Parses scenario text; `path` names the source in errors and anchors
/// relative spectrum files.
pub fn parse_scenario(text: &str, path: &Path) -> Result<ScenarioConfig> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Parse {
        path: path.to_owned(),
        message: e.to_string(),
    })?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(Error::config(
            "schema_version",
            format!("{} is not supported (expected {SCHEMA_VERSION})", file.schema_version),
        ));
    }
    let cfg = file.into_config(path.parent().unwrap_or(Path::new(".")))?;
    cfg.validate()?;
    Ok(cfg)
}

/// TOML text that [`parse_scenario`] maps back to `cfg` exactly.
pub fn to_toml_string(cfg: &ScenarioConfig) -> String {
    let file = ScenarioFile::from_config(cfg);
    toml::to_string(&file).expect("scenario schema serialises")
}

pub fn save_scenario(cfg: &ScenarioConfig, path: &Path) -> Result<()> {
    std::fs::write(path, to_toml_string(cfg)).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

/// Conversion from a file unit to SI.
#[derive(Clone, Copy)]
enum Unit {
    Percent,
    Degrees,
    /// SI value = file value / divisor.
    Div(f64),
    /// SI value = file value × factor.
    Mul(f64),
}

impl Unit {
    const NANO: Unit = Unit::Div(1e9);
    const MICRO: Unit = Unit::Div(1e6);
    const MILLI: Unit = Unit::Div(1e3);
    const KILO: Unit = Unit::Mul(1e3);
    const MEGA: Unit = Unit::Mul(1e6);

    fn to_si(self, v: f64) -> f64 {
        match self {
            Unit::Percent => v / 100.0,
            Unit::Degrees => v.to_radians(),
            Unit::Div(d) => v / d,
            Unit::Mul(m) => v * m,
        }
    }

    /// File value whose conversion reproduces `si` bit for bit, preferring
    /// the shortest decimal form among the few ulps around the naive inverse.
    fn of_si(self, si: f64) -> f64 {
        let naive = match self {
            Unit::Percent => si * 100.0,
            Unit::Degrees => si.to_degrees(),
            Unit::Div(d) => si * d,
            Unit::Mul(m) => si / m,
        };
        let mut candidates = vec![naive];
        let (mut up, mut down) = (naive, naive);
        for _ in 0..8 {
            up = up.next_up();
            down = down.next_down();
            candidates.extend([up, down]);
        }
        candidates
            .into_iter()
            .filter(|&v| self.to_si(v) == si)
            .min_by_key(|v| v.to_string().len())
            .unwrap_or(naive)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    schema_version: u32,
    scene: SceneFile,
    atmosphere: AtmosphereFile,
    optics: OpticsFile,
    target: TargetFile,
    laser: LaserFile,
    solar: SolarFile,
    tdc: TdcFile,
    detector: DetectorFile,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    range_m: f64,
    #[serde(default)]
    incidence_angle_deg: f64,
    #[serde(default)]
    elevation_angle_deg: f64,
    sun_angle_deg: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
enum AtmosphereFile {
    FixedTransmittance { transmittance_percent: f64 },
    Extinction { extinction_per_km: f64 },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OpticsFile {
    aperture_radius_m: f64,
    focal_length_m: f64,
    detector_radius_mm: f64,
    laser_efficiency_percent: f64,
    sun_efficiency_percent: f64,
    #[serde(default)]
    aperture_model: ApertureModel,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetFile {
    reflectivity_percent: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LaserFile {
    peak_power_w: f64,
    wavelength_nm: f64,
    pulse_width_ns: f64,
    #[serde(default)]
    repetition_khz: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
enum SolarFile {
    Direct {
        irradiance_w_m2: f64,
    },
    Spectrum {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        spectrum_file: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rows: Option<Vec<[f64; 3]>>,
    },
    IlluminanceScaled {
        illuminance_klux: f64,
        #[serde(default = "default_reference_klux")]
        reference_klux: f64,
        #[serde(default = "default_reference_irradiance")]
        reference_irradiance_w_m2: f64,
    },
}

fn default_reference_klux() -> f64 {
    REFERENCE_ILLUMINANCE_KLUX
}

fn default_reference_irradiance() -> f64 {
    REFERENCE_IRRADIANCE_W_M2
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TdcFile {
    tnr: f64,
    window_us: f64,
    bandwidth_mhz: f64,
    #[serde(default = "default_limit_prob")]
    limit_detection_prob: f64,
}

fn default_limit_prob() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
enum ExcessNoiseMode {
    #[default]
    PowerLaw,
    Ionization,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
enum SnrModeFile {
    #[default]
    Analytic,
    Approx,
    MonteCarlo,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum DetectorFile {
    Apd {
        gain: f64,
        quantum_efficiency_percent: f64,
        #[serde(default)]
        excess_noise_mode: ExcessNoiseMode,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        excess_noise_index: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        electron_ionization_rate: Option<f64>,
        surface_dark_current_na: f64,
        bulk_dark_current_na: f64,
        load_resistance_ohm: f64,
        #[serde(default = "default_temperature")]
        temperature_k: f64,
        #[serde(default)]
        amplifier_noise_na: f64,
    },
    Sipm {
        n_pixels: u32,
        pde_percent: f64,
        dead_time_ns: f64,
        dark_count_rate_cps: f64,
        #[serde(default)]
        snr_mode: SnrModeFile,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        monte_carlo: Option<MonteCarloFile>,
    },
}

fn default_temperature() -> f64 {
    300.0
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MonteCarloFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_trials: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    time_step_ns: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    warmup_ns: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pulse_shape: Option<PulseShape>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    noise_periods: Option<u32>,
}

impl ScenarioFile {
    fn into_config(self, base_dir: &Path) -> Result<ScenarioConfig> {
        let deg = Unit::Degrees;
        let pct = Unit::Percent;
        let scene = SceneGeometry {
            range_m: self.scene.range_m,
            incidence_angle_rad: deg.to_si(self.scene.incidence_angle_deg),
            elevation_angle_rad: deg.to_si(self.scene.elevation_angle_deg),
            sun_angle_rad: deg.to_si(self.scene.sun_angle_deg),
        };
        let atmosphere = match self.atmosphere {
            AtmosphereFile::FixedTransmittance { transmittance_percent } => {
                AtmosphereModel::FixedTransmittance(pct.to_si(transmittance_percent))
            }
            AtmosphereFile::Extinction { extinction_per_km } => AtmosphereModel::Extinction {
                coeff_per_m: Unit::MILLI.to_si(extinction_per_km),
            },
        };
        let o = self.optics;
        let optics = ReceiverOptics {
            aperture_radius_m: o.aperture_radius_m,
            focal_length_m: o.focal_length_m,
            detector_radius_m: Unit::MILLI.to_si(o.detector_radius_mm),
            laser_efficiency: pct.to_si(o.laser_efficiency_percent),
            sun_efficiency: pct.to_si(o.sun_efficiency_percent),
            aperture_model: o.aperture_model,
        };
        let target = TargetModel {
            reflectivity: pct.to_si(self.target.reflectivity_percent),
        };
        let l = self.laser;
        let laser = LaserParams {
            peak_power_w: l.peak_power_w,
            wavelength_m: Unit::NANO.to_si(l.wavelength_nm),
            pulse_fwhm_s: Unit::NANO.to_si(l.pulse_width_ns),
            repetition_hz: Unit::KILO.to_si(l.repetition_khz),
        };
        let solar = match self.solar {
            SolarFile::Direct { irradiance_w_m2 } => SolarModel::Direct { irradiance_w_m2 },
            SolarFile::IlluminanceScaled {
                illuminance_klux,
                reference_klux,
                reference_irradiance_w_m2,
            } => SolarModel::IlluminanceScaled {
                illuminance_klux,
                reference_klux,
                reference_irradiance_w_m2,
            },
            SolarFile::Spectrum { spectrum_file, rows } => match (spectrum_file, rows) {
                (Some(file), None) => SolarModel::Spectrum(SpectrumTable::from_csv_path(&base_dir.join(file))?),
                (None, Some(rows)) => SolarModel::Spectrum(SpectrumTable::new(
                    rows.into_iter()
                        .map(|[wavelength_nm, irradiance_w_m2_nm, transmittance]| SpectrumRow {
                            wavelength_nm,
                            irradiance_w_m2_nm,
                            transmittance,
                        })
                        .collect(),
                )?),
                _ => {
                    return Err(Error::config(
                        "solar",
                        "spectrum mode needs exactly one of spectrum_file or rows",
                    ))
                }
            },
        };
        let tdc = TdcPolicy {
            tnr: self.tdc.tnr,
            window_s: Unit::MICRO.to_si(self.tdc.window_us),
            bandwidth_hz: Unit::MEGA.to_si(self.tdc.bandwidth_mhz),
            limit_detection_prob: self.tdc.limit_detection_prob,
        };
        let detector = match self.detector {
            DetectorFile::Apd {
                gain,
                quantum_efficiency_percent,
                excess_noise_mode,
                excess_noise_index,
                electron_ionization_rate,
                surface_dark_current_na,
                bulk_dark_current_na,
                load_resistance_ohm,
                temperature_k,
                amplifier_noise_na,
            } => {
                let excess_noise =
                    match (excess_noise_mode, excess_noise_index, electron_ionization_rate) {
                        (ExcessNoiseMode::PowerLaw, Some(index), None) => ExcessNoise::PowerLaw { index },
                        (ExcessNoiseMode::Ionization, None, Some(k)) => ExcessNoise::Ionization {
                            electron_ionization_rate: k,
                        },
                        _ => return Err(Error::config(
                            "excess_noise_mode",
                            "power_law needs excess_noise_index only, ionization needs electron_ionization_rate only",
                        )),
                    };
                DetectorChoice::Apd(ApdParams {
                    gain,
                    quantum_efficiency: pct.to_si(quantum_efficiency_percent),
                    excess_noise,
                    surface_dark_current_a: Unit::NANO.to_si(surface_dark_current_na),
                    bulk_dark_current_a: Unit::NANO.to_si(bulk_dark_current_na),
                    load_resistance_ohm,
                    temperature_k,
                    amplifier_noise_a: Unit::NANO.to_si(amplifier_noise_na),
                })
            }
            DetectorFile::Sipm {
                n_pixels,
                pde_percent,
                dead_time_ns,
                dark_count_rate_cps,
                snr_mode,
                monte_carlo,
            } => {
                let params = SipmParams {
                    n_pixels,
                    pde: pct.to_si(pde_percent),
                    dead_time_s: Unit::NANO.to_si(dead_time_ns),
                    dark_count_rate_cps,
                };
                let mode = match (snr_mode, monte_carlo) {
                    (SnrModeFile::Analytic, None) => SipmSnrMode::Analytic,
                    (SnrModeFile::Approx, None) => SipmSnrMode::Approx,
                    (SnrModeFile::MonteCarlo, mc) => {
                        let mc = mc.unwrap_or_default();
                        let d = SipmMcConfig::defaults_for(&params);
                        SipmSnrMode::MonteCarlo(SipmMcConfig {
                            n_trials: mc.n_trials.unwrap_or(d.n_trials),
                            time_step_s: mc.time_step_ns.map_or(d.time_step_s, |v| Unit::NANO.to_si(v)),
                            pulse_shape: mc.pulse_shape.unwrap_or(d.pulse_shape),
                            seed: mc.seed.unwrap_or(d.seed),
                            warmup_s: mc.warmup_ns.map_or(d.warmup_s, |v| Unit::NANO.to_si(v)),
                            noise_periods: mc.noise_periods.unwrap_or(d.noise_periods),
                        })
                    }
                    (_, Some(_)) => {
                        return Err(Error::config(
                            "monte_carlo",
                            "only allowed with snr_mode = \"monte_carlo\"",
                        ))
                    }
                };
                DetectorChoice::Sipm { params, mode }
            }
        };
        Ok(ScenarioConfig {
            scene,
            atmosphere,
            optics,
            target,
            laser,
            solar,
            tdc,
            detector,
        })
    }

    fn from_config(cfg: &ScenarioConfig) -> Self {
        let deg = Unit::Degrees;
        let pct = Unit::Percent;
        ScenarioFile {
            schema_version: SCHEMA_VERSION,
            scene: SceneFile {
                range_m: cfg.scene.range_m,
                incidence_angle_deg: deg.of_si(cfg.scene.incidence_angle_rad),
                elevation_angle_deg: deg.of_si(cfg.scene.elevation_angle_rad),
                sun_angle_deg: deg.of_si(cfg.scene.sun_angle_rad),
            },
            atmosphere: match cfg.atmosphere {
                AtmosphereModel::FixedTransmittance(t) => AtmosphereFile::FixedTransmittance {
                    transmittance_percent: pct.of_si(t),
                },
                AtmosphereModel::Extinction { coeff_per_m } => AtmosphereFile::Extinction {
                    extinction_per_km: Unit::MILLI.of_si(coeff_per_m),
                },
            },
            optics: OpticsFile {
                aperture_radius_m: cfg.optics.aperture_radius_m,
                focal_length_m: cfg.optics.focal_length_m,
                detector_radius_mm: Unit::MILLI.of_si(cfg.optics.detector_radius_m),
                laser_efficiency_percent: pct.of_si(cfg.optics.laser_efficiency),
                sun_efficiency_percent: pct.of_si(cfg.optics.sun_efficiency),
                aperture_model: cfg.optics.aperture_model,
            },
            target: TargetFile {
                reflectivity_percent: pct.of_si(cfg.target.reflectivity),
            },
            laser: LaserFile {
                peak_power_w: cfg.laser.peak_power_w,
                wavelength_nm: Unit::NANO.of_si(cfg.laser.wavelength_m),
                pulse_width_ns: Unit::NANO.of_si(cfg.laser.pulse_fwhm_s),
                repetition_khz: Unit::KILO.of_si(cfg.laser.repetition_hz),
            },
            solar: match &cfg.solar {
                SolarModel::Direct { irradiance_w_m2 } => SolarFile::Direct {
                    irradiance_w_m2: *irradiance_w_m2,
                },
                SolarModel::IlluminanceScaled {
                    illuminance_klux,
                    reference_klux,
                    reference_irradiance_w_m2,
                } => SolarFile::IlluminanceScaled {
                    illuminance_klux: *illuminance_klux,
                    reference_klux: *reference_klux,
                    reference_irradiance_w_m2: *reference_irradiance_w_m2,
                },
                SolarModel::Spectrum(table) => SolarFile::Spectrum {
                    spectrum_file: None,
                    rows: Some(
                        table
                            .rows()
                            .iter()
                            .map(|r| [r.wavelength_nm, r.irradiance_w_m2_nm, r.transmittance])
                            .collect(),
                    ),
                },
            },
            tdc: TdcFile {
                tnr: cfg.tdc.tnr,
                window_us: Unit::MICRO.of_si(cfg.tdc.window_s),
                bandwidth_mhz: Unit::MEGA.of_si(cfg.tdc.bandwidth_hz),
                limit_detection_prob: cfg.tdc.limit_detection_prob,
            },
            detector: match &cfg.detector {
                DetectorChoice::Apd(p) => {
                    let (mode, index, k) = match p.excess_noise {
                        ExcessNoise::PowerLaw { index } => (ExcessNoiseMode::PowerLaw, Some(index), None),
                        ExcessNoise::Ionization {
                            electron_ionization_rate,
                        } => (ExcessNoiseMode::Ionization, None, Some(electron_ionization_rate)),
                    };
                    DetectorFile::Apd {
                        gain: p.gain,
                        quantum_efficiency_percent: pct.of_si(p.quantum_efficiency),
                        excess_noise_mode: mode,
                        excess_noise_index: index,
                        electron_ionization_rate: k,
                        surface_dark_current_na: Unit::NANO.of_si(p.surface_dark_current_a),
                        bulk_dark_current_na: Unit::NANO.of_si(p.bulk_dark_current_a),
                        load_resistance_ohm: p.load_resistance_ohm,
                        temperature_k: p.temperature_k,
                        amplifier_noise_na: Unit::NANO.of_si(p.amplifier_noise_a),
                    }
                }
                DetectorChoice::Sipm { params, mode } => {
                    let (snr_mode, monte_carlo) = match mode {
                        SipmSnrMode::Analytic => (SnrModeFile::Analytic, None),
                        SipmSnrMode::Approx => (SnrModeFile::Approx, None),
                        SipmSnrMode::MonteCarlo(mc) => (
                            SnrModeFile::MonteCarlo,
                            Some(MonteCarloFile {
                                n_trials: Some(mc.n_trials),
                                time_step_ns: Some(Unit::NANO.of_si(mc.time_step_s)),
                                warmup_ns: Some(Unit::NANO.of_si(mc.warmup_s)),
                                pulse_shape: Some(mc.pulse_shape),
                                seed: Some(mc.seed),
                                noise_periods: Some(mc.noise_periods),
                            }),
                        ),
                    };
                    DetectorFile::Sipm {
                        n_pixels: params.n_pixels,
                        pde_percent: pct.of_si(params.pde),
                        dead_time_ns: Unit::NANO.of_si(params.dead_time_s),
                        dark_count_rate_cps: params.dark_count_rate_cps,
                        snr_mode,
                        monte_carlo,
                    }
                }
            },
        }
    }
}
