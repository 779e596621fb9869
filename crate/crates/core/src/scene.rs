//! Optical power budget: laser echo and solar background at the detector.
//!
//! The target is a Lambertian reflector larger than the laser spot, and the
//! transmit and receive directions coincide (far field, no parallax).
//! Thermal self-emission of the target is ignored.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Where the receiver looks and how the target and sun are oriented.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneGeometry {
    pub range_m: f64,
    /// Angle between the receive direction and the target normal.
    pub incidence_angle_rad: f64,
    /// Elevation of the receive direction; the argument of the aperture model.
    pub elevation_angle_rad: f64,
    /// Angle between the solar direction and the target normal.
    pub sun_angle_rad: f64,
}

impl SceneGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.range_m > 0.0 && self.range_m.is_finite()) {
            return Err(Error::config("range_m", format!("{} must be > 0", self.range_m)));
        }
        if !(0.0..FRAC_PI_2).contains(&self.incidence_angle_rad) {
            return Err(Error::config("incidence_angle", "must lie in [0°, 90°)"));
        }
        if !(self.elevation_angle_rad.abs() < FRAC_PI_2) {
            return Err(Error::config("elevation_angle", "must lie in (-90°, 90°)"));
        }
        if !(0.0..FRAC_PI_2).contains(&self.sun_angle_rad) {
            return Err(Error::config("sun_angle", "must lie in [0°, 90°)"));
        }
        Ok(())
    }
}

/// One-way atmospheric transmittance model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AtmosphereModel {
    FixedTransmittance(f64),
    /// Beer-Lambert extinction, τ = exp(−α·R).
    Extinction {
        coeff_per_m: f64,
    },
}

impl AtmosphereModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            AtmosphereModel::FixedTransmittance(t) if !(t > 0.0 && t <= 1.0) => {
                Err(Error::config("transmittance", format!("{t} must lie in (0, 1]")))
            }
            AtmosphereModel::Extinction { coeff_per_m } if !(coeff_per_m >= 0.0 && coeff_per_m.is_finite()) => {
                Err(Error::config("extinction", format!("{coeff_per_m} must be >= 0")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ApertureModel {
    /// A(θ) = π·r_A², independent of direction.
    #[default]
    Constant,
    /// A(θ) = π·r_A²·cos θ, pupil foreshortening off-axis.
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverOptics {
    pub aperture_radius_m: f64,
    pub focal_length_m: f64,
    /// Radius of the circular photosensitive area.
    pub detector_radius_m: f64,
    /// Receive-path efficiency at the laser wavelength.
    pub laser_efficiency: f64,
    /// Receive-path efficiency for sunlight.
    pub sun_efficiency: f64,
    pub aperture_model: ApertureModel,
}

impl ReceiverOptics {
    pub fn validate(&self) -> Result<()> {
        positive("aperture_radius", self.aperture_radius_m)?;
        positive("focal_length", self.focal_length_m)?;
        positive("detector_radius", self.detector_radius_m)?;
        unit_interval("laser_efficiency", self.laser_efficiency)?;
        unit_interval("sun_efficiency", self.sun_efficiency)?;
        Ok(())
    }
}

/// Lambertian target covering the whole laser spot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetModel {
    pub reflectivity: f64,
}

impl TargetModel {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.reflectivity) {
            return Err(Error::config(
                "reflectivity",
                format!("{} must lie in [0, 1]", self.reflectivity),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaserParams {
    pub peak_power_w: f64,
    pub wavelength_m: f64,
    /// Full width at half maximum of the pulse.
    pub pulse_fwhm_s: f64,
    /// Not used by the range model; kept so the parameter set is complete.
    pub repetition_hz: f64,
}

impl LaserParams {
    pub fn validate(&self) -> Result<()> {
        positive("peak_power", self.peak_power_w)?;
        positive("pulse_width", self.pulse_fwhm_s)?;
        if !(self.wavelength_m > 0.3e-6 && self.wavelength_m < 2.0e-6) {
            return Err(Error::config(
                "wavelength",
                format!("{} m outside (300 nm, 2000 nm)", self.wavelength_m),
            ));
        }
        if !(self.repetition_hz >= 0.0) {
            return Err(Error::config("repetition", "must be >= 0"));
        }
        Ok(())
    }
}

/// One row of a tabulated solar spectrum behind the receiver filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub wavelength_nm: f64,
    pub irradiance_w_m2_nm: f64,
    pub transmittance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTable {
    rows: Vec<SpectrumRow>,
}

pub const SPECTRUM_CSV_HEADER: [&str; 3] = ["wavelength_nm", "irradiance_w_m2_nm", "transmittance"];

impl SpectrumTable {
    pub fn new(rows: Vec<SpectrumRow>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::config("spectrum", "needs at least two rows"));
        }
        for w in rows.windows(2) {
            if !(w[1].wavelength_nm > w[0].wavelength_nm) {
                return Err(Error::config(
                    "spectrum",
                    format!("wavelength {} nm does not increase", w[1].wavelength_nm),
                ));
            }
        }
        for row in &rows {
            if !(row.irradiance_w_m2_nm >= 0.0) {
                return Err(Error::config("spectrum", "irradiance must be >= 0"));
            }
            if !(0.0..=1.0).contains(&row.transmittance) {
                return Err(Error::config("spectrum", "transmittance must lie in [0, 1]"));
            }
        }
        Ok(SpectrumTable { rows })
    }

    pub fn rows(&self) -> &[SpectrumRow] {
        &self.rows
    }

    /// Reads a `wavelength_nm,irradiance_w_m2_nm,transmittance` CSV.
    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
        let headers = reader.headers().map_err(|e| csv_error(path, e))?;
        if headers.iter().map(str::trim).ne(SPECTRUM_CSV_HEADER) {
            return Err(Error::Parse {
                path: path.to_owned(),
                message: format!("expected header {}", SPECTRUM_CSV_HEADER.join(",")),
            });
        }
        let rows = reader
            .deserialize()
            .collect::<std::result::Result<Vec<SpectrumRow>, _>>()
            .map_err(|e| csv_error(path, e))?;
        Self::new(rows)
    }

    /// Trapezoidal ∫ E(λ)·T(λ) dλ over the tabulated span, no resampling.
    pub fn integrate(&self) -> f64 {
        self.rows
            .windows(2)
            .map(|w| {
                let a = w[0].irradiance_w_m2_nm * w[0].transmittance;
                let b = w[1].irradiance_w_m2_nm * w[1].transmittance;
                0.5 * (a + b) * (w[1].wavelength_nm - w[0].wavelength_nm)
            })
            .sum()
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_owned(),
            source,
        },
        kind => Error::Parse {
            path: path.to_owned(),
            message: format!("{kind:?}"),
        },
    }
}

/// Source of the in-band solar irradiance E_sun.
#[derive(Debug, Clone, PartialEq)]
pub enum SolarModel {
    Direct {
        irradiance_w_m2: f64,
    },
    Spectrum(SpectrumTable),
    /// Linear scaling of a reference irradiance by illuminance.
    IlluminanceScaled {
        illuminance_klux: f64,
        reference_klux: f64,
        reference_irradiance_w_m2: f64,
    },
}

impl SolarModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            SolarModel::Direct { irradiance_w_m2 } if !(*irradiance_w_m2 >= 0.0) => {
                Err(Error::config("sun_irradiance", "must be >= 0"))
            }
            SolarModel::IlluminanceScaled {
                illuminance_klux,
                reference_klux,
                reference_irradiance_w_m2,
            } => {
                if !(*illuminance_klux >= 0.0) {
                    return Err(Error::config("illuminance", "must be >= 0"));
                }
                positive("reference_illuminance", *reference_klux)?;
                if !(*reference_irradiance_w_m2 >= 0.0) {
                    return Err(Error::config("reference_irradiance", "must be >= 0"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Laser echo and background powers reaching the detector, watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalPowers {
    pub echo_w: f64,
    pub background_w: f64,
}

pub fn one_way_transmittance(atm: &AtmosphereModel, range_m: f64) -> f64 {
    match *atm {
        AtmosphereModel::FixedTransmittance(t) => t,
        AtmosphereModel::Extinction { coeff_per_m } => (-coeff_per_m * range_m).exp(),
    }
}

/// Effective pupil area A(θ_r).
pub fn effective_aperture(optics: &ReceiverOptics, theta_r: f64) -> f64 {
    let area = PI * optics.aperture_radius_m * optics.aperture_radius_m;
    match optics.aperture_model {
        ApertureModel::Constant => area,
        ApertureModel::Cosine => area * theta_r.cos().max(0.0),
    }
}

/// Half field of view of the receiver, arctan(r_pD / f).
pub fn fov_half_angle(optics: &ReceiverOptics) -> f64 {
    (optics.detector_radius_m / optics.focal_length_m).atan()
}

/// Peak echo power P_r = τ²·η_r·ρ·P_t·A(θ_r)·cos θ / (π R²).
///
/// The Lambertian intensity ρ·τ·P_t·cos θ/π is collected over the solid
/// angle A/R² and attenuated once more on the way back.
pub fn echo_power(
    scene: &SceneGeometry,
    atm: &AtmosphereModel,
    optics: &ReceiverOptics,
    target: &TargetModel,
    laser: &LaserParams,
) -> f64 {
    let tau = one_way_transmittance(atm, scene.range_m);
    let intensity = target.reflectivity * tau * laser.peak_power_w * scene.incidence_angle_rad.cos() / PI;
    let solid_angle = effective_aperture(optics, scene.elevation_angle_rad) / (scene.range_m * scene.range_m);
    optics.laser_efficiency * tau * intensity * solid_angle
}

/// E_sun in W/m².
pub fn sun_equivalent_irradiance(solar: &SolarModel) -> Result<f64> {
    match solar {
        SolarModel::Direct { irradiance_w_m2 } => Ok(*irradiance_w_m2),
        SolarModel::Spectrum(table) => {
            if table.rows().len() < 2 {
                return Err(Error::config("spectrum", "needs at least two rows"));
            }
            Ok(table.integrate())
        }
        SolarModel::IlluminanceScaled {
            illuminance_klux,
            reference_klux,
            reference_irradiance_w_m2,
        } => Ok(reference_irradiance_w_m2 * (illuminance_klux / reference_klux)),
    }
}

/// Solar background power P_rs = E_sun·η_rs·τ·ρ·A(θ_r)·(r_pD/f)²·cos θ_s.
///
/// The R² of the illuminated footprint cancels the 1/R² of the collection
/// solid angle, so range enters only through τ. A single one-way τ is
/// applied, as in the printed model.
pub fn background_power(
    scene: &SceneGeometry,
    atm: &AtmosphereModel,
    optics: &ReceiverOptics,
    target: &TargetModel,
    solar: &SolarModel,
) -> Result<f64> {
    let e_sun = sun_equivalent_irradiance(solar)?;
    Ok(background_power_from_irradiance(scene, atm, optics, target, e_sun))
}

pub(crate) fn background_power_from_irradiance(
    scene: &SceneGeometry,
    atm: &AtmosphereModel,
    optics: &ReceiverOptics,
    target: &TargetModel,
    e_sun: f64,
) -> f64 {
    let tau = one_way_transmittance(atm, scene.range_m);
    let fov_ratio = optics.detector_radius_m / optics.focal_length_m;
    e_sun
        * optics.sun_efficiency
        * tau
        * target.reflectivity
        * effective_aperture(optics, scene.elevation_angle_rad)
        * fov_ratio
        * fov_ratio
        * scene.sun_angle_rad.cos().max(0.0)
}

fn positive(field: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, format!("{v} must be > 0")))
    }
}

fn unit_interval(field: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(Error::config(field, format!("{v} must lie in (0, 1]")))
    }
}
