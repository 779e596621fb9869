//! Batch evaluation over a parameter grid and CSV/SVG output.
//!
//! Grid points run in parallel; rows come back in grid order with one row
//! per (grid point, series). A failing point is recorded in its row status
//! and the sweep carries on.

mod svg;

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::range::{max_range, snr_estimate, DetectorChoice};
use crate::scenario::{ScenarioConfig, REFERENCE_ILLUMINANCE_KLUX};
use crate::scene::{sun_equivalent_irradiance, ApertureModel, SolarModel};
use crate::sipm::{self, PhotonCounts, SipmParams};
use crate::{Error, Result};

pub use svg::render_svg;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    /// Trigger SNR against range, metres.
    Distance,
    /// Maximum range against receive elevation, degrees.
    Elevation,
    /// Maximum range against ambient illuminance, klux.
    Illuminance,
    /// SiPM fired pixels against incident photons.
    PhotonResponse,
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            SweepKind::Distance => "distance",
            SweepKind::Elevation => "elevation",
            SweepKind::Illuminance => "illuminance",
            SweepKind::PhotonResponse => "photon_response",
        }
    }

    fn x_column(self) -> &'static str {
        match self {
            SweepKind::Distance => "range_m",
            SweepKind::Elevation => "elevation_deg",
            SweepKind::Illuminance => "illuminance_klux",
            SweepKind::PhotonResponse => "n_photon",
        }
    }

    fn value_column(self, series: &str) -> String {
        match self {
            SweepKind::Distance => format!("snr_{series}"),
            SweepKind::Elevation | SweepKind::Illuminance => format!("rmax_{series}_m"),
            SweepKind::PhotonResponse => "n_fired".to_owned(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Explicit(Vec<f64>),
    Range {
        min: f64,
        max: f64,
        n: usize,
        spacing: Spacing,
    },
}

impl Grid {
    /// Grid values; non-empty and strictly increasing or strictly decreasing.
    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match self {
            Grid::Explicit(v) => v.clone(),
            Grid::Range { min, max, n, spacing } => {
                if *n == 0 {
                    return Err(Error::config("grid", "needs at least one point"));
                }
                if *spacing == Spacing::Log && !(*min > 0.0 && *max > 0.0) {
                    return Err(Error::config("grid", "log spacing needs positive bounds"));
                }
                (0..*n)
                    .map(|i| {
                        if i == 0 {
                            return *min;
                        }
                        if i == n - 1 {
                            return *max;
                        }
                        let t = i as f64 / (n - 1) as f64;
                        match spacing {
                            Spacing::Linear => min + t * (max - min),
                            Spacing::Log => 10f64.powf(min.log10() + t * (max.log10() - min.log10())),
                        }
                    })
                    .collect()
            }
        };
        if v.is_empty() {
            return Err(Error::config("grid", "needs at least one point"));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::config("grid", "values must be finite"));
        }
        let up = v.windows(2).all(|w| w[1] > w[0]);
        let down = v.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(Error::config("grid", "values must be strictly monotone"));
        }
        Ok(v)
    }
}

/// One SiPM response curve: fired pixels for the echo photons on top of a
/// steady background.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonCurve {
    pub label: String,
    pub params: SipmParams,
    /// Background photons per dead time.
    pub background_photons: f64,
}

impl PhotonCurve {
    /// Three families around a 22 % PDE array: PDE (10, 22, 40 %) at 100
    /// pixels; pixel count (100, 400, 1600); background (0, 100, 1000
    /// photons per dead time) at 100 pixels.
    pub fn default_families(base: &SipmParams) -> Vec<PhotonCurve> {
        let mut curves = Vec::new();
        let with = |n_pixels: u32, pde: f64| SipmParams { n_pixels, pde, ..*base };
        for pde in [10u32, 22, 40] {
            curves.push(PhotonCurve {
                label: format!("pde_{pde}pct"),
                params: with(100, f64::from(pde) / 100.0),
                background_photons: 0.0,
            });
        }
        for n in [100u32, 400, 1600] {
            curves.push(PhotonCurve {
                label: format!("pixels_{n}"),
                params: with(n, 0.22),
                background_photons: 0.0,
            });
        }
        for bg in [0u32, 100, 1000] {
            curves.push(PhotonCurve {
                label: format!("background_{bg}"),
                params: with(100, 0.22),
                background_photons: f64::from(bg),
            });
        }
        curves
    }

    /// Pixels fired by the echo, `(N − N_b)·p(n_photon)`.
    pub fn fired(&self, n_photon: f64) -> Result<f64> {
        let counts = PhotonCounts {
            n_b_photon: self.background_photons,
            n_s_photon: n_photon,
        };
        let n_b = sipm::background_occupancy(&self.params, &counts);
        sipm::signal_fired(&self.params, &counts, n_b, 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub kind: SweepKind,
    pub grid: Grid,
    /// Series for the distance, elevation and illuminance sweeps.
    pub detectors: Vec<DetectorChoice>,
    /// Series for the photon-response sweep.
    pub curves: Vec<PhotonCurve>,
    /// Replaces the scenario's aperture model for every point.
    pub aperture_override: Option<ApertureModel>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RowStatus {
    Ok,
    /// Value is valid but the SiPM echo fills most free pixels.
    Saturated,
    /// No value; carries a short error code.
    Failed(&'static str),
}

impl RowStatus {
    fn code(&self) -> Option<&'static str> {
        match self {
            RowStatus::Ok => None,
            RowStatus::Saturated => Some("saturated"),
            RowStatus::Failed(code) => Some(code),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub x: f64,
    pub series: String,
    pub value: Option<f64>,
    pub status: RowStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub kind: SweepKind,
    pub series: Vec<String>,
    /// Grid-major, series-minor.
    pub rows: Vec<SweepRow>,
    /// Horizontal reference drawn on plots (the trigger threshold for SNR).
    pub reference_line: Option<f64>,
}

pub fn error_code(e: &Error) -> &'static str {
    match e {
        Error::Saturation { .. } => "saturated",
        Error::NoDetection { .. } => "no_detection",
        Error::UnboundedRange { .. } => "unbounded",
        Error::Config { .. } => "invalid",
        Error::UnknownParameter(_) | Error::ZeroParameter(_) => "invalid",
        Error::Parse { .. } | Error::Io { .. } => "io",
    }
}

fn illuminance_model(cfg: &ScenarioConfig, klux: f64) -> Result<SolarModel> {
    Ok(match &cfg.solar {
        SolarModel::IlluminanceScaled {
            reference_klux,
            reference_irradiance_w_m2,
            ..
        } => SolarModel::IlluminanceScaled {
            illuminance_klux: klux,
            reference_klux: *reference_klux,
            reference_irradiance_w_m2: *reference_irradiance_w_m2,
        },
        // A direct or spectral model is taken as the 100 klux reference.
        other => SolarModel::IlluminanceScaled {
            illuminance_klux: klux,
            reference_klux: REFERENCE_ILLUMINANCE_KLUX,
            reference_irradiance_w_m2: sun_equivalent_irradiance(other)?,
        },
    })
}

fn point(cfg: &ScenarioConfig, kind: SweepKind, x: f64, det: &DetectorChoice) -> Result<(f64, bool)> {
    match kind {
        SweepKind::Distance => snr_estimate(cfg, det, x).map(|s| (s.value, s.saturated)),
        SweepKind::Elevation => {
            let mut c = cfg.clone();
            c.scene.elevation_angle_rad = x.to_radians();
            c.validate_physics()?;
            max_range(&c, det, &c.tdc).map(|r| (r.r_max_m, false))
        }
        SweepKind::Illuminance => {
            let mut c = cfg.clone();
            c.solar = illuminance_model(cfg, x)?;
            c.validate_physics()?;
            max_range(&c, det, &c.tdc).map(|r| (r.r_max_m, false))
        }
        SweepKind::PhotonResponse => unreachable!("photon response has no detector series"),
    }
}

/// Evaluates every (grid point, series) pair.
pub fn run_sweep(cfg: &ScenarioConfig, spec: &SweepSpec) -> Result<SweepResult> {
    let grid = spec.grid.values()?;
    let mut cfg = cfg.clone();
    if let Some(model) = spec.aperture_override {
        cfg.optics.aperture_model = model;
    }
    cfg.validate_physics()?;

    let series: Vec<String> = if spec.kind == SweepKind::PhotonResponse {
        if spec.curves.is_empty() {
            return Err(Error::config("curves", "photon response needs at least one curve"));
        }
        spec.curves.iter().map(|c| c.label.clone()).collect()
    } else {
        if spec.detectors.is_empty() {
            return Err(Error::config("detectors", "needs at least one detector"));
        }
        for d in &spec.detectors {
            d.validate()?;
        }
        spec.detectors.iter().map(|d| d.label().to_owned()).collect()
    };
    for (i, s) in series.iter().enumerate() {
        if series[..i].contains(s) || s.is_empty() || s.contains([',', '"', '\n', ';', ':']) {
            return Err(Error::config(
                "series",
                format!("label {s:?} is empty, repeated or not CSV-safe"),
            ));
        }
    }

    let jobs: Vec<(f64, usize)> = grid
        .iter()
        .flat_map(|&x| (0..series.len()).map(move |j| (x, j)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(x, j)| {
            let outcome = if spec.kind == SweepKind::PhotonResponse {
                spec.curves[j].fired(x).map(|v| (v, false))
            } else {
                point(&cfg, spec.kind, x, &spec.detectors[j])
            };
            let (value, status) = match outcome {
                Ok((v, false)) => (Some(v), RowStatus::Ok),
                Ok((v, true)) => (Some(v), RowStatus::Saturated),
                Err(e) => (None, RowStatus::Failed(error_code(&e))),
            };
            SweepRow {
                x,
                series: series[j].clone(),
                value,
                status,
            }
        })
        .collect();

    Ok(SweepResult {
        kind: spec.kind,
        series,
        rows,
        reference_line: (spec.kind == SweepKind::Distance).then_some(cfg.tdc.tnr),
    })
}

impl SweepResult {
    /// True when at least one row exists and none carries a value.
    pub fn all_failed(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.value.is_none())
    }

    /// CSV text. Range sweeps are one line per grid point with a column per
    /// detector; failed cells are empty and the status column lists
    /// `series:code` issues joined by `;`, or `ok`. Photon response is one
    /// line per (point, curve).
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if self.kind == SweepKind::PhotonResponse {
            out.push_str("n_photon,n_fired,curve_label\n");
            for r in &self.rows {
                let _ = writeln!(out, "{},{},{}", format_number(r.x), fmt_value(r.value), r.series);
            }
            return out;
        }
        out.push_str(self.kind.x_column());
        for s in &self.series {
            out.push(',');
            out.push_str(&self.kind.value_column(s));
        }
        out.push_str(",status\n");
        for chunk in self.rows.chunks(self.series.len().max(1)) {
            out.push_str(&format_number(chunk[0].x));
            for r in chunk {
                out.push(',');
                out.push_str(&fmt_value(r.value));
            }
            let issues: Vec<String> = chunk
                .iter()
                .filter_map(|r| r.status.code().map(|c| format!("{}:{c}", r.series)))
                .collect();
            out.push(',');
            out.push_str(&if issues.is_empty() {
                "ok".to_owned()
            } else {
                issues.join(";")
            });
            out.push('\n');
        }
        out
    }

    pub fn to_svg(&self) -> String {
        render_svg(self)
    }
}

fn fmt_value(v: Option<f64>) -> String {
    v.map(format_number).unwrap_or_default()
}

/// Shortest round-trip decimal, in exponent form for very small or large
/// magnitudes.
pub fn format_number(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    write_file(path, &result.to_csv())
}

pub fn emit_svg(result: &SweepResult, path: &Path) -> Result<()> {
    write_file(path, &result.to_svg())
}
