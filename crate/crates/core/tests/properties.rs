//! Scenario-level invariants of the range pipeline and the SiPM response.

mod common;

use common::*;
use lidar_range::range::{max_range, set_parameter, snr_at_range, SipmSnrMode};
use lidar_range::scene::ApertureModel;
use lidar_range::sipm::{fired_count, trigger_snr_analytic, trigger_snr_approx, PhotonCounts, SipmParams};
use lidar_range::sweep::{run_sweep, Grid, Spacing, SweepKind, SweepSpec};
use lidar_range::{DetectorChoice, ScenarioConfig};
use proptest::prelude::*;

fn r_max(cfg: &ScenarioConfig, det: &DetectorChoice) -> f64 {
    max_range(cfg, det, &cfg.tdc).unwrap().r_max_m
}

fn r_max_with(cfg: &ScenarioConfig, det: &DetectorChoice, param: &str, value: f64) -> f64 {
    let (mut c, mut d) = (cfg.clone(), *det);
    set_parameter(&mut c, &mut d, param, value).unwrap();
    r_max(&c, &d)
}

/// `R_max` along a grid of multiples of the reference value of `param`.
fn response(cfg: &ScenarioConfig, det: &DetectorChoice, param: &str, factors: &[f64]) -> Vec<f64> {
    let p0 = lidar_range::range::get_parameter(cfg, det, param).unwrap();
    factors.iter().map(|f| r_max_with(cfg, det, param, p0 * f)).collect()
}

fn both_detectors() -> [(ScenarioConfig, DetectorChoice); 2] {
    let a = apd_cfg();
    let s = sipm_cfg();
    let (da, ds) = (a.detector, s.detector);
    [(a, da), (s, ds)]
}

#[test]
fn range_grows_with_power_reflectivity_efficiency_and_aperture() {
    let up = [0.5, 0.7, 0.85, 1.0];
    for (cfg, det) in both_detectors() {
        for param in ["peak_power", "reflectivity", "laser_efficiency", "aperture_radius"] {
            let r = response(&cfg, &det, param, &up);
            assert!(r.windows(2).all(|w| w[1] >= w[0]), "{} {param}: {r:?}", det.label());
        }
    }
}

#[test]
fn range_shrinks_with_sunlight_and_threshold() {
    let up = [0.25, 0.5, 1.0, 2.0, 4.0];
    for (cfg, det) in both_detectors() {
        for param in ["sun_irradiance", "tnr"] {
            let r = response(&cfg, &det, param, &up);
            assert!(r.windows(2).all(|w| w[1] <= w[0]), "{} {param}: {r:?}", det.label());
        }
    }
}

#[test]
fn edge_of_field_falls_off() {
    for (mut cfg, det) in both_detectors() {
        cfg.optics.aperture_model = ApertureModel::Cosine;
        let centre = r_max(&cfg, &det);
        let mut last = centre;
        for deg in (5..=60).step_by(5) {
            let mut r_at = |d: f64| {
                cfg.scene.elevation_angle_rad = d.to_radians();
                r_max(&cfg, &det)
            };
            let (pos, neg) = (r_at(f64::from(deg)), r_at(-f64::from(deg)));
            assert!((pos - neg).abs() <= 1e-9 * centre, "asymmetric at {deg} deg");
            assert!(
                pos <= last && pos <= centre,
                "{} at {deg} deg: {pos} > {last}",
                det.label()
            );
            last = pos;
        }
    }
}

#[test]
fn sweep_has_one_row_per_point_and_detector() {
    let cfg = apd_cfg();
    let spec = SweepSpec {
        kind: SweepKind::Distance,
        grid: Grid::Range {
            min: 20.0,
            max: 400.0,
            n: 7,
            spacing: Spacing::Log,
        },
        detectors: vec![cfg.detector, sipm_with_mode(SipmSnrMode::Analytic)],
        curves: Vec::new(),
        aperture_override: None,
    };
    let result = run_sweep(&cfg, &spec).unwrap();
    assert_eq!(result.rows.len(), 14);
    let xs: Vec<f64> = result.rows.iter().map(|r| r.x).collect();
    assert!(xs.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn approx_gap_closes_for_large_arrays() {
    let cfg = sipm_cfg();
    let p = lidar_range::range::optical_powers(&cfg, 150.0).unwrap();
    let (tau_p, lambda) = (cfg.laser.pulse_fwhm_s, cfg.laser.wavelength_m);
    let gaps: Vec<f64> = [100u32, 10_000, 1_000_000]
        .iter()
        .map(|&n| {
            let params = SipmParams {
                n_pixels: n,
                dark_count_rate_cps: 0.0,
                ..sipm_params()
            };
            let counts = PhotonCounts::from_powers(&params, p.echo_w, p.background_w, tau_p, lambda);
            let exact = trigger_snr_analytic(&params, &counts).unwrap().value;
            let approx = trigger_snr_approx(&params, p.echo_w, p.background_w, tau_p, lambda).value;
            (approx - exact).abs() / exact
        })
        .collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
    assert!(gaps[2] < 1e-3, "{gaps:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn snr_strictly_decreases_with_range(a in 2.0f64..2000.0, b in 2.0f64..2000.0) {
        prop_assume!((a - b).abs() > 1e-6 * a);
        let (near, far) = if a < b { (a, b) } else { (b, a) };
        for (cfg, det) in both_detectors() {
            let s_near = snr_at_range(&cfg, &det, near).unwrap();
            let s_far = snr_at_range(&cfg, &det, far).unwrap();
            prop_assert!(s_far < s_near, "{} {near} {far}", det.label());
        }
    }

    #[test]
    fn fired_count_is_monotone_concave_and_bounded(
        n in 0.0f64..5e4,
        h in 0.5f64..500.0,
        pde in 0.01f64..1.0,
        pixels in 1u32..2000,
    ) {
        let p = SipmParams { n_pixels: pixels, pde, dead_time_s: 6e-9, dark_count_rate_cps: 0.0 };
        let (f0, f1, f2) = (fired_count(&p, n), fired_count(&p, n + h), fired_count(&p, n + 2.0 * h));
        prop_assert!(f1 >= f0);
        prop_assert!(f2 - f1 <= f1 - f0 + 1e-9 * f64::from(pixels));
        let cap = (pde * n).min(f64::from(pixels));
        prop_assert!(f0 <= cap * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn fired_count_is_linear_at_low_occupancy(frac in 1e-6f64..0.01, pde in 0.05f64..1.0) {
        let p = SipmParams { n_pixels: 400, pde, dead_time_s: 6e-9, dark_count_rate_cps: 0.0 };
        let n = frac * 400.0 / pde;
        let f = fired_count(&p, n);
        prop_assert!(((f - pde * n) / (pde * n)).abs() < 0.01);
    }
}
