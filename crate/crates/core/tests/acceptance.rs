//! Acceptance criteria for the range and SNR toolkit.
//!
//! Runs without the libtest harness: every criterion prints one
//! `PASS`/`FAIL` line with the measured numbers, and the process exits
//! non-zero if any criterion fails.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use common::*;
use lidar_range::apd;
use lidar_range::range::{
    closed_form_max_range, max_range, optical_powers, sensitivity, snr_at_range, snr_estimate, SipmSnrMode,
};
use lidar_range::sipm::monte_carlo::SipmMcConfig;
use lidar_range::sipm::{fired_count, fired_std, SipmParams};
use lidar_range::tdc::{correct_detection_prob, false_alarm_prob, TdcPolicy};
use lidar_range::DetectorChoice;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn tdc_statistics() -> Outcome {
    let p_f = false_alarm_prob(5.0);
    let policy = TdcPolicy {
        tnr: 5.0,
        window_s: 4e-6,
        bandwidth_hz: 100e6,
        limit_detection_prob: 0.5,
    };
    let p_c = correct_detection_prob(&policy, 0.5);
    check(
        p_f < 3e-7 && (p_c - 0.99977).abs() <= 1e-5,
        format!("P_f(5) = {p_f:.4e}, P_correct = {p_c:.6}"),
    )
}

fn occupancy_oracle() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    let mut seed = 0xA11CE;
    for n_pixels in [4u32, 16] {
        for pde in [0.1, 0.22] {
            for q in [1.0, 5.0, 20.0] {
                seed += 1;
                let m = per_pixel_process(n_pixels, pde, q, 1_000_000, seed);
                let p = SipmParams {
                    n_pixels,
                    pde,
                    dead_time_s: 6e-9,
                    dark_count_rate_cps: 0.0,
                };
                let mean = fired_count(&p, q);
                let var = fired_std(&p, q).powi(2);
                let z_mean = (m.mean - mean).abs() / m.se_mean;
                let z_var = (m.var - var).abs() / m.se_var;
                worst = worst.max(z_mean).max(z_var);
                if z_mean > 3.0 || z_var > 3.0 {
                    failures.push(format!(
                        "N={n_pixels} pde={pde} q={q}: z_mean={z_mean:.2} z_var={z_var:.2}"
                    ));
                }
            }
        }
    }
    check(
        failures.is_empty(),
        format!("12 grid points, worst |z| = {worst:.2} {}", failures.join("; ")),
    )
}

fn inverse_square() -> Outcome {
    let cfg = apd_cfg();
    let det = cfg.detector;
    let grid = log_grid(50.0, 300.0, 26);
    let xs: Vec<f64> = grid.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = grid
        .iter()
        .map(|&r| snr_at_range(&cfg, &det, r).map(f64::ln))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    check(
        (slope + 2.0).abs() <= 1e-3,
        format!("log-log slope over [50, 300] m = {slope:.6}"),
    )
}

fn ordering_and_crossover() -> Outcome {
    let apd = apd_cfg();
    let sipm = sipm_cfg();
    let r_apd = max_range(&apd, &apd.detector, &apd.tdc).map_err(|e| e.to_string())?;
    let r_sipm = max_range(&sipm, &sipm.detector, &sipm.tdc).map_err(|e| e.to_string())?;
    if r_apd.r_max_m <= r_sipm.r_max_m {
        return Err(format!(
            "at 100 klux APD {:.2} m <= SiPM {:.2} m",
            r_apd.r_max_m, r_sipm.r_max_m
        ));
    }
    let grid = log_grid(0.01, 100.0, 50);
    let mut sipm_wins = Vec::with_capacity(grid.len());
    for &klux in &grid {
        let a = with_illuminance(&apd, klux);
        let s = with_illuminance(&sipm, klux);
        let ra = max_range(&a, &a.detector, &a.tdc).map_err(|e| e.to_string())?.r_max_m;
        let rs = max_range(&s, &s.detector, &s.tdc).map_err(|e| e.to_string())?.r_max_m;
        sipm_wins.push(rs > ra);
    }
    let switches = sipm_wins.windows(2).filter(|w| w[0] != w[1]).count();
    let crossing = sipm_wins.iter().position(|w| !w).unwrap_or(grid.len());
    let ok = switches == 1 && sipm_wins[0] && !sipm_wins[grid.len() - 1];
    let bracket = if crossing > 0 && crossing < grid.len() {
        format!("E* in ({:.3}, {:.3}] klux", grid[crossing - 1], grid[crossing])
    } else {
        "no crossing".to_owned()
    };
    check(
        ok,
        format!(
            "100 klux: APD {:.2} m > SiPM {:.2} m; {switches} switch(es) on 50-point grid, {bracket}",
            r_apd.r_max_m, r_sipm.r_max_m
        ),
    )
}

fn closed_form_consistency() -> Outcome {
    let sipm = sipm_cfg();
    let approx = sipm_with_mode(SipmSnrMode::Approx);
    let pipe = max_range(&sipm, &approx, &sipm.tdc).map_err(|e| e.to_string())?.r_max_m;
    let closed = closed_form_max_range(&sipm, &approx).map_err(|e| e.to_string())?;
    let e_sipm = rel(pipe, closed);

    let apd = apd_cfg();
    let quiet = photon_limited_apd(&apd);
    let pipe_a = max_range(&apd, &quiet, &apd.tdc).map_err(|e| e.to_string())?.r_max_m;
    let closed_a = closed_form_max_range(&apd, &quiet).map_err(|e| e.to_string())?;
    let e_apd = rel(pipe_a, closed_a);
    check(
        e_sipm <= 1e-6 && e_apd <= 1e-2,
        format!(
            "SiPM {closed:.4} m vs {pipe:.4} m (rel {e_sipm:.1e}); APD {closed_a:.4} m vs {pipe_a:.4} m (rel {e_apd:.1e})"
        ),
    )
}

fn sensitivity_exponents() -> Outcome {
    let sipm = sipm_cfg();
    let approx = sipm_with_mode(SipmSnrMode::Approx);
    let apd = apd_cfg();
    let quiet = photon_limited_apd(&apd);
    let cases: [(&str, &lidar_range::ScenarioConfig, &DetectorChoice, &str, f64); 7] = [
        ("sipm", &sipm, &approx, "peak_power", 0.5),
        ("sipm", &sipm, &approx, "reflectivity", 0.25),
        ("sipm", &sipm, &approx, "pde", 0.25),
        ("sipm", &sipm, &approx, "sun_irradiance", -0.25),
        ("apd", &apd, &quiet, "peak_power", 0.5),
        ("apd", &apd, &quiet, "reflectivity", 0.25),
        ("apd", &apd, &quiet, "sun_irradiance", -0.25),
    ];
    let mut parts = Vec::new();
    let mut ok = true;
    for (label, cfg, det, param, expected) in cases {
        let e = sensitivity(cfg, det, &cfg.tdc, param, 1e-3).map_err(|e| e.to_string())?;
        ok &= (e - expected).abs() <= 1e-3;
        parts.push(format!("{label}.{param}={e:+.5}"));
    }
    check(ok, parts.join(" "))
}

fn gain_optimum() -> Outcome {
    let cfg = apd_cfg();
    let DetectorChoice::Apd(params) = cfg.detector else {
        unreachable!()
    };
    let p = optical_powers(&cfg, 100.0).map_err(|e| e.to_string())?;
    let (lambda, bw) = (cfg.laser.wavelength_m, cfg.tdc.bandwidth_hz);
    let snr = |m: f64| {
        apd::trigger_snr(
            &apd::ApdParams { gain: m, ..params },
            lambda,
            p.echo_w,
            p.background_w,
            bw,
        )
    };
    let opt =
        apd::optimize_gain(&params, lambda, p.echo_w, p.background_w, bw, (1.0, 500.0)).map_err(|e| e.to_string())?;
    let g = opt.gain;
    let h = 1e-3 * g;
    let elasticity = (snr(g + h) - snr(g - h)) / (2.0 * h) * g / opt.snr;
    let interior = g > 1.0 + 1e-6 && g < 500.0 - 1e-6;
    let is_max = snr(g + h) <= opt.snr && snr(g - h) <= opt.snr;

    let (mut best_g, mut best) = (1.0, f64::NEG_INFINITY);
    for i in 0..=49_900 {
        let m = 1.0 + 0.01 * f64::from(i);
        let s = snr(m);
        if s > best {
            (best_g, best) = (m, s);
        }
    }
    check(
        interior && is_max && elasticity.abs() < 1e-4 && (g - best_g).abs() <= 0.1,
        format!(
            "golden-section M = {g:.4} (SNR {:.4}), dlnSNR/dlnM = {elasticity:.1e}, grid M = {best_g:.2}",
            opt.snr
        ),
    )
}

fn monte_carlo_agreement() -> Outcome {
    let sipm = sipm_cfg();
    let mc = SipmSnrMode::MonteCarlo(SipmMcConfig {
        seed: 2024,
        ..SipmMcConfig::defaults_for(&sipm_params())
    });
    let det_mc = sipm_with_mode(mc);
    let det_an = sipm_with_mode(SipmSnrMode::Analytic);
    let run = |e_sun: f64| -> Result<(f64, f64, f64), String> {
        let cfg = with_irradiance(&sipm, e_sun);
        let m = snr_estimate(&cfg, &det_mc, 150.0).map_err(|e| e.to_string())?;
        let a = snr_at_range(&cfg, &det_an, 150.0).map_err(|e| e.to_string())?;
        Ok((m.value, m.std_error, a))
    };
    let (m_lo, se_lo, a_lo) = run(0.78)?;
    let (m_hi, se_hi, a_hi) = run(95.0)?;
    check(
        (m_lo - a_lo).abs() <= 3.0 * se_lo && m_hi + 3.0 * se_hi < a_hi,
        format!(
            "E=0.78 W/m2: MC {m_lo:.3}±{se_lo:.3} vs analytic {a_lo:.3}; \
             E=95 W/m2: MC {m_hi:.3}±{se_hi:.3} vs analytic {a_hi:.3} (ratio {:.3})",
            m_hi / a_hi
        ),
    )
}

fn cli_determinism() -> Outcome {
    let exe = env!("CARGO_BIN_EXE_lidar-range");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let runs: &[&[&str]] = &[
        &[
            "--detector",
            "apd",
            "--detector",
            "sipm",
            "--detector",
            "sipm-approx",
            "range",
        ],
        &["--seed", "11", "--detector", "sipm-mc", "range"],
        &[
            "--seed",
            "11",
            "--threads",
            "4",
            "--detector",
            "apd",
            "--detector",
            "sipm-mc",
            "sweep",
            "distance",
            "--points",
            "6",
        ],
        &[
            "--threads",
            "4",
            "--detector",
            "apd",
            "--detector",
            "sipm",
            "sweep",
            "illuminance",
        ],
        &[
            "--threads",
            "3",
            "--detector",
            "apd",
            "--detector",
            "sipm",
            "sweep",
            "elevation",
        ],
        &["sipm-response"],
        &["--detector", "apd", "optimize-gain"],
        &["--detector", "apd", "--detector", "sipm", "sensitivity"],
        &[
            "--format",
            "svg",
            "--detector",
            "apd",
            "--detector",
            "sipm",
            "snr-curve",
        ],
        &["preset", "table1"],
    ];
    let mut identical = 0;
    for args in runs {
        let mut outs = Vec::with_capacity(2);
        for k in 0..2 {
            let file = dir.path().join(format!("out{k}"));
            let status = Command::new(exe)
                .args(*args)
                .arg("--out")
                .arg(&file)
                .status()
                .map_err(|e| e.to_string())?;
            if !status.success() {
                return Err(format!("`{}` exited with {status}", args.join(" ")));
            }
            outs.push(read(&file)?);
        }
        if outs[0] != outs[1] || outs[0].is_empty() {
            return Err(format!("`{}` differs between runs", args.join(" ")));
        }
        identical += 1;
    }
    Ok(format!("{identical} commands byte-identical across two runs"))
}

fn read(path: &Path) -> Result<Vec<u8>, String> {
    std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("TDC false-alarm and correct-detection probabilities", tdc_statistics),
        (
            "fired-pixel mean and variance against per-pixel simulation",
            occupancy_oracle,
        ),
        ("APD SNR falls with the inverse square of range", inverse_square),
        (
            "APD beats SiPM at 100 klux with a single crossover",
            ordering_and_crossover,
        ),
        ("closed-form ranges match the pipeline", closed_form_consistency),
        (
            "range elasticities match the closed-form exponents",
            sensitivity_exponents,
        ),
        ("APD gain optimum is stationary and matches grid search", gain_optimum),
        (
            "SiPM Monte Carlo agrees with the occupancy model",
            monte_carlo_agreement,
        ),
        ("CLI output is byte-identical for a fixed seed", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = f();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{}] {name}: {detail} ({secs:.1} s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{}] {name}: {detail} ({secs:.1} s)", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
