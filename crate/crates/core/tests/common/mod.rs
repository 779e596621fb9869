//! Independent oracles shared by the integration suites.
#![allow(dead_code)]

use lidar_range::range::SipmSnrMode;
use lidar_range::scenario::{table1_preset, DetectorKind};
use lidar_range::scene::SolarModel;
use lidar_range::sipm::SipmParams;
use lidar_range::{DetectorChoice, ScenarioConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

/// Sample moments of the fired-pixel count.
#[derive(Debug, Clone, Copy)]
pub struct Moments {
    pub n: f64,
    pub mean: f64,
    pub var: f64,
    /// Standard error of `mean`.
    pub se_mean: f64,
    /// Large-sample standard error of `var`, from the fourth central moment.
    pub se_var: f64,
}

/// Brute-force simulation of the per-pixel photon-counting process.
///
/// Each pixel receives its own Poisson(q) photon total and fires when a
/// Poisson(k·η/N) draw of effective photons is non-zero. Trials are split
/// into fixed chunks with fixed per-chunk streams, so the result is the same
/// for any thread count.
pub fn per_pixel_process(n_pixels: u32, pde: f64, q: f64, trials: u64, seed: u64) -> Moments {
    const CHUNK: u64 = 10_000;
    let chunks = trials.div_ceil(CHUNK);
    let poisson = Poisson::new(q).unwrap();
    let sums = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let n = CHUNK.min(trials - c * CHUNK);
            let mut s = [0.0f64; 4];
            for _ in 0..n {
                let mut fired = 0u32;
                for _ in 0..n_pixels {
                    let k: f64 = poisson.sample(&mut rng);
                    let mu = k * pde / f64::from(n_pixels);
                    if mu > 0.0 && Poisson::new(mu).unwrap().sample(&mut rng) >= 1.0 {
                        fired += 1;
                    }
                }
                let x = f64::from(fired);
                s[0] += x;
                s[1] += x * x;
                s[2] += x * x * x;
                s[3] += x * x * x * x;
            }
            (n, s)
        })
        .collect::<Vec<_>>();
    let (n, raw) = sums.into_iter().fold((0u64, [0.0f64; 4]), |(n, mut a), (m, s)| {
        for i in 0..4 {
            a[i] += s[i];
        }
        (n + m, a)
    });
    let n = n as f64;
    let m1 = raw[0] / n;
    let m2 = raw[1] / n;
    let m3 = raw[2] / n;
    let m4 = raw[3] / n;
    let var = m2 - m1 * m1;
    let mu4 = m4 - 4.0 * m1 * m3 + 6.0 * m1 * m1 * m2 - 3.0 * m1.powi(4);
    Moments {
        n,
        mean: m1,
        var: var * n / (n - 1.0),
        se_mean: (var / n).sqrt(),
        se_var: ((mu4 - var * var) / n).sqrt(),
    }
}

pub fn apd_cfg() -> ScenarioConfig {
    table1_preset(DetectorKind::Apd)
}

pub fn sipm_cfg() -> ScenarioConfig {
    table1_preset(DetectorKind::Sipm)
}

pub fn sipm_with_mode(mode: SipmSnrMode) -> DetectorChoice {
    match sipm_cfg().detector {
        DetectorChoice::Sipm { params, .. } => DetectorChoice::Sipm { params, mode },
        DetectorChoice::Apd(_) => unreachable!(),
    }
}

pub fn sipm_params() -> SipmParams {
    match sipm_cfg().detector {
        DetectorChoice::Sipm { params, .. } => params,
        DetectorChoice::Apd(_) => unreachable!(),
    }
}

/// APD with only background shot noise left.
pub fn photon_limited_apd(cfg: &ScenarioConfig) -> DetectorChoice {
    match cfg.detector {
        DetectorChoice::Apd(mut p) => {
            p.temperature_k = 0.0;
            p.amplifier_noise_a = 0.0;
            p.surface_dark_current_a = 0.0;
            p.bulk_dark_current_a = 0.0;
            DetectorChoice::Apd(p)
        }
        DetectorChoice::Sipm { .. } => panic!("not an APD scenario"),
    }
}

pub fn with_illuminance(cfg: &ScenarioConfig, klux: f64) -> ScenarioConfig {
    let mut c = cfg.clone();
    match &mut c.solar {
        SolarModel::IlluminanceScaled { illuminance_klux, .. } => *illuminance_klux = klux,
        _ => panic!("scenario is not illuminance scaled"),
    }
    c
}

pub fn with_irradiance(cfg: &ScenarioConfig, w_m2: f64) -> ScenarioConfig {
    let mut c = cfg.clone();
    c.solar = SolarModel::Direct { irradiance_w_m2: w_m2 };
    c
}

/// Log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
        .collect()
}
