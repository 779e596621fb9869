//! SiPM fired-pixel statistics and trigger SNR.
//!
//! Photons are counted per SPAD dead time. A pixel fires when at least one
//! of the photons spread over it is detected; with Poisson photon numbers
//! this gives the saturating response
//! `N_fired = N·(1 − exp(n·(exp(−η/N) − 1)))` and a binomial spread.
//! Background light keeps `N_b` pixels busy, which the echo cannot fire.
//!
//! [`monte_carlo`] replaces the closed forms with a time-domain simulation
//! of per-pixel dead time for heavy background.

pub mod monte_carlo;

use crate::constants::photon_energy;
use crate::{Error, Result};

/// Signal fill fraction above which the array is reported as saturated.
pub const SATURATION_FILL: f64 = 0.9;

/// Dark occupancy above which the "dark counts are negligible" reading of
/// the model no longer holds.
pub const DARK_OCCUPANCY_WARNING: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SipmParams {
    pub n_pixels: u32,
    /// Photon detection efficiency: quantum efficiency × avalanche trigger
    /// probability × fill factor, stored composed.
    pub pde: f64,
    pub dead_time_s: f64,
    /// Dark count rate per pixel, counts/s.
    pub dark_count_rate_cps: f64,
}

impl SipmParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_pixels == 0 {
            return Err(Error::config("n_pixels", "must be >= 1"));
        }
        if !(self.pde > 0.0 && self.pde <= 1.0) {
            return Err(Error::config("pde", format!("{} must lie in (0, 1]", self.pde)));
        }
        if !(self.dead_time_s > 0.0 && self.dead_time_s.is_finite()) {
            return Err(Error::config("dead_time", "must be > 0"));
        }
        if !(self.dark_count_rate_cps >= 0.0 && self.dark_count_rate_cps.is_finite()) {
            return Err(Error::config("dark_count_rate", "must be >= 0"));
        }
        Ok(())
    }

    /// True when `N·DCR·τ` reaches [`DARK_OCCUPANCY_WARNING`].
    pub fn dark_occupancy_warning(&self) -> bool {
        dark_occupancy(self).mean >= DARK_OCCUPANCY_WARNING
    }

    fn n(&self) -> f64 {
        f64::from(self.n_pixels)
    }
}

/// Photon numbers seen by the array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonCounts {
    /// Background photons per dead time, P_rs·τ/hν.
    pub n_b_photon: f64,
    /// Echo photons, P_r·B_pulse/(2hν).
    pub n_s_photon: f64,
}

impl PhotonCounts {
    pub fn from_powers(params: &SipmParams, p_r: f64, p_rs: f64, pulse_fwhm_s: f64, wavelength_m: f64) -> Self {
        let hv = photon_energy(wavelength_m);
        PhotonCounts {
            n_b_photon: p_rs * params.dead_time_s / hv,
            n_s_photon: signal_photons(p_r, pulse_fwhm_s, wavelength_m),
        }
    }
}

/// Echo photons credited to one pulse, P_r·B_pulse/(2hν).
pub fn signal_photons(p_r: f64, pulse_fwhm_s: f64, wavelength_m: f64) -> f64 {
    p_r * pulse_fwhm_s / (2.0 * photon_energy(wavelength_m))
}

/// Probability that a given pixel is left unfired by `n_photon` photons.
fn miss_probability(params: &SipmParams, n_photon: f64) -> f64 {
    (n_photon * (-params.pde / params.n()).exp_m1()).exp()
}

/// Probability that a given pixel fires, computed without cancellation.
pub(crate) fn fire_probability(params: &SipmParams, n_photon: f64) -> f64 {
    -(n_photon * (-params.pde / params.n()).exp_m1()).exp_m1()
}

/// Expected number of fired pixels for `n_photon` incident photons.
pub fn fired_count(params: &SipmParams, n_photon: f64) -> f64 {
    params.n() * fire_probability(params, n_photon)
}

/// Binomial standard deviation of the fired-pixel count.
pub fn fired_std(params: &SipmParams, n_photon: f64) -> f64 {
    (fired_count(params, n_photon) * miss_probability(params, n_photon)).sqrt()
}

/// Pixels kept busy by background light, N_b.
pub fn background_occupancy(params: &SipmParams, counts: &PhotonCounts) -> f64 {
    fired_count(params, counts.n_b_photon)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DarkOccupancy {
    /// N_d = N·DCR·τ.
    pub mean: f64,
    /// Poisson spread √N_d.
    pub sigma: f64,
}

pub fn dark_occupancy(params: &SipmParams) -> DarkOccupancy {
    let mean = params.n() * params.dark_count_rate_cps * params.dead_time_s;
    DarkOccupancy {
        mean,
        sigma: mean.sqrt(),
    }
}

/// Pixels fired by the echo among those not already occupied, N_s.
pub fn signal_fired(params: &SipmParams, counts: &PhotonCounts, n_b: f64, n_d: f64) -> Result<f64> {
    let free = params.n() - n_b - n_d;
    if free < 0.0 {
        return Err(Error::Saturation {
            occupied: n_b + n_d,
            n_pixels: params.n_pixels,
            range_m: None,
        });
    }
    Ok(free * fire_probability(params, counts.n_s_photon))
}

/// Trigger SNR with the flags a sweep needs to annotate its rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SipmSnr {
    /// `f64::INFINITY` when there is no noise at all.
    pub value: f64,
    pub noiseless: bool,
    /// The echo fires at least [`SATURATION_FILL`] of the free pixels.
    pub saturated: bool,
}

impl SipmSnr {
    fn plain(value: f64) -> Self {
        SipmSnr {
            value,
            noiseless: false,
            saturated: false,
        }
    }
}

/// `N_s / √(σ²(N_b) + σ_d²)`.
pub fn trigger_snr_analytic(params: &SipmParams, counts: &PhotonCounts) -> Result<SipmSnr> {
    let n_b = background_occupancy(params, counts);
    let dark = dark_occupancy(params);
    let n_s = signal_fired(params, counts, n_b, dark.mean)?;
    let saturated = fire_probability(params, counts.n_s_photon) >= SATURATION_FILL;
    let b_std = fired_std(params, counts.n_b_photon);
    let noise2 = b_std * b_std + dark.sigma * dark.sigma;
    if n_s == 0.0 {
        return Ok(SipmSnr::plain(0.0));
    }
    if noise2 == 0.0 {
        return Ok(SipmSnr {
            value: f64::INFINITY,
            noiseless: true,
            saturated,
        });
    }
    Ok(SipmSnr {
        value: n_s / noise2.sqrt(),
        noiseless: false,
        saturated,
    })
}

/// Small-occupancy limit, `P_r·B_pulse·√η / (2·√(hν·P_rs·τ))`.
pub fn trigger_snr_approx(params: &SipmParams, p_r: f64, p_rs: f64, pulse_fwhm_s: f64, wavelength_m: f64) -> SipmSnr {
    if p_r == 0.0 {
        return SipmSnr::plain(0.0);
    }
    if p_rs == 0.0 {
        return SipmSnr {
            value: f64::INFINITY,
            noiseless: true,
            saturated: false,
        };
    }
    let hv = photon_energy(wavelength_m);
    SipmSnr::plain(p_r * pulse_fwhm_s / (2.0 * (hv * p_rs * params.dead_time_s).sqrt()) * params.pde.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Poisson};

    pub(crate) fn table1() -> SipmParams {
        SipmParams {
            n_pixels: 400,
            pde: 0.22,
            dead_time_s: 6e-9,
            dark_count_rate_cps: 2007.0,
        }
    }

    const P_RS: f64 = 2.509_921_258_112_29e-8;
    const LAMBDA: f64 = 905e-9;

    fn counts_at(range_m: f64) -> PhotonCounts {
        let p_r = 1.946_430_675e-7 * (100.0 / range_m).powi(2);
        PhotonCounts::from_powers(&table1(), p_r, P_RS, 6e-9, LAMBDA)
    }

    #[test]
    fn fired_count_values() {
        let p = table1();
        assert_eq!(fired_count(&p, 0.0), 0.0);
        // mpmath evaluation of the response curve
        assert_relative_eq!(fired_count(&p, 100.0), 21.400_215_589_837_78, max_relative = 1e-12);
        assert_relative_eq!(fired_std(&p, 100.0), 4.500_588_019_537_996, max_relative = 1e-9);
        assert_relative_eq!(fired_count(&p, 1e7), 400.0, max_relative = 1e-12);
        assert!(fired_std(&p, 1e7) < 1e-6);
        assert_eq!(fired_std(&p, 0.0), 0.0);
    }

    #[test]
    fn fired_count_matches_multinomial_simulation() {
        // Multinomial photon-to-pixel assignment with per-photon detection.
        // At N=400 this agrees with the closed form to far below the MC error.
        let p = table1();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let poisson = Poisson::new(100.0).unwrap();
        let trials = 200_000;
        let mut hit = vec![0u32; 400];
        let (mut sum, mut sum2) = (0.0, 0.0);
        for t in 1..=trials {
            let k = poisson.sample(&mut rng) as u64;
            let mut fired = 0.0;
            for _ in 0..k {
                let pixel = rand::Rng::random_range(&mut rng, 0..400);
                if hit[pixel] != t && rand::Rng::random::<f64>(&mut rng) < p.pde {
                    hit[pixel] = t;
                    fired += 1.0;
                }
            }
            sum += fired;
            sum2 += fired * fired;
        }
        let mean = sum / trials as f64;
        let var = sum2 / trials as f64 - mean * mean;
        let se = (var / trials as f64).sqrt();
        assert!((mean - fired_count(&p, 100.0)).abs() < 3.0 * se);
    }

    #[test]
    fn dark_occupancy_values() {
        let mut p = table1();
        let d = dark_occupancy(&p);
        assert_relative_eq!(d.mean, 4.8168e-3, max_relative = 1e-12);
        assert_relative_eq!(d.sigma, 6.940_316_995_642_202e-2, max_relative = 1e-12);
        assert_relative_eq!(d.sigma * d.sigma, d.mean, max_relative = 1e-15);
        assert!(!p.dark_occupancy_warning());
        p.dark_count_rate_cps = 0.0;
        assert_eq!(dark_occupancy(&p), DarkOccupancy { mean: 0.0, sigma: 0.0 });
        p.dark_count_rate_cps = 1e5;
        assert!(p.dark_occupancy_warning());
    }

    #[test]
    fn background_occupancy_table1() {
        let counts = counts_at(100.0);
        assert_relative_eq!(counts.n_b_photon, 686.093_325_045_906_3, max_relative = 1e-12);
        assert_relative_eq!(
            background_occupancy(&table1(), &counts),
            125.701_488_626_885_9,
            max_relative = 1e-12
        );
        let dark = PhotonCounts {
            n_b_photon: 0.0,
            ..counts
        };
        assert_eq!(background_occupancy(&table1(), &dark), 0.0);
        let blinding = PhotonCounts {
            n_b_photon: 1e8,
            ..counts
        };
        assert_relative_eq!(background_occupancy(&table1(), &blinding), 400.0);
    }

    #[test]
    fn signal_fired_cases() {
        let p = table1();
        let c = counts_at(100.0);
        let n_b = background_occupancy(&p, &c);
        let n_d = dark_occupancy(&p).mean;
        assert_relative_eq!(
            signal_fired(&p, &c, n_b, n_d).unwrap(),
            210.768_798_115_666_67,
            max_relative = 1e-11
        );
        let none = PhotonCounts { n_s_photon: 0.0, ..c };
        assert_eq!(signal_fired(&p, &none, n_b, n_d).unwrap(), 0.0);
        assert_eq!(signal_fired(&p, &c, 400.0, 0.0).unwrap(), 0.0);
        assert!(matches!(
            signal_fired(&p, &c, 399.0, 2.0),
            Err(Error::Saturation { .. })
        ));
    }

    #[test]
    fn analytic_snr_table1() {
        let p = table1();
        let s100 = trigger_snr_analytic(&p, &counts_at(100.0)).unwrap();
        assert_relative_eq!(s100.value, 22.700_856_590_737_63, max_relative = 1e-10);
        let s150 = trigger_snr_analytic(&p, &counts_at(150.0)).unwrap();
        assert_relative_eq!(s150.value, 14.121_942_699_320_66, max_relative = 1e-10);
        let zero = PhotonCounts {
            n_s_photon: 0.0,
            ..counts_at(100.0)
        };
        assert_eq!(trigger_snr_analytic(&p, &zero).unwrap().value, 0.0);
        let close = trigger_snr_analytic(&p, &counts_at(10.0)).unwrap();
        assert!(close.saturated && !s150.saturated);
    }

    #[test]
    fn noiseless_limit_is_a_flagged_infinity() {
        let p = SipmParams {
            dark_count_rate_cps: 0.0,
            ..table1()
        };
        let c = PhotonCounts {
            n_b_photon: 0.0,
            n_s_photon: 50.0,
        };
        let snr = trigger_snr_analytic(&p, &c).unwrap();
        assert!(snr.value.is_infinite() && snr.noiseless);
        let approx = trigger_snr_approx(&p, 1e-7, 0.0, 6e-9, LAMBDA);
        assert!(approx.value.is_infinite() && approx.noiseless);
    }

    #[test]
    fn approx_snr_values_and_scaling() {
        let p = table1();
        assert_eq!(trigger_snr_approx(&p, 0.0, P_RS, 6e-9, LAMBDA).value, 0.0);
        let pr = 1.946_430_675e-7 * (100.0f64 / 150.0).powi(2);
        let s = trigger_snr_approx(&p, pr, P_RS, 6e-9, LAMBDA).value;
        assert_relative_eq!(s, 21.172_359_866_927_03, max_relative = 1e-10);
        let s4 = trigger_snr_approx(&p, pr, 4.0 * P_RS, 6e-9, LAMBDA).value;
        assert_relative_eq!(s4, s / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn approx_tracks_analytic_when_occupancy_is_small() {
        // With N=400 the reference-design background occupies ~31 % of the array and
        // the two forms differ by ~50 %; with a large array they converge.
        let photons = PhotonCounts {
            n_b_photon: 686.0,
            n_s_photon: 300.0,
        };
        let mut gaps = Vec::new();
        for n in [100u32, 10_000, 1_000_000] {
            let p = SipmParams {
                n_pixels: n,
                dark_count_rate_cps: 0.0,
                ..table1()
            };
            let analytic = trigger_snr_analytic(&p, &photons).unwrap().value;
            let approx = photons.n_s_photon / photons.n_b_photon.sqrt() * p.pde.sqrt();
            gaps.push((approx - analytic).abs() / approx);
        }
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
        assert!(gaps[2] < 1e-3);
    }

    #[test]
    fn response_shape() {
        let p = table1();
        let mut prev = 0.0;
        let mut prev_slope = f64::INFINITY;
        for i in 1..=200 {
            let n = i as f64 * 50.0;
            let f = fired_count(&p, n);
            assert!(f > prev);
            let slope = f - prev;
            assert!(slope <= prev_slope + 1e-9);
            assert!(f <= (p.pde * n).min(400.0) + 1e-9);
            prev = f;
            prev_slope = slope;
        }
        // linear regime
        for n in [1.0, 5.0, 18.0] {
            assert!(n * p.pde / 400.0 < 0.01);
            assert_relative_eq!(fired_count(&p, n), p.pde * n, max_relative = 0.01);
        }
    }

    #[test]
    fn brighter_background_fires_fewer_signal_pixels() {
        let p = SipmParams {
            n_pixels: 100,
            ..table1()
        };
        let mut prev = f64::INFINITY;
        for nb in [0.0, 10.0, 100.0, 300.0, 1000.0] {
            let c = PhotonCounts {
                n_b_photon: nb,
                n_s_photon: 200.0,
            };
            let ns = signal_fired(&p, &c, background_occupancy(&p, &c), dark_occupancy(&p).mean).unwrap();
            assert!(ns < prev);
            prev = ns;
        }
    }
}
