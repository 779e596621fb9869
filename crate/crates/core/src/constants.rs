//! CODATA 2018 exact SI constants.

/// Planck constant, J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Energy of one photon at `wavelength_m`, joules.
pub fn photon_energy(wavelength_m: f64) -> f64 {
    PLANCK * SPEED_OF_LIGHT / wavelength_m
}

/// Round-trip range for a time of flight: R = c·t/2.
pub fn range_from_time_of_flight(tof_s: f64) -> f64 {
    SPEED_OF_LIGHT * tof_s / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn photon_energy_at_905nm() {
        approx::assert_relative_eq!(photon_energy(905e-9), 2.194_967_797_954_617e-19, max_relative = 1e-14);
    }

    #[test]
    fn one_microsecond_is_about_150m() {
        approx::assert_relative_eq!(range_from_time_of_flight(1e-6), 149.896_229, max_relative = 1e-9);
    }
}
