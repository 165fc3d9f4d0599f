//! Decibel and power conversions shared by the link models.

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Reference noise temperature, K.
pub const T0_KELVIN: f64 = 290.0;
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[inline]
pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[inline]
pub fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

#[inline]
pub fn watts_to_dbm(w: f64) -> f64 {
    lin_to_db(w) + 30.0
}

#[inline]
pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_lin(dbm - 30.0)
}

/// Thermal noise power kTB in dBm for a bandwidth in Hz.
pub fn thermal_noise_dbm(bandwidth_hz: f64) -> f64 {
    watts_to_dbm(BOLTZMANN * T0_KELVIN * bandwidth_hz)
}

/// Free-space path loss in dB.
pub fn fspl_db(freq_hz: f64, distance_m: f64) -> f64 {
    20.0 * (4.0 * std::f64::consts::PI * distance_m * freq_hz / SPEED_OF_LIGHT).log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ktb_at_one_hz_is_minus_174() {
        assert!((thermal_noise_dbm(1.0) + 173.98).abs() < 0.01);
    }

    #[test]
    fn dbm_roundtrip() {
        for dbm in [-30.0, 0.0, 13.0, 51.07] {
            assert!((watts_to_dbm(dbm_to_watts(dbm)) - dbm).abs() < 1e-12);
        }
        assert!((watts_to_dbm(1.0) - 30.0).abs() < 1e-12);
    }
}
