use serde::{Deserialize, Serialize};

use super::{AlignmentMode, AlignmentState};
use crate::telemetry::WeatherSample;
use crate::xhaul::LinkState;

/// Calibration anchor: locked clear-sky received power at 10.15 km.
const ANCHOR_RX_DBM: f64 = -6.86;
const ANCHOR_KM: f64 = 10.15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OpticalLinkSpec {
    pub tx_power_dbm: f64,
    /// Full divergence angle, rad.
    pub divergence_rad: f64,
    pub rx_sensitivity_dbm: f64,
    pub wdm_channels: u32,
    pub per_channel_rate_bps: f64,
    pub rx_aperture_m: f64,
    /// Lumped optics, coupling and amplifier gain, dB.
    pub system_gain_db: f64,
    /// Rain loss `a * R^b` dB/km.
    pub rain_coeff_a: f64,
    pub rain_coeff_b: f64,
}

impl Default for OpticalLinkSpec {
    fn default() -> Self {
        let mut s = Self {
            tx_power_dbm: 33.0,
            divergence_rad: 35e-6,
            rx_sensitivity_dbm: -24.0,
            wdm_channels: 16,
            per_channel_rate_bps: 1e10,
            rx_aperture_m: 0.1,
            system_gain_db: 0.0,
            rain_coeff_a: 1.076,
            rain_coeff_b: 0.67,
        };
        s.calibrate();
        s
    }
}

impl OpticalLinkSpec {
    /// Sets the system gain so a perfectly pointed clear-sky link at the
    /// anchor distance receives the anchor power.
    pub fn calibrate(&mut self) {
        self.system_gain_db = ANCHOR_RX_DBM - self.tx_power_dbm + self.geometric_loss_db(ANCHOR_KM);
    }

    pub fn half_angle_rad(&self) -> f64 {
        self.divergence_rad / 2.0
    }

    /// Beam-spread loss of the spot diameter over the receive aperture.
    pub fn geometric_loss_db(&self, distance_km: f64) -> f64 {
        20.0 * (self.divergence_rad * distance_km * 1e3 / self.rx_aperture_m).log10()
    }

    pub fn pointing_loss_db(&self, error_rad: f64) -> f64 {
        8.686 * (error_rad / self.half_angle_rad()).powi(2)
    }

    pub fn rain_loss_db(&self, rain_rate_mm_h: f64, distance_km: f64) -> f64 {
        if rain_rate_mm_h <= 0.0 {
            0.0
        } else {
            self.rain_coeff_a * rain_rate_mm_h.powf(self.rain_coeff_b) * distance_km
        }
    }

    pub fn capacity_bps(&self, channels: u32) -> f64 {
        channels.min(self.wdm_channels) as f64 * self.per_channel_rate_bps
    }
}

/// Received power, dBm. `scint_fade_db` is a positive fade.
pub fn fsoc_rx_power(
    spec: &OpticalLinkSpec,
    distance_km: f64,
    pointing_error_rad: f64,
    weather: &WeatherSample,
    scint_fade_db: f64,
) -> f64 {
    spec.tx_power_dbm + spec.system_gain_db
        - spec.geometric_loss_db(distance_km)
        - spec.pointing_loss_db(pointing_error_rad)
        - spec.rain_loss_db(weather.rain_rate_mm_h, distance_km)
        - scint_fade_db
}

/// Link state for the x-haul mesh. The link carries traffic only while the
/// terminal is locked and the received power meets the sensitivity.
pub fn fsoc_link_state(
    spec: &OpticalLinkSpec,
    distance_km: f64,
    alignment: &AlignmentState,
    channels: u32,
    weather: &WeatherSample,
    scint_fade_db: f64,
) -> LinkState {
    let err = alignment.pointing_error.0.hypot(alignment.pointing_error.1);
    let rx = fsoc_rx_power(spec, distance_km, err, weather, scint_fade_db);
    let limit = spec.capacity_bps(channels);
    let available = alignment.mode == AlignmentMode::Locked && rx >= spec.rx_sensitivity_dbm;
    LinkState {
        rsl_dbm: rx,
        snr_db: rx - spec.rx_sensitivity_dbm,
        throughput_bps: if available { limit } else { 0.0 },
        limit_bps: limit,
        available,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchor_and_margin() {
        let s = OpticalLinkSpec::default();
        let rx = fsoc_rx_power(&s, 10.15, 0.0, &WeatherSample::clear(), 0.0);
        assert!((rx + 6.86).abs() < 1e-9);
        assert!((rx - s.rx_sensitivity_dbm - 17.0).abs() < 0.5);
    }

    #[test]
    fn pointing_loss_at_half_angle() {
        let s = OpticalLinkSpec::default();
        let w = WeatherSample::clear();
        let d = fsoc_rx_power(&s, 10.15, 0.0, &w, 0.0) - fsoc_rx_power(&s, 10.15, s.half_angle_rad(), &w, 0.0);
        assert!((d - 8.686).abs() < 1e-9);
    }

    #[test]
    fn link_state_channels() {
        let s = OpticalLinkSpec::default();
        let locked = AlignmentState::locked();
        let w = WeatherSample::clear();
        assert_eq!(fsoc_link_state(&s, 10.15, &locked, 16, &w, 0.0).throughput_bps, 1.6e11);
        assert_eq!(fsoc_link_state(&s, 10.15, &locked, 1, &w, 0.0).throughput_bps, 1e10);
        let mut off = locked.clone();
        off.pointing_error = (200e-6, 0.0);
        let st = fsoc_link_state(&s, 10.15, &off, 16, &w, 0.0);
        assert!(!st.available && st.throughput_bps == 0.0);
    }
}
