use std::io::Write;

use serde::{Deserialize, Serialize};

use super::RadioError;
use crate::domain::{Blockage, PlatformCatalog, PlatformSpec, Propagation, TerrainProfile};
use crate::telemetry::WeatherSample;
use crate::units::{thermal_noise_dbm, watts_to_dbm};
use crate::xhaul::rain_attenuation_db;

pub const REFERENCE_DISTANCE_M: f64 = 100.0;
pub const PARTIAL_BLOCKAGE_DB: f64 = 20.0;
/// Rain is only accounted for at and above this carrier.
const RAIN_MIN_CARRIER_HZ: f64 = 6e9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RanLinkConfig {
    pub platform: String,
    pub tx_power_w: f64,
    pub bandwidth_hz: f64,
    pub carrier_hz: f64,
}

/// A configuration validated against its catalog entry.
#[derive(Debug, Clone)]
pub struct RanLink<'a> {
    pub spec: &'a PlatformSpec,
    pub propagation: &'a Propagation,
    pub config: RanLinkConfig,
}

impl<'a> RanLink<'a> {
    pub fn new(catalog: &'a PlatformCatalog, config: &RanLinkConfig) -> Result<Self, RadioError> {
        let spec = catalog
            .get(&config.platform)
            .ok_or_else(|| RadioError::Config(format!("unknown platform '{}'", config.platform)))?;
        let propagation = spec
            .propagation
            .as_ref()
            .ok_or_else(|| RadioError::Config(format!("'{}' is not a RAN platform", spec.id)))?;
        let c = config;
        if !(c.tx_power_w > 0.0 && c.tx_power_w <= spec.max_tx_power_w) {
            return Err(RadioError::Config(format!(
                "tx power {} W outside (0, {}] for {}",
                c.tx_power_w, spec.max_tx_power_w, spec.id
            )));
        }
        if !(c.bandwidth_hz > 0.0 && c.bandwidth_hz <= spec.max_bandwidth_hz) {
            return Err(RadioError::Config(format!(
                "bandwidth {} Hz outside (0, {}] for {}",
                c.bandwidth_hz, spec.max_bandwidth_hz, spec.id
            )));
        }
        if !(c.carrier_hz >= spec.freq_low_hz && c.carrier_hz <= spec.freq_high_hz) {
            return Err(RadioError::Config(format!(
                "carrier {} Hz outside the {} band",
                c.carrier_hz, spec.id
            )));
        }
        Ok(Self {
            spec,
            propagation,
            config: config.clone(),
        })
    }

    pub fn path_loss_db(&self, distance_m: f64, profile: &TerrainProfile) -> f64 {
        let p = self.propagation;
        let penalty = match profile.worst_blockage() {
            Blockage::Clear => 0.0,
            Blockage::Partial => PARTIAL_BLOCKAGE_DB,
            Blockage::Blocked => return f64::INFINITY,
        };
        let d = distance_m.max(1.0);
        p.ref_loss_db + 10.0 * p.exponent * (d / REFERENCE_DISTANCE_M).log10() + penalty
    }

    pub fn noise_dbm(&self) -> f64 {
        thermal_noise_dbm(self.config.bandwidth_hz) + self.propagation.noise_figure_db
    }

    pub fn snr_db(&self, distance_m: f64, profile: &TerrainProfile, weather: &WeatherSample) -> f64 {
        let c = &self.config;
        let rain = if c.carrier_hz >= RAIN_MIN_CARRIER_HZ {
            rain_attenuation_db(c.carrier_hz, weather.rain_rate_mm_h, distance_m / 1e3)
        } else {
            0.0
        };
        watts_to_dbm(c.tx_power_w) - self.path_loss_db(distance_m, profile) - rain - self.noise_dbm()
    }

    pub fn capacity(&self, distance_m: f64, profile: &TerrainProfile, weather: &WeatherSample) -> f64 {
        let snr = self.snr_db(distance_m, profile, weather);
        if !(snr >= self.propagation.demod_threshold_db) {
            return 0.0;
        }
        let b = self.config.bandwidth_hz;
        let se = (1.0 + 10f64.powf(snr / 10.0)).log2().min(self.spec.spectral_efficiency_cap);
        (b * se).min(self.spec.max_capacity_bps)
    }
}

pub fn path_loss_db(link: &RanLink<'_>, distance_m: f64, profile: &TerrainProfile) -> f64 {
    link.path_loss_db(distance_m, profile)
}

/// Downlink capacity in bits/s; 0 below the platform's demodulation threshold.
pub fn ran_capacity(
    catalog: &PlatformCatalog,
    config: &RanLinkConfig,
    distance_m: f64,
    profile: &TerrainProfile,
    weather: &WeatherSample,
) -> Result<f64, RadioError> {
    Ok(RanLink::new(catalog, config)?.capacity(distance_m, profile, weather))
}

/// Capacity at each route point, in route order.
pub fn capacity_profile(
    link: &RanLink<'_>,
    route: &[(f64, TerrainProfile)],
    weather: &WeatherSample,
) -> Vec<(f64, f64)> {
    route
        .iter()
        .map(|(d, p)| (*d, link.capacity(*d, p, weather)))
        .collect()
}

/// Receiver positions every `step_m` along a drive path, each paired with
/// the path to it carrying the local blockage.
pub fn route_from_profile(profile: &TerrainProfile, step_m: f64) -> Vec<(f64, TerrainProfile)> {
    let n = (profile.length_m() / step_m).floor() as usize;
    (1..=n)
        .map(|i| {
            let d = i as f64 * step_m;
            (d, profile.receiver_path(d))
        })
        .collect()
}

/// Writes `distance_m,<platform>...` columns for profiles sharing distances.
pub fn write_profile_csv(w: impl Write, series: &[(String, Vec<(f64, f64)>)]) -> Result<(), RadioError> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["distance_m".to_string()];
    header.extend(series.iter().map(|(name, _)| name.clone()));
    wr.write_record(&header)?;
    let rows = series.first().map(|s| s.1.len()).unwrap_or(0);
    for i in 0..rows {
        let mut rec = vec![series[0].1[i].0.to_string()];
        rec.extend(series.iter().map(|(_, s)| format!("{:.1}", s[i].1)));
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(platform: &str, w: f64, b: f64, f: f64) -> RanLinkConfig {
        RanLinkConfig {
            platform: platform.into(),
            tx_power_w: w,
            bandwidth_hz: b,
            carrier_hz: f,
        }
    }

    #[test]
    fn reference_distance_gives_ref_loss() {
        let cat = PlatformCatalog::default_catalog();
        let link = RanLink::new(&cat, &cfg("AraMIMO-C", 10.0, 100e6, 3.5e9)).unwrap();
        let clear = TerrainProfile::straight(100.0, 0.0, 0.0);
        assert_eq!(link.path_loss_db(100.0, &clear), link.propagation.ref_loss_db);
        let d2 = link.path_loss_db(200.0, &clear) - link.path_loss_db(100.0, &clear);
        assert!((d2 - 10.0 * link.propagation.exponent * 2f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn blocked_path_has_no_link() {
        let cat = PlatformCatalog::default_catalog();
        let link = RanLink::new(&cat, &cfg("AraMIMO-TVWS", 10.0, 24e6, 539e6)).unwrap();
        let p = TerrainProfile::with_endpoint_blockage(300.0, Blockage::Blocked);
        assert!(link.path_loss_db(300.0, &p).is_infinite());
        assert_eq!(link.capacity(300.0, &p, &WeatherSample::clear()), 0.0);
    }

    #[test]
    fn config_validation() {
        let cat = PlatformCatalog::default_catalog();
        assert!(RanLink::new(&cat, &cfg("AraSDR", 1.0, 40e6, 3.5e9)).is_err());
        assert!(RanLink::new(&cat, &cfg("AraSDR", 0.01, 400e6, 3.5e9)).is_err());
        assert!(RanLink::new(&cat, &cfg("AraSDR", 0.01, 40e6, 5e9)).is_err());
        assert!(RanLink::new(&cat, &cfg("AraHaul-micro", 0.01, 40e6, 11e9)).is_err());
    }

    #[test]
    fn empty_route_empty_series() {
        let cat = PlatformCatalog::default_catalog();
        let link = RanLink::new(&cat, &cfg("AraSDR", 0.01, 40e6, 3.5e9)).unwrap();
        assert!(capacity_profile(&link, &[], &WeatherSample::clear()).is_empty());
    }
}
