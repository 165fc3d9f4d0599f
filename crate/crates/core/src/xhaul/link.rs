use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{RainTable, XhaulError};
use crate::domain::{PlatformCatalog, PlatformSpec, XhaulRadio};
use crate::telemetry::WeatherSample;
use crate::units::{dbm_to_watts, fspl_db, lin_to_db, thermal_noise_dbm};

/// QAM constellation size; 4 is QPSK.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Modulation(pub u32);

impl Modulation {
    pub const QPSK: Modulation = Modulation(4);

    pub fn bits_per_symbol(self) -> f64 {
        (self.0 as f64).log2()
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == 4 {
            write!(f, "QPSK")
        } else {
            write!(f, "{}QAM", self.0)
        }
    }
}

impl FromStr for Modulation {
    type Err = XhaulError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_uppercase();
        if t == "QPSK" || t == "4QAM" {
            return Ok(Modulation::QPSK);
        }
        t.strip_suffix("QAM")
            .and_then(|n| n.parse::<u32>().ok())
            .filter(|n| n.is_power_of_two() && *n >= 4)
            .map(Modulation)
            .ok_or_else(|| XhaulError::Config(format!("unrecognized modulation '{s}'")))
    }
}

impl TryFrom<String> for Modulation {
    type Error = XhaulError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Modulation> for String {
    fn from(m: Modulation) -> String {
        m.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XhaulLinkConfig {
    pub platform: String,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub mcs: Modulation,
    pub tx_power_dbm: f64,
}

impl XhaulLinkConfig {
    /// A link at the platform's band center, widest channel, top modulation
    /// and default transmit power.
    pub fn nominal(spec: &PlatformSpec) -> Result<Self, XhaulError> {
        let radio = radio(spec)?;
        let mcs = radio
            .modulations
            .iter()
            .map(|m| m.parse::<Modulation>())
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .max()
            .ok_or_else(|| XhaulError::Config(format!("{}: no modulations", spec.id)))?;
        let bandwidth_hz = radio
            .channel_bandwidths_hz
            .iter()
            .copied()
            .fold(0.0, f64::max);
        Ok(Self {
            platform: spec.id.clone(),
            carrier_hz: spec.center_freq_hz(),
            bandwidth_hz,
            mcs,
            tx_power_dbm: radio.default_tx_power_dbm,
        })
    }
}

/// Instantaneous state of one x-haul link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkState {
    pub rsl_dbm: f64,
    pub snr_db: f64,
    pub throughput_bps: f64,
    /// Theoretical limit for the configured bandwidth and modulation.
    pub limit_bps: f64,
    pub available: bool,
}

impl LinkState {
    pub fn down() -> Self {
        Self {
            rsl_dbm: f64::NEG_INFINITY,
            snr_db: f64::NEG_INFINITY,
            throughput_bps: 0.0,
            limit_bps: 0.0,
            available: false,
        }
    }
}

fn radio(spec: &PlatformSpec) -> Result<&XhaulRadio, XhaulError> {
    spec.xhaul
        .as_ref()
        .ok_or_else(|| XhaulError::Config(format!("platform '{}' has no x-haul radio table", spec.id)))
}

/// A config checked against its platform.
#[derive(Debug, Clone)]
pub struct ResolvedLink<'a> {
    pub spec: &'a PlatformSpec,
    pub radio: &'a XhaulRadio,
    pub config: XhaulLinkConfig,
}

impl<'a> ResolvedLink<'a> {
    pub fn new(catalog: &'a PlatformCatalog, config: &XhaulLinkConfig) -> Result<Self, XhaulError> {
        let spec = catalog
            .get(&config.platform)
            .ok_or_else(|| XhaulError::Config(format!("unknown platform '{}'", config.platform)))?;
        let radio = radio(spec)?;
        let supported = radio
            .modulations
            .iter()
            .filter_map(|m| m.parse::<Modulation>().ok())
            .any(|m| m == config.mcs);
        if !supported {
            return Err(XhaulError::Config(format!(
                "{} does not support {}",
                spec.id, config.mcs
            )));
        }
        if !radio
            .channel_bandwidths_hz
            .iter()
            .any(|b| (b - config.bandwidth_hz).abs() <= 1e-6 * b)
        {
            return Err(XhaulError::Config(format!(
                "{} has no {} Hz channel",
                spec.id, config.bandwidth_hz
            )));
        }
        if !spec.contains_freq(config.carrier_hz - 1.0, config.carrier_hz + 1.0) {
            return Err(XhaulError::Config(format!(
                "carrier {} Hz outside {} band",
                config.carrier_hz, spec.id
            )));
        }
        if dbm_to_watts(config.tx_power_dbm) > spec.max_tx_power_w * (1.0 + 1e-9) {
            return Err(XhaulError::Config(format!(
                "tx power {} dBm exceeds {} W",
                config.tx_power_dbm, spec.max_tx_power_w
            )));
        }
        Ok(Self {
            spec,
            radio,
            config: config.clone(),
        })
    }

    /// Information bits per second per Hz carried by `mcs`.
    pub fn efficiency(&self, mcs: Modulation) -> f64 {
        mcs.bits_per_symbol() * self.radio.coding_efficiency
    }

    pub fn limit_bps(&self, mcs: Modulation) -> f64 {
        self.efficiency(mcs) * self.config.bandwidth_hz
    }

    /// SNR needed to hold `mcs`: the Shannon requirement plus the
    /// implementation gap.
    pub fn required_snr_db(&self, mcs: Modulation) -> f64 {
        lin_to_db(2f64.powf(self.efficiency(mcs)) - 1.0) + self.radio.implementation_gap_db
    }

    pub fn rsl_dbm(&self, distance_km: f64, weather: &WeatherSample, rain: &RainTable) -> f64 {
        let c = &self.config;
        let gain = self.spec.antenna_gain_dbi.unwrap_or(0.0);
        c.tx_power_dbm + 2.0 * gain
            - fspl_db(c.carrier_hz, distance_km * 1e3)
            - rain.attenuation_db(c.carrier_hz, weather.rain_rate_mm_h, distance_km)
    }

    pub fn snr_db(&self, rsl_dbm: f64) -> f64 {
        rsl_dbm - thermal_noise_dbm(self.config.bandwidth_hz) - self.radio.noise_figure_db
    }

    pub fn supported(&self) -> Vec<Modulation> {
        let mut v: Vec<Modulation> = self
            .radio
            .modulations
            .iter()
            .filter_map(|m| m.parse().ok())
            .collect();
        v.sort();
        v
    }

    pub fn state(&self, distance_km: f64, weather: &WeatherSample, rain: &RainTable) -> LinkState {
        let rsl = self.rsl_dbm(distance_km, weather, rain);
        let snr = self.snr_db(rsl);
        let mcs = self.config.mcs;
        let limit = self.limit_bps(mcs);
        let available = snr >= self.required_snr_db(mcs);
        LinkState {
            rsl_dbm: rsl,
            snr_db: snr,
            throughput_bps: if available { limit * self.radio.overhead_factor } else { 0.0 },
            limit_bps: limit,
            available,
        }
    }
}

/// Link state under a weather sample, using the default rain table.
pub fn xhaul_link_state(
    catalog: &PlatformCatalog,
    config: &XhaulLinkConfig,
    distance_km: f64,
    weather: &WeatherSample,
) -> Result<LinkState, XhaulError> {
    Ok(ResolvedLink::new(catalog, config)?.state(distance_km, weather, &RainTable::default()))
}

/// Picks the highest modulation whose required SNR plus `margin_db` fits the
/// predicted SNR, falling back to the lowest supported modulation.
pub fn adapt_mcs(
    catalog: &PlatformCatalog,
    base: &XhaulLinkConfig,
    distance_km: f64,
    weather: &WeatherSample,
    margin_db: f64,
) -> Result<XhaulLinkConfig, XhaulError> {
    let link = ResolvedLink::new(catalog, base)?;
    let snr = link.snr_db(link.rsl_dbm(distance_km, weather, &RainTable::default()));
    let supported = link.supported();
    let chosen = supported
        .iter()
        .rev()
        .find(|m| link.required_snr_db(**m) + margin_db <= snr)
        .or(supported.first())
        .copied()
        .unwrap_or(base.mcs);
    Ok(XhaulLinkConfig {
        mcs: chosen,
        ..base.clone()
    })
}

/// Writes a `time_s,rsl_dbm,throughput_bps` series.
pub fn write_link_series(w: impl Write, series: &[(f64, LinkState)]) -> Result<(), XhaulError> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["time_s", "rsl_dbm", "throughput_bps"])?;
    for (t, s) in series {
        wr.write_record([t.to_string(), format!("{:.4}", s.rsl_dbm), format!("{:.1}", s.throughput_bps)])?;
    }
    wr.flush()?;
    Ok(())
}
