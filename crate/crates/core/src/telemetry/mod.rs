//! Synthetic telemetry: weather, base-station power, TV-band spectrum
//! occupancy, and the generic measurement record every experiment persists.

mod power;
mod spectrum;
mod weather;

pub use power::{
    power_model, power_trace, BsState, Component, PowerReading, PowerTable, SiteReading,
    TVWS_TRANSIENT_FACTOR,
};
pub use spectrum::{
    default_rural_primaries, spectrum_scan, ExperimentEmission, OccupancyGrid, PrimaryEmitter,
    ScanConfig, NOISE_FLOOR_DBM, OCCUPANCY_MAX_DBM,
};
pub use weather::{
    read_weather_csv, weather_feed, write_weather_csv, WeatherCode, WeatherParams,
    WeatherSample, WeatherSource,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TelemetryError {
    #[error("trace parse error at record {record}: {message}")]
    Trace { record: usize, message: String },
    #[error("band {low_hz}..{high_hz} Hz is not a whole number of {width_hz} Hz channels")]
    MisalignedBand {
        low_hz: f64,
        high_hz: f64,
        width_hz: f64,
    },
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Closed vocabulary of measurement units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    BitsPerSecond,
    Milliseconds,
    Seconds,
    Watts,
    Amps,
    Dbm,
    Db,
    MmPerHour,
    Celsius,
    MetersPerSecond,
    Meters,
    Radians,
    Ratio,
    Count,
    FramesPerSecond,
}

/// One timestamped metric sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub time_s: f64,
    pub experiment: String,
    pub metric: String,
    pub value: f64,
    pub unit: Unit,
}

impl MeasurementRecord {
    pub fn new(time_s: f64, experiment: &str, metric: &str, value: f64, unit: Unit) -> Self {
        Self {
            time_s,
            experiment: experiment.to_string(),
            metric: metric.to_string(),
            value,
            unit,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_roundtrips_through_json() {
        let r = MeasurementRecord::new(1.5, "exp-1", "throughput", 8.92e8, Unit::BitsPerSecond);
        let line = serde_json::to_string(&r).unwrap();
        assert!(line.contains("\"bits_per_second\""));
        assert_eq!(serde_json::from_str::<MeasurementRecord>(&line).unwrap(), r);
        assert!(serde_json::from_str::<Unit>("\"furlongs\"").is_err());
    }
}
