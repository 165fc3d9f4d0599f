use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::TelemetryError;
use crate::domain::RngStream;
use crate::units::fspl_db;

pub const NOISE_FLOOR_DBM: f64 = -120.0;
pub const OCCUPANCY_MAX_DBM: f64 = -20.0;
/// Noise draws sit in `[floor, floor + FLOOR_SPREAD_DB)`.
const FLOOR_SPREAD_DB: f64 = 2.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanConfig {
    pub band_low_hz: f64,
    pub band_high_hz: f64,
    pub channel_width_hz: f64,
    pub duration_s: u32,
    pub slot_s: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            band_low_hz: 470e6,
            band_high_hz: 698e6,
            channel_width_hz: 6e6,
            duration_s: 900,
            slot_s: 1.0,
        }
    }
}

impl ScanConfig {
    pub fn channels(&self) -> Result<usize, TelemetryError> {
        let n = (self.band_high_hz - self.band_low_hz) / self.channel_width_hz;
        if !(n >= 1.0) || (n - n.round()).abs() > 1e-9 {
            return Err(TelemetryError::MisalignedBand {
                low_hz: self.band_low_hz,
                high_hz: self.band_high_hz,
                width_hz: self.channel_width_hz,
            });
        }
        Ok(n.round() as usize)
    }

    pub fn slots(&self) -> usize {
        (self.duration_s as f64 / self.slot_s).round() as usize
    }
}

/// A licensed incumbent as received at the scanner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimaryEmitter {
    pub channel: usize,
    pub rx_dbm: f64,
    #[serde(default)]
    pub start_slot: usize,
    #[serde(default = "usize_max")]
    pub end_slot: usize,
    /// Fraction of slots on air, drawn per slot.
    #[serde(default = "one")]
    pub duty: f64,
}

fn usize_max() -> usize {
    usize::MAX
}

fn one() -> f64 {
    1.0
}

/// An experiment transmission, propagated to the scanner by free-space loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentEmission {
    pub experiment: String,
    pub position: (f64, f64),
    pub freq_low_hz: f64,
    pub freq_high_hz: f64,
    pub eirp_dbm: f64,
    pub start_slot: usize,
    pub end_slot: usize,
}

/// Received power per (channel, slot), dBm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyGrid {
    pub site: String,
    pub band_low_hz: f64,
    pub channel_width_hz: f64,
    pub slot_s: f64,
    pub channels: usize,
    pub slots: usize,
    values: Vec<f64>,
}

impl OccupancyGrid {
    pub fn get(&self, channel: usize, slot: usize) -> f64 {
        self.values[channel * self.slots + slot]
    }

    pub fn channel(&self, channel: usize) -> &[f64] {
        &self.values[channel * self.slots..(channel + 1) * self.slots]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn channel_center_hz(&self, channel: usize) -> f64 {
        self.band_low_hz + (channel as f64 + 0.5) * self.channel_width_hz
    }

    /// Nearest-rank percentile of one channel's samples, `p` in [0, 100].
    pub fn percentile(&self, channel: usize, p: f64) -> f64 {
        let mut v = self.channel(channel).to_vec();
        v.sort_by(f64::total_cmp);
        let rank = ((p / 100.0) * v.len() as f64).ceil().max(1.0) as usize;
        v[rank.min(v.len()) - 1]
    }

    /// Channels whose 95th-percentile power stays within 3 dB of the floor.
    pub fn available_channels(&self) -> Vec<usize> {
        (0..self.channels)
            .filter(|&c| self.percentile(c, 95.0) <= NOISE_FLOOR_DBM + 3.0)
            .collect()
    }

    /// Row-major CSV: one row per channel, one column per slot.
    pub fn write_csv(&self, w: impl Write) -> Result<(), TelemetryError> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["channel".to_string(), "center_hz".to_string()];
        header.extend((0..self.slots).map(|s| format!("s{s}")));
        wr.write_record(&header)?;
        for c in 0..self.channels {
            let mut row = vec![c.to_string(), self.channel_center_hz(c).to_string()];
            row.extend(self.channel(c).iter().map(|v| format!("{v:.3}")));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Scans the band at a site located at `position`. Each cell is the maximum
/// of a noise-floor draw and every emission landing in that channel, then
/// clipped to the reportable range.
pub fn spectrum_scan(
    site: &str,
    position: (f64, f64),
    cfg: &ScanConfig,
    primaries: &[PrimaryEmitter],
    emissions: &[ExperimentEmission],
    rng: RngStream,
) -> Result<OccupancyGrid, TelemetryError> {
    let channels = cfg.channels()?;
    let slots = cfg.slots();
    let mut r = rng.rng();
    let mut values = Vec::with_capacity(channels * slots);
    for _ in 0..channels * slots {
        let n: f64 = r.sample(StandardNormal);
        values.push(NOISE_FLOOR_DBM + n.abs().min(FLOOR_SPREAD_DB));
    }
    let mut grid = OccupancyGrid {
        site: site.to_string(),
        band_low_hz: cfg.band_low_hz,
        channel_width_hz: cfg.channel_width_hz,
        slot_s: cfg.slot_s,
        channels,
        slots,
        values,
    };
    let mut duty_rng = rng.substream(1).rng();
    for p in primaries {
        if p.channel >= channels {
            continue;
        }
        for s in p.start_slot.min(slots)..p.end_slot.min(slots) {
            let on = p.duty >= 1.0 || duty_rng.random::<f64>() < p.duty;
            if on {
                let v = &mut grid.values[p.channel * slots + s];
                *v = v.max(p.rx_dbm);
            }
        }
    }
    for e in emissions {
        let d = (e.position.0 - position.0).hypot(e.position.1 - position.1).max(1.0);
        for c in 0..channels {
            let lo = cfg.band_low_hz + c as f64 * cfg.channel_width_hz;
            let hi = lo + cfg.channel_width_hz;
            if e.freq_high_hz <= lo || e.freq_low_hz >= hi {
                continue;
            }
            let rx = e.eirp_dbm - fspl_db(grid.channel_center_hz(c), d);
            for s in e.start_slot.min(slots)..e.end_slot.min(slots) {
                let v = &mut grid.values[c * slots + s];
                *v = v.max(rx);
            }
        }
    }
    for v in &mut grid.values {
        *v = v.clamp(NOISE_FLOOR_DBM, OCCUPANCY_MAX_DBM);
    }
    Ok(grid)
}

/// A rural TV band: 18 of 38 channels carry incumbents, a few intermittently.
pub fn default_rural_primaries() -> Vec<PrimaryEmitter> {
    const OCCUPIED: [(usize, f64, f64); 18] = [
        (1, -38.0, 1.0),
        (2, -62.0, 1.0),
        (4, -45.0, 1.0),
        (5, -88.0, 1.0),
        (8, -71.0, 1.0),
        (11, -52.0, 1.0),
        (12, -95.0, 0.6),
        (14, -41.0, 1.0),
        (17, -77.0, 1.0),
        (19, -66.0, 1.0),
        (21, -58.0, 0.5),
        (22, -49.0, 1.0),
        (25, -83.0, 1.0),
        (27, -36.0, 1.0),
        (30, -74.0, 0.4),
        (31, -60.0, 1.0),
        (34, -92.0, 1.0),
        (36, -55.0, 1.0),
    ];
    OCCUPIED
        .iter()
        .map(|&(channel, rx_dbm, duty)| PrimaryEmitter {
            channel,
            rx_dbm,
            start_slot: 0,
            end_slot: usize::MAX,
            duty,
        })
        .collect()
}
