use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::TelemetryError;
use crate::domain::RngStream;

/// Rain rates below this are reported as drizzle, mm/h.
pub const DRIZZLE_LIMIT_MM_H: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeatherCode {
    Clear,
    Drizzle,
    Rain,
    Snow,
}

impl WeatherCode {
    pub fn classify(rain_rate_mm_h: f64, temperature_c: f64) -> Self {
        if rain_rate_mm_h <= 0.0 {
            WeatherCode::Clear
        } else if temperature_c < 0.0 {
            WeatherCode::Snow
        } else if rain_rate_mm_h < DRIZZLE_LIMIT_MM_H {
            WeatherCode::Drizzle
        } else {
            WeatherCode::Rain
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherSample {
    pub time_s: f64,
    pub site: String,
    pub rain_rate_mm_h: f64,
    pub wind_m_s: f64,
    pub temperature_c: f64,
    pub code: WeatherCode,
}

impl WeatherSample {
    pub fn new(time_s: f64, site: &str, rain_rate_mm_h: f64, wind_m_s: f64, temperature_c: f64) -> Self {
        let rain = rain_rate_mm_h.max(0.0);
        Self {
            time_s,
            site: site.to_string(),
            rain_rate_mm_h: rain,
            wind_m_s,
            temperature_c,
            code: WeatherCode::classify(rain, temperature_c),
        }
    }

    /// A dry, calm sample at 15 °C.
    pub fn clear() -> Self {
        Self::new(0.0, "", 0.0, 0.0, 15.0)
    }

    /// A 15 °C sample with the given rain rate.
    pub fn rain(rain_rate_mm_h: f64) -> Self {
        Self::new(0.0, "", rain_rate_mm_h, 0.0, 15.0)
    }
}

/// Parameters of the synthetic regional rain process.
///
/// A latent AR(1) driver shared by all sites is mixed with an independent
/// AR(1) term per site: `x = w * shared + local_noise * local`. Rain falls
/// when `x` exceeds `wet_threshold`, at `rain_scale_mm_h` per unit excess.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeatherParams {
    pub dt_s: f64,
    pub shared_weight: f64,
    pub local_noise: f64,
    pub correlation_time_s: f64,
    pub wet_threshold: f64,
    pub rain_scale_mm_h: f64,
    pub mean_temperature_c: f64,
    pub temperature_noise_c: f64,
    pub mean_wind_m_s: f64,
}

impl Default for WeatherParams {
    fn default() -> Self {
        Self {
            dt_s: 60.0,
            shared_weight: 0.8,
            local_noise: 0.6,
            correlation_time_s: 1800.0,
            wet_threshold: 0.5,
            rain_scale_mm_h: 12.0,
            mean_temperature_c: 15.0,
            temperature_noise_c: 1.5,
            mean_wind_m_s: 4.0,
        }
    }
}

pub enum WeatherSource<'a> {
    Synthetic(RngStream),
    Trace(&'a [WeatherSample]),
}

/// Per-site weather series over `[0, duration_s)`. Sites are returned in
/// sorted order. Trace mode replays the samples of the requested sites as-is.
pub fn weather_feed(
    sites: &[String],
    duration_s: f64,
    params: &WeatherParams,
    source: WeatherSource<'_>,
) -> Result<BTreeMap<String, Vec<WeatherSample>>, TelemetryError> {
    if !(duration_s > 0.0) {
        return Err(TelemetryError::Invalid("duration must be positive".into()));
    }
    match source {
        WeatherSource::Trace(samples) => {
            let mut out: BTreeMap<String, Vec<WeatherSample>> =
                sites.iter().map(|s| (s.clone(), Vec::new())).collect();
            for s in samples {
                if let Some(v) = out.get_mut(&s.site) {
                    v.push(s.clone());
                }
            }
            Ok(out)
        }
        WeatherSource::Synthetic(stream) => synthesize(sites, duration_s, params, stream),
    }
}

fn synthesize(
    sites: &[String],
    duration_s: f64,
    p: &WeatherParams,
    stream: RngStream,
) -> Result<BTreeMap<String, Vec<WeatherSample>>, TelemetryError> {
    if !(p.dt_s > 0.0) || !(p.correlation_time_s > 0.0) {
        return Err(TelemetryError::Invalid("dt and correlation time must be positive".into()));
    }
    let steps = (duration_s / p.dt_s).ceil() as usize;
    let phi = (-p.dt_s / p.correlation_time_s).exp();
    let innov = (1.0 - phi * phi).sqrt();

    let mut shared_rng = stream.substream(0).rng();
    let mut shared = Vec::with_capacity(steps);
    let mut z: f64 = shared_rng.sample(StandardNormal);
    for _ in 0..steps {
        shared.push(z);
        let n: f64 = shared_rng.sample(StandardNormal);
        z = phi * z + innov * n;
    }

    let mut sorted: Vec<&String> = sites.iter().collect();
    sorted.sort();
    sorted.dedup();
    let mut out = BTreeMap::new();
    for site in sorted {
        let mut rng = stream.substream(1 + crate::domain::splitmix64(hash_str(site))).rng();
        let mut e: f64 = rng.sample(StandardNormal);
        let mut wind = p.mean_wind_m_s;
        let mut series = Vec::with_capacity(steps);
        for (i, z) in shared.iter().enumerate() {
            let x = p.shared_weight * z + p.local_noise * e;
            let rain = p.rain_scale_mm_h * (x - p.wet_threshold).max(0.0);
            let tn: f64 = rng.sample(StandardNormal);
            let wn: f64 = rng.sample(StandardNormal);
            wind = (phi * wind + (1.0 - phi) * p.mean_wind_m_s + 0.5 * wn).max(0.0);
            let temp = p.mean_temperature_c + p.temperature_noise_c * tn;
            series.push(WeatherSample::new(i as f64 * p.dt_s, site, rain, wind, temp));
            let n: f64 = rng.sample(StandardNormal);
            e = phi * e + innov * n;
        }
        out.insert(site.clone(), series);
    }
    Ok(out)
}

fn hash_str(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

#[derive(Serialize, Deserialize)]
struct Row {
    t_s: f64,
    site: String,
    rain_mm_h: f64,
    wind_m_s: f64,
    temperature_c: f64,
}

/// Reads a weather trace CSV with header `t_s,site,rain_mm_h,wind_m_s,temperature_c`.
pub fn read_weather_csv(reader: impl Read) -> Result<Vec<WeatherSample>, TelemetryError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<Row>().enumerate() {
        let r = row.map_err(|e| TelemetryError::Trace {
            record: i + 1,
            message: e.to_string(),
        })?;
        if r.rain_mm_h < 0.0 || !r.rain_mm_h.is_finite() {
            return Err(TelemetryError::Trace {
                record: i + 1,
                message: format!("rain rate {} must be a finite non-negative number", r.rain_mm_h),
            });
        }
        out.push(WeatherSample::new(r.t_s, &r.site, r.rain_mm_h, r.wind_m_s, r.temperature_c));
    }
    Ok(out)
}

pub fn write_weather_csv(writer: impl Write, samples: &[WeatherSample]) -> Result<(), TelemetryError> {
    let mut w = csv::Writer::from_writer(writer);
    for s in samples {
        w.serialize(Row {
            t_s: s.time_s,
            site: s.site.clone(),
            rain_mm_h: s.rain_rate_mm_h,
            wind_m_s: s.wind_m_s,
            temperature_c: s.temperature_c,
        })?;
    }
    w.flush()?;
    Ok(())
}
