use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::domain::RngStream;

/// Log-normal scintillation: the beacon intensity in dB follows an AR(1)
/// process with standard deviation `sigma0_db + sigma_per_mm_h * R` around a
/// mean rain loss of `mean_loss_per_mm_h * R` dB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScintParams {
    pub sigma0_db: f64,
    pub sigma_per_mm_h: f64,
    pub mean_loss_per_mm_h: f64,
    pub correlation_time_s: f64,
    /// Pixel value at nominal intensity, and pixels per dB.
    pub pixel_at_0db: f64,
    pub pixel_per_db: f64,
    pub apd_offset_v: f64,
    pub apd_gain_v: f64,
}

impl Default for ScintParams {
    fn default() -> Self {
        Self {
            sigma0_db: 0.8,
            sigma_per_mm_h: 0.12,
            mean_loss_per_mm_h: 0.1,
            correlation_time_s: 0.05,
            pixel_at_0db: 200.0,
            pixel_per_db: 10.0,
            apd_offset_v: 0.05,
            apd_gain_v: 1.2,
        }
    }
}

impl ScintParams {
    pub fn sigma_db(&self, rain_rate_mm_h: f64) -> f64 {
        self.sigma0_db + self.sigma_per_mm_h * rain_rate_mm_h.max(0.0)
    }

    pub fn pixel(&self, intensity_db: f64) -> f64 {
        (self.pixel_at_0db + self.pixel_per_db * intensity_db).clamp(0.0, 255.0)
    }

    pub fn apd_voltage(&self, intensity_db: f64) -> f64 {
        self.apd_offset_v + self.apd_gain_v * 10f64.powf(intensity_db / 10.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScintSample {
    pub time_s: f64,
    /// Positive values are fades.
    pub fade_db: f64,
    pub apd_voltage: f64,
    pub cmos_mean_pixel: f64,
}

pub fn scintillation_series(
    params: &ScintParams,
    rain_rate_mm_h: f64,
    duration_s: f64,
    dt_s: f64,
    rng: RngStream,
) -> Vec<ScintSample> {
    if !(duration_s > 0.0 && dt_s > 0.0) {
        return Vec::new();
    }
    let n = (duration_s / dt_s).round() as usize;
    let phi = (-dt_s / params.correlation_time_s).exp();
    let innov = (1.0 - phi * phi).sqrt();
    let sigma = params.sigma_db(rain_rate_mm_h);
    let mean_loss = params.mean_loss_per_mm_h * rain_rate_mm_h.max(0.0);
    let mut r = rng.rng();
    let mut x: f64 = r.sample::<f64, _>(StandardNormal);
    (0..n)
        .map(|i| {
            let intensity_db = -mean_loss + sigma * x;
            let n: f64 = r.sample(StandardNormal);
            x = phi * x + innov * n;
            ScintSample {
                time_s: i as f64 * dt_s,
                fade_db: -intensity_db,
                apd_voltage: params.apd_voltage(intensity_db),
                cmos_mean_pixel: params.pixel(intensity_db),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        (m, v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
    }

    #[test]
    fn dry_fade_is_small() {
        let s = scintillation_series(&ScintParams::default(), 0.0, 200.0, 0.01, RngStream::new(2, 0));
        let (_, var) = stats(&s.iter().map(|x| x.fade_db).collect::<Vec<_>>());
        assert!(var.sqrt() <= 1.0);
        let (mp, _) = stats(&s.iter().map(|x| x.cmos_mean_pixel).collect::<Vec<_>>());
        assert!(mp > 190.0);
    }

    #[test]
    fn rain_lowers_mean_and_raises_variance() {
        let p = ScintParams::default();
        let dry = scintillation_series(&p, 0.0, 200.0, 0.01, RngStream::new(5, 0));
        let wet = scintillation_series(&p, 25.0, 200.0, 0.01, RngStream::new(5, 0));
        assert_eq!(dry.len(), 20_000);
        let px = |s: &[ScintSample]| stats(&s.iter().map(|x| x.cmos_mean_pixel).collect::<Vec<_>>());
        let (md, vd) = px(&dry);
        let (mw, vw) = px(&wet);
        assert!(mw < md && vw > vd, "{md} {vd} {mw} {vw}");
        assert!(wet.iter().all(|x| (0.0..=255.0).contains(&x.cmos_mean_pixel)));
    }

    #[test]
    fn deterministic() {
        let p = ScintParams::default();
        assert_eq!(
            scintillation_series(&p, 10.0, 5.0, 0.01, RngStream::new(1, 1)),
            scintillation_series(&p, 10.0, 5.0, 0.01, RngStream::new(1, 1))
        );
    }
}
