use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::MimoError;
use crate::domain::RngStream;

/// Complex channel gains, one row per stream and one column per antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    streams: usize,
    antennas: usize,
    data: Vec<Complex64>,
}

impl ChannelMatrix {
    pub fn new(streams: usize, antennas: usize, data: Vec<Complex64>) -> Result<Self, MimoError> {
        if streams == 0 || antennas == 0 || data.len() != streams * antennas {
            return Err(MimoError::Invalid(format!(
                "{} entries do not form a {streams}x{antennas} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(MimoError::Invalid("non-finite channel entry".into()));
        }
        Ok(Self { streams, antennas, data })
    }

    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self, MimoError> {
        let antennas = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != antennas) {
            return Err(MimoError::Invalid("ragged rows".into()));
        }
        let streams = rows.len();
        Self::new(streams, antennas, rows.into_iter().flatten().collect())
    }

    pub fn streams(&self) -> usize {
        self.streams
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn row(&self, stream: usize) -> &[Complex64] {
        &self.data[stream * self.antennas..(stream + 1) * self.antennas]
    }

    pub fn row_mut(&mut self, stream: usize) -> &mut [Complex64] {
        &mut self.data[stream * self.antennas..(stream + 1) * self.antennas]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeSpec {
    pub id: String,
    /// Mean per-antenna SNR at full transmit power.
    pub snr_db: f64,
    #[serde(default = "two")]
    pub streams: usize,
    /// UEs sharing a cluster id see correlated channels.
    #[serde(default)]
    pub cluster: Option<u32>,
}

fn two() -> usize {
    2
}

/// A user placement scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MimoSet {
    pub name: String,
    pub antennas: usize,
    /// Pairwise correlation between streams of the same cluster.
    #[serde(default)]
    pub cluster_correlation: f64,
    pub ues: Vec<UeSpec>,
}

impl MimoSet {
    pub fn stream_count(&self) -> usize {
        self.ues.iter().map(|u| u.streams).sum()
    }

    /// Owning UE index of each stream.
    pub fn stream_owner(&self) -> Vec<usize> {
        self.ues
            .iter()
            .enumerate()
            .flat_map(|(i, u)| std::iter::repeat_n(i, u.streams))
            .collect()
    }
}

fn cn(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Correlated Rayleigh channels, one matrix per resource block. A stream in
/// cluster `c` is `sqrt(g) * (sqrt(rho) * s_c + sqrt(1 - rho) * w)` with a
/// per-RB shared vector `s_c` and private `w`, both CN(0, I); unclustered
/// streams use `w` alone. `g` sets the UE's mean per-antenna SNR.
pub fn synthesize_channels(
    set: &MimoSet,
    n_rbs: usize,
    noise_w: f64,
    tx_power_w: f64,
    rng: RngStream,
) -> Result<Vec<ChannelMatrix>, MimoError> {
    let rho = set.cluster_correlation;
    if !(0.0..=1.0).contains(&rho) {
        return Err(MimoError::Invalid(format!("correlation {rho} outside [0, 1]")));
    }
    let s = set.stream_count();
    let m = set.antennas;
    if s == 0 || m == 0 {
        return Err(MimoError::Invalid("empty set".into()));
    }
    let mut clusters: Vec<u32> = set.ues.iter().filter_map(|u| u.cluster).collect();
    clusters.sort();
    clusters.dedup();
    let mut r = rng.rng();
    let mut out = Vec::with_capacity(n_rbs);
    for _ in 0..n_rbs {
        let shared: Vec<Vec<Complex64>> = clusters
            .iter()
            .map(|_| (0..m).map(|_| cn(&mut r)).collect())
            .collect();
        let mut data = Vec::with_capacity(s * m);
        for ue in &set.ues {
            let g = (10f64.powf(ue.snr_db / 10.0) * noise_w / tx_power_w).sqrt();
            let common = ue
                .cluster
                .and_then(|c| clusters.iter().position(|x| *x == c))
                .map(|k| &shared[k]);
            for _ in 0..ue.streams {
                for a in 0..m {
                    let w = cn(&mut r);
                    let h = match common {
                        Some(sv) => sv[a] * rho.sqrt() + w * (1.0 - rho).sqrt(),
                        None => w,
                    };
                    data.push(h * g);
                }
            }
        }
        out.push(ChannelMatrix::new(s, m, data)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mimo::metric::{orthogonality, CorrelationMode};

    fn set(rho: f64, cluster: Option<u32>) -> MimoSet {
        MimoSet {
            name: "t".into(),
            antennas: 8,
            cluster_correlation: rho,
            ues: (0..2)
                .map(|i| UeSpec {
                    id: format!("ue-{i}"),
                    snr_db: 10.0,
                    streams: 2,
                    cluster,
                })
                .collect(),
        }
    }

    #[test]
    fn deterministic_and_shaped() {
        let a = synthesize_channels(&set(0.0, None), 3, 1.0, 1.0, RngStream::new(1, 2)).unwrap();
        let b = synthesize_channels(&set(0.0, None), 3, 1.0, 1.0, RngStream::new(1, 2)).unwrap();
        assert_eq!(a, b);
        assert_eq!((a[0].streams(), a[0].antennas()), (4, 8));
    }

    #[test]
    fn clustering_lowers_orthogonality() {
        let spread = synthesize_channels(&set(0.0, None), 20, 1.0, 1.0, RngStream::new(4, 0)).unwrap();
        let close = synthesize_channels(&set(0.95, Some(1)), 20, 1.0, 1.0, RngStream::new(4, 0)).unwrap();
        let mean = |v: &[ChannelMatrix]| {
            v.iter()
                .map(|h| orthogonality(h, &[0, 2], CorrelationMode::Amplitude).unwrap().min)
                .sum::<f64>()
                / v.len() as f64
        };
        assert!(mean(&spread) > mean(&close) + 0.3);
    }
}
