use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::linalg::{inner, inverse_diagonal, norm_sqr};
use super::{ChannelMatrix, MimoError};

/// Whether the correlation coefficient is the norm ratio itself or its square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMode {
    #[default]
    Amplitude,
    Power,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Orthogonality {
    /// `1 - R_i` per member, in group order.
    pub per_stream: Vec<f64>,
    pub min: f64,
    pub mean: f64,
}

impl Orthogonality {
    /// The admission statistic.
    pub fn value(&self) -> f64 {
        self.min
    }
}

/// Orthonormal basis of `vectors` by modified Gram-Schmidt with one
/// re-orthogonalization pass; dependent vectors are dropped.
fn orthonormal_basis(vectors: &[&[Complex64]]) -> Vec<Vec<Complex64>> {
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    for v in vectors {
        let scale = norm_sqr(v).sqrt();
        let mut u = v.to_vec();
        for _ in 0..2 {
            for q in &basis {
                let c = inner(q, &u);
                for (x, qk) in u.iter_mut().zip(q) {
                    *x -= c * qk;
                }
            }
        }
        let n = norm_sqr(&u).sqrt();
        if n > 1e-10 * scale {
            basis.push(u.into_iter().map(|x| x / n).collect());
        }
    }
    basis
}

fn snap(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    if x < 1e-12 {
        0.0
    } else if x > 1.0 - 1e-12 {
        1.0
    } else {
        x
    }
}

/// Per-stream orthogonality of a group: for each member, one minus the norm
/// ratio of its projection onto the span of the other members.
pub fn orthogonality(
    channels: &ChannelMatrix,
    group: &[usize],
    mode: CorrelationMode,
) -> Result<Orthogonality, MimoError> {
    if group.len() < 2 {
        return Err(MimoError::GroupTooSmall);
    }
    for &s in group {
        if s >= channels.streams() {
            return Err(MimoError::UnknownStream(s));
        }
        if norm_sqr(channels.row(s)) == 0.0 {
            return Err(MimoError::ZeroVector(s));
        }
    }
    let per_stream: Vec<f64> = group
        .iter()
        .map(|&i| {
            let others: Vec<&[Complex64]> =
                group.iter().filter(|&&j| j != i).map(|&j| channels.row(j)).collect();
            let basis = orthonormal_basis(&others);
            let h = channels.row(i);
            let proj: f64 = basis.iter().map(|q| inner(q, h).norm_sqr()).sum();
            let ratio = (proj / norm_sqr(h)).sqrt().min(1.0);
            let r = match mode {
                CorrelationMode::Amplitude => ratio,
                CorrelationMode::Power => ratio * ratio,
            };
            snap(1.0 - r)
        })
        .collect();
    let min = per_stream.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = per_stream.iter().sum::<f64>() / per_stream.len() as f64;
    Ok(Orthogonality { per_stream, min, mean })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRate {
    pub sinr: Vec<f64>,
    pub rates_bps: Vec<f64>,
    pub total_bps: f64,
}

/// Zero-forcing with equal power split:
/// `SINR_i = (P / |g|) / (noise * [(H H^H)^-1]_ii)`.
pub fn group_capacity(
    channels: &ChannelMatrix,
    group: &[usize],
    rb_bandwidth_hz: f64,
    noise_w: f64,
    tx_power_w: f64,
    se_cap: f64,
) -> Result<GroupRate, MimoError> {
    let k = group.len();
    let m = channels.antennas();
    if k == 0 || k > m {
        return Err(MimoError::UnschedulableGroup { streams: k, antennas: m });
    }
    if let Some(&s) = group.iter().find(|&&s| s >= channels.streams()) {
        return Err(MimoError::UnknownStream(s));
    }
    let mut gram = vec![Complex64::new(0.0, 0.0); k * k];
    for (a, &i) in group.iter().enumerate() {
        for (b, &j) in group.iter().enumerate() {
            // (H H^H)_ab = h_a . conj(h_b)
            gram[a * k + b] = inner(channels.row(j), channels.row(i));
        }
    }
    let diag = inverse_diagonal(gram, k).ok_or(MimoError::UnschedulableGroup { streams: k, antennas: m })?;
    let per_stream_power = tx_power_w / k as f64;
    let sinr: Vec<f64> = diag.iter().map(|d| per_stream_power / (noise_w * d)).collect();
    let rates_bps: Vec<f64> = sinr
        .iter()
        .map(|s| rb_bandwidth_hz * (1.0 + s).log2().min(se_cap))
        .collect();
    Ok(GroupRate {
        total_bps: rates_bps.iter().sum(),
        sinr,
        rates_bps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(rows: &[&[f64]]) -> ChannelMatrix {
        ChannelMatrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn orthonormal_pair_is_one() {
        let h = real(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert_eq!(orthogonality(&h, &[0, 1], CorrelationMode::Amplitude).unwrap().min, 1.0);
    }

    #[test]
    fn duplicate_is_zero() {
        let h = real(&[&[0.3, 0.7, 0.1], &[0.3, 0.7, 0.1]]);
        assert_eq!(orthogonality(&h, &[0, 1], CorrelationMode::Amplitude).unwrap().min, 0.0);
    }

    #[test]
    fn forty_five_degrees() {
        let s = 0.5f64.sqrt();
        let h = real(&[&[1.0, 0.0], &[s, s]]);
        let o = orthogonality(&h, &[0, 1], CorrelationMode::Amplitude).unwrap();
        assert!((o.min - (1.0 - s)).abs() < 1e-12);
        let p = orthogonality(&h, &[0, 1], CorrelationMode::Power).unwrap();
        assert!((p.min - 0.5).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let h = real(&[&[1.0, 0.0], &[0.0, 0.0]]);
        assert_eq!(orthogonality(&h, &[0], CorrelationMode::Amplitude), Err(MimoError::GroupTooSmall));
        assert_eq!(orthogonality(&h, &[0, 1], CorrelationMode::Amplitude), Err(MimoError::ZeroVector(1)));
    }

    #[test]
    fn single_stream_snr_three() {
        let h = real(&[&[1.0, 0.0]]);
        let r = group_capacity(&h, &[0], 540e3, 1.0, 3.0, 10.0).unwrap();
        assert!((r.total_bps - 2.0 * 540e3).abs() < 1e-6);
    }

    #[test]
    fn orthogonal_pair_splits_power() {
        let h = real(&[&[2.0, 0.0], &[0.0, 2.0]]);
        let pair = group_capacity(&h, &[0, 1], 1.0, 1.0, 10.0, 100.0).unwrap();
        let half = group_capacity(&h, &[0], 1.0, 1.0, 5.0, 100.0).unwrap();
        assert!((pair.sinr[0] - half.sinr[0]).abs() < 1e-12);
        assert!((pair.sinr[1] - half.sinr[0]).abs() < 1e-12);
    }

    #[test]
    fn duplicate_unschedulable() {
        let h = real(&[&[1.0, 2.0], &[1.0, 2.0]]);
        assert!(matches!(
            group_capacity(&h, &[0, 1], 1.0, 1.0, 1.0, 10.0),
            Err(MimoError::UnschedulableGroup { .. })
        ));
    }
}
