//! On-off keyed beacon carrying the far end's received-power report.
//!
//! A frame is `GUARD_BITS` idle zeros, the 13-bit Barker preamble, a signed
//! 16-bit power report in 0.01 dB steps, then the payload bytes (MSB first).
//! The channel adds Gaussian noise to unit-amplitude marks; SNR is the mark
//! energy over noise variance and the slicer sits halfway between levels.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::domain::RngStream;

pub const BARKER_13: [u8; 13] = [1, 1, 1, 1, 1, 0, 0, 1, 1, 0, 1, 0, 1];
pub const GUARD_BITS: usize = 8;
const MAX_PREAMBLE_ERRORS: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeaconFrame {
    pub rx_power_report_dbm: f64,
    pub payload: Vec<u8>,
}

impl BeaconFrame {
    pub fn bits(&self) -> Vec<u8> {
        let mut out = vec![0u8; GUARD_BITS];
        out.extend_from_slice(&BARKER_13);
        let report = (self.rx_power_report_dbm * 100.0)
            .round()
            .clamp(i16::MIN as f64, i16::MAX as f64) as i16;
        push_bits(&mut out, &(report as u16).to_be_bytes());
        push_bits(&mut out, &self.payload);
        out
    }

    pub fn bit_len(payload_len: usize) -> usize {
        GUARD_BITS + BARKER_13.len() + 16 + 8 * payload_len
    }
}

fn push_bits(out: &mut Vec<u8>, bytes: &[u8]) {
    for b in bytes {
        for i in (0..8).rev() {
            out.push((b >> i) & 1);
        }
    }
}

fn pack(bits: &[u8]) -> Vec<u8> {
    bits.chunks(8)
        .map(|c| c.iter().fold(0u8, |acc, b| (acc << 1) | (b & 1)))
        .collect()
}

/// Locates the preamble in a hard-decided bit stream and decodes the frame
/// that follows it. Returns the index of the first preamble bit.
pub fn detect_frame(bits: &[u8], payload_len: usize) -> Option<(usize, BeaconFrame)> {
    let body = 16 + 8 * payload_len;
    let need = BARKER_13.len() + body;
    if bits.len() < need {
        return None;
    }
    let (start, errors) = (0..=bits.len() - need)
        .map(|i| {
            let e = BARKER_13.iter().zip(&bits[i..]).filter(|(a, b)| a != b).count();
            (i, e)
        })
        .min_by_key(|&(i, e)| (e, i))?;
    if errors > MAX_PREAMBLE_ERRORS {
        return None;
    }
    let p = start + BARKER_13.len();
    let report = pack(&bits[p..p + 16]);
    let report = i16::from_be_bytes([report[0], report[1]]);
    Some((
        start,
        BeaconFrame {
            rx_power_report_dbm: report as f64 / 100.0,
            payload: pack(&bits[p + 16..p + body]),
        },
    ))
}

/// Analytic bit error rate of the midpoint slicer: `Q(sqrt(snr) / 2)`.
pub fn ook_ber(snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        return 0.0;
    }
    let snr = 10f64.powf(snr_db / 10.0);
    0.5 * erfc(snr.sqrt() / 2.0 / std::f64::consts::SQRT_2)
}

/// Complementary error function (Numerical Recipes `erfcc`, |rel err| < 1.2e-7).
fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let poly = -z * z - 1.26551223
        + t * (1.00002368
            + t * (0.37409196
                + t * (0.09678418
                    + t * (-0.18628806
                        + t * (0.27886807
                            + t * (-1.13520398
                                + t * (1.48851587 + t * (-0.82215223 + t * 0.17087277))))))));
    let r = t * poly.exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeaconResult {
    pub decoded: Option<BeaconFrame>,
    pub reported_rx_power_dbm: Option<f64>,
    /// Raw slicer errors over the transmitted bits at true timing.
    pub ber: f64,
    pub bit_errors: usize,
    pub bits_sent: usize,
    pub frame_lost: bool,
}

/// Sends one frame through the noisy channel, preceded by a random idle
/// stretch, and runs the receiver on the sliced bits.
pub fn beacon_roundtrip(frame: &BeaconFrame, snr_db: f64, rng: RngStream) -> BeaconResult {
    let mut r = rng.rng();
    let sigma = if snr_db == f64::INFINITY {
        0.0
    } else {
        10f64.powf(-snr_db / 20.0)
    };
    let lead = r.random_range(0..GUARD_BITS);
    let mut tx = vec![0u8; lead];
    tx.extend(frame.bits());
    let rx: Vec<u8> = tx
        .iter()
        .map(|&b| {
            let n: f64 = if sigma > 0.0 { r.sample::<f64, _>(StandardNormal) * sigma } else { 0.0 };
            u8::from(b as f64 + n > 0.5)
        })
        .collect();
    let errors = tx.iter().zip(&rx).filter(|(a, b)| a != b).count();
    let decoded = detect_frame(&rx, frame.payload.len()).map(|(_, f)| f);
    BeaconResult {
        reported_rx_power_dbm: decoded.as_ref().map(|f| f.rx_power_report_dbm),
        frame_lost: decoded.is_none(),
        decoded,
        ber: errors as f64 / tx.len() as f64,
        bit_errors: errors,
        bits_sent: tx.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame() -> BeaconFrame {
        BeaconFrame {
            rx_power_report_dbm: -7.42,
            payload: vec![0xA5, 0x00, 0xFF, 0x3C],
        }
    }

    #[test]
    fn noiseless_roundtrip_is_exact() {
        let res = beacon_roundtrip(&frame(), f64::INFINITY, RngStream::new(3, 0));
        assert_eq!(res.ber, 0.0);
        assert_eq!(res.decoded, Some(frame()));
        assert_eq!(res.reported_rx_power_dbm, Some(-7.42));
    }

    #[test]
    fn all_zero_stream_is_frame_loss() {
        assert!(detect_frame(&vec![0u8; 400], 4).is_none());
    }

    #[test]
    fn frame_length() {
        assert_eq!(frame().bits().len(), BeaconFrame::bit_len(4));
    }

    #[test]
    fn ber_at_zero_db() {
        assert!((ook_ber(0.0) - 0.308_537_5).abs() < 1e-6);
    }

    #[test]
    fn preamble_tolerates_two_errors() {
        let mut bits = frame().bits();
        bits[GUARD_BITS] ^= 1;
        bits[GUARD_BITS + 5] ^= 1;
        let (start, f) = detect_frame(&bits, 4).unwrap();
        assert_eq!(start, GUARD_BITS);
        assert_eq!(f, frame());
    }
}
