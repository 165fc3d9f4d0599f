use std::io::Write;

use serde::{Deserialize, Serialize};

use super::code::{repair_coefficients, BlockDecoder, EncodedSymbol, SymbolKind};
use super::{CapacityTrace, LtlError};
use crate::domain::splitmix64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Transport {
    /// Source symbols once, no recovery.
    Udp,
    /// Source plus `ceil(K * overhead)` repair symbols per frame.
    Ltl { overhead: f64 },
}

impl Transport {
    pub fn name(&self) -> &'static str {
        match self {
            Transport::Udp => "udp",
            Transport::Ltl { .. } => "ltl",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    pub fps: f64,
    pub bitrate_bps: f64,
    pub symbol_size: usize,
    pub latency_budget_ms: f64,
    pub propagation_ms: f64,
    /// Sender pacing rate for the symbols of one frame.
    pub line_rate_bps: f64,
    /// Share of a frame's source data that suffices to show it (with
    /// concealment of the rest).
    pub display_fraction: f64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            fps: 30.0,
            bitrate_bps: 30e6,
            symbol_size: 1250,
            latency_budget_ms: 200.0,
            propagation_ms: 10.0,
            line_rate_bps: 200e6,
            display_fraction: 0.9,
        }
    }
}

impl SessionConfig {
    pub fn frame_bytes(&self) -> usize {
        (self.bitrate_bps / self.fps / 8.0).round() as usize
    }

    pub fn k(&self) -> usize {
        self.frame_bytes().div_ceil(self.symbol_size)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QoEReport {
    pub transport: String,
    pub frames: usize,
    pub displayed: usize,
    pub intact: usize,
    /// Frames shown in each one-second bucket of the session.
    pub fps_series: Vec<f64>,
    pub median_fps: f64,
    pub stall_ratio: f64,
    pub frame_intact_ratio: f64,
    pub delivered_bitrate_bps: f64,
}

impl QoEReport {
    /// `(fps, cumulative fraction)` over the per-second buckets.
    pub fn fps_cdf(&self) -> Vec<(f64, f64)> {
        let mut v = self.fps_series.clone();
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        v.into_iter().enumerate().map(|(i, x)| (x, (i + 1) as f64 / n)).collect()
    }
}

fn uniform(seed: u64, frame: u64, symbol: u64) -> f64 {
    let h = splitmix64(seed ^ splitmix64(frame.wrapping_mul(0x1_0000_0001) ^ symbol));
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    match s.len() {
        0 => 0.0,
        n if n % 2 == 1 => s[n / 2],
        n => 0.5 * (s[n / 2 - 1] + s[n / 2]),
    }
}

/// Streams a 30 fps source over `trace`. Each frame is one block whose
/// symbols leave at line rate; a symbol survives with probability
/// `(1 - loss) * min(1, capacity / offered)`, drawn from a counter hash of
/// `(seed, frame, symbol)` so both transports see the same channel.
///
/// Frame `i` is due at `t_i + budget`. It is shown at its deadline if
/// displayable by then, or late (the receiver stalls) if it becomes
/// displayable before the next frame is due; otherwise it is skipped and
/// the whole frame interval counts as stalled.
pub fn stream_session(
    trace: &CapacityTrace,
    cfg: &SessionConfig,
    transport: Transport,
    seed: u64,
) -> Result<QoEReport, LtlError> {
    if !(cfg.fps > 0.0 && cfg.bitrate_bps > 0.0 && cfg.symbol_size > 0) {
        return Err(LtlError::Invalid("fps, bitrate and symbol size must be positive".into()));
    }
    let k = cfg.k();
    if k > super::code::MAX_K as usize {
        return Err(LtlError::Invalid(format!("K = {k} exceeds {}", super::code::MAX_K)));
    }
    let n = match transport {
        Transport::Udp => k,
        Transport::Ltl { overhead } if overhead >= 0.0 => k + (k as f64 * overhead).ceil() as usize,
        Transport::Ltl { overhead } => return Err(LtlError::Invalid(format!("negative overhead {overhead}"))),
    };
    let interval = 1.0 / cfg.fps;
    let budget = cfg.latency_budget_ms / 1e3;
    let t0 = trace.start_s();
    let frames = (((trace.end_s() - t0 - budget) * cfg.fps).floor().max(0.0)) as usize;
    if frames == 0 {
        return Err(LtlError::Trace("trace shorter than the latency budget".into()));
    }
    let sym_bits = cfg.symbol_size as f64 * 8.0;
    let offered = n as f64 * sym_bits * cfg.fps;
    let pace = sym_bits / cfg.line_rate_bps;
    let need_display = (cfg.display_fraction * k as f64).ceil() as usize;
    let unit = |i: usize| {
        let mut c = vec![0u8; k];
        c[i] = 1;
        c
    };

    let session_s = frames as f64 * interval;
    let mut fps_series = vec![0.0; session_s.ceil() as usize];
    let (mut displayed, mut intact, mut stalled) = (0usize, 0usize, 0.0f64);
    for f in 0..frames {
        let t_f = t0 + f as f64 * interval;
        let due = t_f + budget;
        let next_due = due + interval;
        let mut dec = BlockDecoder::new(f as u64, k, 0);
        let (mut shown_at, mut full_at) = (None, None);
        for j in 0..n {
            let depart = t_f + j as f64 * pace;
            let p = trace.at(depart);
            let deliver = (1.0 - p.loss_prob) * (p.capacity_bps / offered).min(1.0);
            if uniform(seed, f as u64, j as u64) >= deliver {
                continue;
            }
            let arrive = depart + cfg.propagation_ms / 1e3;
            let sym = if j < k {
                EncodedSymbol { block_id: f as u64, symbol_id: j as u32, kind: SymbolKind::Systematic, coefficients: unit(j), data: Vec::new() }
            } else {
                EncodedSymbol {
                    block_id: f as u64,
                    symbol_id: j as u32,
                    kind: SymbolKind::Repair,
                    coefficients: repair_coefficients(seed, f as u64, j as u32, k),
                    data: Vec::new(),
                }
            };
            dec.push(&sym)?;
            let full = match transport {
                Transport::Udp => dec.source_received() == k,
                Transport::Ltl { .. } => dec.is_decodable(),
            };
            if shown_at.is_none() && (full || dec.source_received() >= need_display) {
                shown_at = Some(arrive);
            }
            if full {
                full_at = Some(arrive);
                break;
            }
        }
        match shown_at {
            Some(a) if a < next_due => {
                let show = a.max(due);
                stalled += show - due;
                displayed += 1;
                if full_at.is_some_and(|t| t <= show) {
                    intact += 1;
                }
                let bucket = ((show - (t0 + budget)) / 1.0).floor() as usize;
                if let Some(b) = fps_series.get_mut(bucket) {
                    *b += 1.0;
                }
            }
            _ => stalled += interval,
        }
    }
    Ok(QoEReport {
        transport: transport.name().to_string(),
        frames,
        displayed,
        intact,
        median_fps: median(&fps_series),
        fps_series,
        stall_ratio: (stalled / session_s).clamp(0.0, 1.0),
        frame_intact_ratio: intact as f64 / frames as f64,
        delivered_bitrate_bps: intact as f64 * cfg.frame_bytes() as f64 * 8.0 / session_s,
    })
}

/// `second,<transport>...` per-second FPS columns.
pub fn write_fps_csv(w: impl Write, reports: &[QoEReport]) -> Result<(), LtlError> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["second".to_string()];
    header.extend(reports.iter().map(|r| r.transport.clone()));
    wr.write_record(&header)?;
    let len = reports.iter().map(|r| r.fps_series.len()).max().unwrap_or(0);
    for s in 0..len {
        let mut row = vec![s.to_string()];
        row.extend(reports.iter().map(|r| r.fps_series.get(s).map(|v| format!("{v}")).unwrap_or_default()));
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_link_is_perfect() {
        let t = CapacityTrace::constant(10.0, 1e9, 0.0);
        for tr in [Transport::Udp, Transport::Ltl { overhead: 0.2 }] {
            let r = stream_session(&t, &SessionConfig::default(), tr, 1).unwrap();
            assert_eq!(r.stall_ratio, 0.0);
            assert_eq!(r.frame_intact_ratio, 1.0);
            assert_eq!(r.median_fps, 30.0);
        }
    }

    #[test]
    fn default_frame_is_hundred_symbols() {
        let c = SessionConfig::default();
        assert_eq!(c.frame_bytes(), 125_000);
        assert_eq!(c.k(), 100);
    }

    #[test]
    fn outage_stalls_both() {
        let t = CapacityTrace::constant(5.0, 0.0, 0.0);
        let r = stream_session(&t, &SessionConfig::default(), Transport::Ltl { overhead: 0.5 }, 1).unwrap();
        assert_eq!(r.displayed, 0);
        assert!((r.stall_ratio - 1.0).abs() < 1e-12);
    }
}
