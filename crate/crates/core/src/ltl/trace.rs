use std::io::{Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::LtlError;
use crate::domain::RngStream;

/// The shipped bad-connectivity trace (sporadic outages and loss bursts).
pub const BAD_CONNECTIVITY_CSV: &str = include_str!("../../data/traces/bad_connectivity.csv");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub t_s: f64,
    pub capacity_bps: f64,
    pub loss_prob: f64,
}

/// Piecewise-constant link conditions; each row holds until the next.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityTrace {
    points: Vec<TracePoint>,
}

impl CapacityTrace {
    pub fn new(points: Vec<TracePoint>) -> Result<Self, LtlError> {
        if points.is_empty() {
            return Err(LtlError::Trace("trace is empty".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if !(p.t_s.is_finite() && p.capacity_bps >= 0.0 && (0.0..=1.0).contains(&p.loss_prob)) {
                return Err(LtlError::Trace(format!("row {i}: invalid values {p:?}")));
            }
            if i > 0 && p.t_s <= points[i - 1].t_s {
                return Err(LtlError::Trace(format!("row {i}: time {} not increasing", p.t_s)));
            }
        }
        Ok(Self { points })
    }

    /// Constant conditions for `duration_s`.
    pub fn constant(duration_s: f64, capacity_bps: f64, loss_prob: f64) -> Self {
        Self::new(vec![
            TracePoint { t_s: 0.0, capacity_bps, loss_prob },
            TracePoint { t_s: duration_s, capacity_bps, loss_prob },
        ])
        .expect("valid constant trace")
    }

    pub fn points(&self) -> &[TracePoint] {
        &self.points
    }

    pub fn start_s(&self) -> f64 {
        self.points[0].t_s
    }

    /// Time of the last row; the session ends there.
    pub fn end_s(&self) -> f64 {
        self.points[self.points.len() - 1].t_s
    }

    pub fn at(&self, t_s: f64) -> &TracePoint {
        let i = self.points.partition_point(|p| p.t_s <= t_s);
        &self.points[i.saturating_sub(1)]
    }

    pub fn from_csv(r: impl Read) -> Result<Self, LtlError> {
        let mut rd = csv::Reader::from_reader(r);
        let headers = rd.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["t_s", "capacity_bps", "loss_prob"] {
            return Err(LtlError::Trace(format!("unexpected header {headers:?}")));
        }
        let mut points = Vec::new();
        for row in rd.deserialize() {
            points.push(row?);
        }
        Self::new(points)
    }

    pub fn write_csv(&self, w: impl Write) -> Result<(), LtlError> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t_s", "capacity_bps", "loss_prob"])?;
        for p in &self.points {
            wr.write_record([format!("{:.3}", p.t_s), format!("{:.0}", p.capacity_bps), format!("{:.4}", p.loss_prob)])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn bad_connectivity() -> Self {
        Self::from_csv(BAD_CONNECTIVITY_CSV.as_bytes()).expect("shipped trace is valid")
    }

    /// Converts a `(distance_m, capacity_bps)` drive profile into a trace
    /// at constant speed, with a fixed residual loss on connected points
    /// and total loss where capacity is zero.
    pub fn from_capacity_profile(profile: &[(f64, f64)], speed_m_s: f64, residual_loss: f64) -> Result<Self, LtlError> {
        if !(speed_m_s > 0.0) {
            return Err(LtlError::Trace("speed must be positive".into()));
        }
        let d0 = profile.first().map(|p| p.0).unwrap_or(0.0);
        Self::new(
            profile
                .iter()
                .map(|&(d, c)| TracePoint {
                    t_s: (d - d0) / speed_m_s,
                    capacity_bps: c,
                    loss_prob: if c > 0.0 { residual_loss } else { 1.0 },
                })
                .collect(),
        )
    }
}

/// Generator behind the shipped bad-connectivity trace: ~110 s at 0.5 s
/// resolution with capacity wander, loss bursts and short outages.
pub fn synth_bad_connectivity(rng: RngStream) -> CapacityTrace {
    let mut r = rng.rng();
    let dt = 0.5;
    let n = 221;
    let mut cap: f64 = 55e6;
    let mut outage_left = 0u32;
    let mut burst_left = 0u32;
    let mut burst_loss = 0.0;
    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        cap = (cap + r.random_range(-4e6..4e6) + 0.1 * (55e6 - cap)).clamp(32e6, 80e6);
        if outage_left == 0 && burst_left == 0 {
            let u: f64 = r.random();
            if u < 0.035 {
                outage_left = r.random_range(2..=7);
            } else if u < 0.12 {
                burst_left = r.random_range(3..=10);
                burst_loss = r.random_range(0.08..0.22);
            }
        }
        let (c, loss) = if outage_left > 0 {
            outage_left -= 1;
            (0.0, 1.0)
        } else if burst_left > 0 {
            burst_left -= 1;
            (cap, burst_loss)
        } else {
            (cap, r.random_range(0.0..0.04))
        };
        points.push(TracePoint {
            t_s: i as f64 * dt,
            capacity_bps: c.round(),
            loss_prob: (loss * 1e4_f64).round() / 1e4,
        });
    }
    CapacityTrace::new(points).expect("generated trace is valid")
}
