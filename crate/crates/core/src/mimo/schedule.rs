use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{group_capacity, orthogonality, ChannelMatrix, CorrelationMode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RbPlan {
    pub n_rbs: usize,
    pub rb_bandwidth_hz: f64,
}

impl Default for RbPlan {
    fn default() -> Self {
        Self {
            n_rbs: 42,
            rb_bandwidth_hz: 540e3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulingPolicy {
    Greedy,
    ForceAll,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchedulerParams {
    pub threshold: f64,
    pub mode: CorrelationMode,
    pub tx_power_w: f64,
    /// Noise power per resource block, W.
    pub noise_w: f64,
    pub se_cap: f64,
}

impl Default for SchedulerParams {
    fn default() -> Self {
        Self {
            threshold: 0.25,
            mode: CorrelationMode::Amplitude,
            tx_power_w: 1.0,
            noise_w: 1.0,
            se_cap: 6.0,
        }
    }
}

/// The group scheduled on one resource block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbGroup {
    pub rb: usize,
    pub streams: Vec<usize>,
    pub sinr: Vec<f64>,
    pub rates_bps: Vec<f64>,
    pub capacity_bps: f64,
    /// Min and mean orthogonality; 1 for singleton groups.
    pub orthogonality_min: f64,
    pub orthogonality_mean: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub rbs: Vec<RbGroup>,
}

impl Schedule {
    pub fn max_group_size(&self) -> usize {
        self.rbs.iter().map(|g| g.streams.len()).max().unwrap_or(0)
    }

    /// RB count per group size.
    pub fn group_size_histogram(&self) -> BTreeMap<usize, usize> {
        let mut h = BTreeMap::new();
        for g in &self.rbs {
            *h.entry(g.streams.len()).or_insert(0) += 1;
        }
        h
    }
}

pub fn aggregate_capacity(schedule: &Schedule) -> f64 {
    schedule.rbs.iter().map(|g| g.capacity_bps).sum()
}

fn evaluate(h: &ChannelMatrix, group: &[usize], plan: &RbPlan, p: &SchedulerParams) -> Option<RbGroup> {
    let rate = group_capacity(h, group, plan.rb_bandwidth_hz, p.noise_w, p.tx_power_w, p.se_cap).ok()?;
    let (omin, omean) = if group.len() >= 2 {
        let o = orthogonality(h, group, p.mode).ok()?;
        (o.min, o.mean)
    } else {
        (1.0, 1.0)
    };
    Some(RbGroup {
        rb: 0,
        streams: group.to_vec(),
        sinr: rate.sinr,
        rates_bps: rate.rates_bps,
        capacity_bps: rate.total_bps,
        orthogonality_min: omin,
        orthogonality_mean: omean,
    })
}

fn empty(rb: usize) -> RbGroup {
    RbGroup {
        rb,
        streams: Vec::new(),
        sinr: Vec::new(),
        rates_bps: Vec::new(),
        capacity_bps: 0.0,
        orthogonality_min: 0.0,
        orthogonality_mean: 0.0,
    }
}

fn greedy(h: &ChannelMatrix, plan: &RbPlan, p: &SchedulerParams) -> Option<RbGroup> {
    let mut best: Option<RbGroup> = None;
    let mut group: Vec<usize> = Vec::new();
    loop {
        if group.len() >= h.antennas() {
            break;
        }
        let base = best.as_ref().map(|g| g.capacity_bps).unwrap_or(0.0);
        let mut pick: Option<RbGroup> = None;
        for s in 0..h.streams() {
            if group.contains(&s) {
                continue;
            }
            let mut cand = group.clone();
            cand.push(s);
            cand.sort_unstable();
            let Some(g) = evaluate(h, &cand, plan, p) else { continue };
            if cand.len() >= 2 && g.orthogonality_min < p.threshold {
                continue;
            }
            if g.capacity_bps > base && pick.as_ref().is_none_or(|b| g.capacity_bps > b.capacity_bps) {
                pick = Some(g);
            }
        }
        match pick {
            Some(g) => {
                group = g.streams.clone();
                best = Some(g);
            }
            None => break,
        }
    }
    // The all-stream group is always a candidate, so greedy never trails force_all.
    let all: Vec<usize> = (0..h.streams()).collect();
    if let Some(g) = evaluate(h, &all, plan, p) {
        if best.as_ref().is_none_or(|b| g.capacity_bps > b.capacity_bps) {
            best = Some(g);
        }
    }
    best
}

/// Assigns a stream group to every resource block. Channel matrix `rb` is
/// used for block `rb`, wrapping if fewer matrices than blocks are given.
pub fn schedule_rbs(
    channels: &[ChannelMatrix],
    plan: &RbPlan,
    policy: SchedulingPolicy,
    params: &SchedulerParams,
) -> Schedule {
    if channels.is_empty() {
        return Schedule::default();
    }
    let rbs = (0..plan.n_rbs)
        .map(|rb| {
            let h = &channels[rb % channels.len()];
            let g = match policy {
                SchedulingPolicy::Greedy => greedy(h, plan, params),
                SchedulingPolicy::ForceAll => {
                    let all: Vec<usize> = (0..h.streams()).collect();
                    evaluate(h, &all, plan, params)
                }
            };
            let mut g = g.unwrap_or_else(|| empty(rb));
            g.rb = rb;
            g
        })
        .collect();
    Schedule { rbs }
}

/// `rb,streams,capacity_bps,orthogonality_min,orthogonality_mean`, with
/// stream ids joined by `;`.
pub fn write_schedule_csv(w: impl Write, schedule: &Schedule) -> Result<(), csv::Error> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["rb", "streams", "capacity_bps", "orthogonality_min", "orthogonality_mean"])?;
    for g in &schedule.rbs {
        let streams: Vec<String> = g.streams.iter().map(|s| s.to_string()).collect();
        wr.write_record([
            g.rb.to_string(),
            streams.join(";"),
            format!("{:.1}", g.capacity_bps),
            format!("{:.6}", g.orthogonality_min),
            format!("{:.6}", g.orthogonality_mean),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// `set,group_size,rb_count` rows, one per set and observed size.
pub fn write_histogram_csv(w: impl Write, sets: &[(String, &Schedule)]) -> Result<(), csv::Error> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["set", "group_size", "rb_count"])?;
    for (name, s) in sets {
        for (size, count) in s.group_size_histogram() {
            wr.write_record([name.clone(), size.to_string(), count.to_string()])?;
        }
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn empty_schedule_is_zero() {
        assert_eq!(aggregate_capacity(&Schedule::default()), 0.0);
    }

    #[test]
    fn single_ue_orthogonal_chains_share_every_rb() {
        let c = |x: f64| Complex64::new(x, 0.0);
        let h = ChannelMatrix::from_rows(vec![vec![c(1.0), c(0.0)], vec![c(0.0), c(1.0)]]).unwrap();
        let p = SchedulerParams {
            tx_power_w: 10.0,
            ..Default::default()
        };
        let s = schedule_rbs(&[h], &RbPlan::default(), SchedulingPolicy::Greedy, &p);
        assert_eq!(s.rbs.len(), 42);
        assert!(s.rbs.iter().all(|g| g.streams == vec![0, 1]));
    }

    #[test]
    fn one_stream_at_two_bits() {
        let h = ChannelMatrix::from_rows(vec![vec![Complex64::new(1.0, 0.0)]]).unwrap();
        let p = SchedulerParams {
            tx_power_w: 3.0,
            ..Default::default()
        };
        let s = schedule_rbs(&[h], &RbPlan::default(), SchedulingPolicy::Greedy, &p);
        assert!((aggregate_capacity(&s) - 45.36e6).abs() < 1e-3);
    }
}
