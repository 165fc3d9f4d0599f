use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Edge, Layer, LayerEvent, SinrProfile, StackConfig, StackError};
use crate::domain::RngStream;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacketJourney {
    pub packet_id: u64,
    pub start_ns: u64,
    /// Residence per layer, indexed by [`Layer::index`].
    pub residence_ns: [u64; 5],
    /// Over-the-air time after PHY egress.
    pub transmission_ns: u64,
    pub retransmissions: u32,
    pub segments: u32,
}

impl PacketJourney {
    pub fn total_ns(&self) -> u64 {
        self.residence_ns.iter().sum::<u64>() + self.transmission_ns
    }

    pub fn total_ms(&self) -> f64 {
        self.total_ns() as f64 / 1e6
    }

    pub fn residence_ms(&self, layer: Layer) -> f64 {
        self.residence_ns[layer.index()] as f64 / 1e6
    }
}

/// Transport block size in bytes for one downlink slot at MCS `mcs`.
pub fn tbs_bytes(config: &StackConfig, mcs: usize) -> Result<u64, StackError> {
    let entry = config.mcs_table.get(mcs).ok_or(StackError::UnknownMcs(mcs))?;
    if !(entry.efficiency > 0.0) {
        return Err(StackError::ZeroEfficiency { index: mcs, efficiency: entry.efficiency });
    }
    let prb = config.prb_count()? as f64;
    let bits = prb * 12.0 * config.dl_symbols as f64 * entry.efficiency;
    Ok((bits / 8.0).floor() as u64)
}

fn ms_to_ns(ms: f64) -> u64 {
    (ms * 1e6).round().max(0.0) as u64
}

fn jittered(base_ms: f64, jitter: f64, rng: &mut impl Rng) -> u64 {
    let f = if jitter > 0.0 { rng.random_range(-jitter..=jitter) } else { 0.0 };
    ms_to_ns(base_ms * (1.0 + f))
}

/// Pushes one packet of `size` bytes through the stack starting at
/// `start_ns`. All segments enter RLC together and leave one per slot;
/// only the final segment's HARQ retries delay completion.
pub fn simulate_packet(
    size: u64,
    sinr_db: f64,
    config: &StackConfig,
    packet_id: u64,
    start_ns: u64,
    rng: &mut impl Rng,
) -> Result<(PacketJourney, Vec<LayerEvent>), StackError> {
    if size == 0 {
        return Err(StackError::Config("packet size must be positive".into()));
    }
    let mcs = config.select_mcs(sinr_db);
    let tbs = tbs_bytes(config, mcs)?;
    let segments = size.div_ceil(tbs) as u32;
    let slot = config.slot_ns();
    let b = &config.base;

    let margin = sinr_db - config.mcs_table[mcs].min_sinr_db;
    let bler = config.bler.bler(margin);
    let mut retx = 0;
    while retx < config.bler.max_retx && rng.random::<f64>() < bler {
        retx += 1;
    }

    let sdap = jittered(b.sdap_ms, b.jitter, rng);
    let pdcp = jittered(b.pdcp_ms, b.jitter, rng);
    let rlc_base = jittered(b.rlc_ms, b.jitter, rng);
    let per_seg = ms_to_ns(b.rlc_per_segment_ms);
    let mac = jittered(b.mac_ms, b.jitter, rng) + retx as u64 * config.harq_rtt_slots as u64 * slot;
    let phy = jittered(b.phy_ms, b.jitter, rng);

    let mut events = Vec::with_capacity(8 + 2 * segments as usize);
    let mut ev = |t, layer, edge, seg| {
        events.push(LayerEvent { timestamp_ns: t, layer, edge, packet_id, segment_id: seg })
    };
    let mut t = start_ns;
    ev(t, Layer::Sdap, Edge::Ingress, 0);
    t += sdap;
    ev(t, Layer::Sdap, Edge::Egress, 0);
    ev(t, Layer::Pdcp, Edge::Ingress, 0);
    t += pdcp;
    ev(t, Layer::Pdcp, Edge::Egress, 0);
    let rlc_in = t;
    for s in 0..segments {
        ev(rlc_in, Layer::Rlc, Edge::Ingress, s);
        let out = rlc_in + rlc_base + per_seg * (s as u64 + 1) + slot * s as u64;
        ev(out, Layer::Rlc, Edge::Egress, s);
        t = out;
    }
    let rlc = t - rlc_in;
    let last = segments - 1;
    ev(t, Layer::Mac, Edge::Ingress, last);
    t += mac;
    ev(t, Layer::Mac, Edge::Egress, last);
    ev(t, Layer::Phy, Edge::Ingress, last);
    t += phy;
    ev(t, Layer::Phy, Edge::Egress, last);

    let journey = PacketJourney {
        packet_id,
        start_ns,
        residence_ns: [sdap, pdcp, rlc, mac, phy],
        transmission_ns: slot,
        retransmissions: retx,
        segments,
    };
    Ok((journey, events))
}

/// `count` packets of `size` bytes, one every `spacing_ms`, each with an
/// independent SINR draw and its own random substream.
pub fn simulate_traffic(
    count: usize,
    size: u64,
    spacing_ms: f64,
    profile: &SinrProfile,
    config: &StackConfig,
    rng: RngStream,
) -> Result<(Vec<PacketJourney>, Vec<LayerEvent>), StackError> {
    config.validate()?;
    let mut journeys = Vec::with_capacity(count);
    let mut events = Vec::new();
    for i in 0..count {
        let mut r = rng.substream(i as u64).rng();
        let sinr = profile.sample(&mut r);
        let (j, ev) = simulate_packet(size, sinr, config, i as u64, ms_to_ns(i as f64 * spacing_ms), &mut r)?;
        journeys.push(j);
        events.extend(ev);
    }
    Ok((journeys, events))
}
