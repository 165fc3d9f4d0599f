use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{PacketJourney, StackConfig, StackError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Layer {
    Sdap,
    Pdcp,
    Rlc,
    Mac,
    Phy,
}

impl Layer {
    pub const ALL: [Layer; 5] = [Layer::Sdap, Layer::Pdcp, Layer::Rlc, Layer::Mac, Layer::Phy];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Layer::Sdap => "SDAP",
            Layer::Pdcp => "PDCP",
            Layer::Rlc => "RLC",
            Layer::Mac => "MAC",
            Layer::Phy => "PHY",
        }
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Layer {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Layer::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown layer {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Edge {
    Ingress,
    Egress,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LayerEvent {
    pub timestamp_ns: u64,
    pub layer: Layer,
    pub edge: Edge,
    pub packet_id: u64,
    pub segment_id: u32,
}

impl fmt::Display for LayerEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let edge = match self.edge {
            Edge::Ingress => "ingress",
            Edge::Egress => "egress",
        };
        write!(
            f,
            "{}.{:06} {} {} {} {}",
            self.timestamp_ns / 1_000_000,
            self.timestamp_ns % 1_000_000,
            self.layer,
            edge,
            self.packet_id,
            self.segment_id
        )
    }
}

fn parse_ms(s: &str) -> Result<u64, String> {
    let (whole, frac) = s.split_once('.').unwrap_or((s, ""));
    if frac.len() > 6 || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return Err(format!("bad timestamp {s:?}"));
    }
    let whole: u64 = whole.parse().map_err(|_| format!("bad timestamp {s:?}"))?;
    let frac: u64 = if frac.is_empty() { 0 } else { format!("{frac:0<6}").parse().unwrap() };
    Ok(whole * 1_000_000 + frac)
}

impl FromStr for LayerEvent {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let f: Vec<&str> = s.split_whitespace().collect();
        let [ts, layer, edge, packet, segment] = f[..] else {
            return Err(format!("expected 5 fields, found {}", f.len()));
        };
        Ok(LayerEvent {
            timestamp_ns: parse_ms(ts)?,
            layer: layer.parse()?,
            edge: match edge {
                "ingress" => Edge::Ingress,
                "egress" => Edge::Egress,
                _ => return Err(format!("unknown edge {edge:?}")),
            },
            packet_id: packet.parse().map_err(|_| format!("bad packet id {packet:?}"))?,
            segment_id: segment.parse().map_err(|_| format!("bad segment id {segment:?}"))?,
        })
    }
}

/// One event per line: `timestamp_ms layer edge packet_id segment_id`.
pub fn write_event_log(mut w: impl Write, events: &[LayerEvent]) -> std::io::Result<()> {
    for e in events {
        writeln!(w, "{e}")?;
    }
    Ok(())
}

/// Reads a log written by [`write_event_log`]. Blank lines and `#` comments
/// are skipped.
pub fn read_event_log(r: impl BufRead) -> Result<Vec<LayerEvent>, StackError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push(t.parse().map_err(|message| StackError::Parse { line: i + 1, message })?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    /// Complete journeys, ordered by packet id.
    pub journeys: Vec<PacketJourney>,
    pub incomplete: Vec<u64>,
    pub rejected: Vec<String>,
}

#[derive(Default)]
struct Pair {
    ingress: Option<u64>,
    egress: Option<u64>,
}

/// Rebuilds journeys from an unordered event log. RLC is logged per
/// segment; MAC and PHY only for the segment that completes the packet.
/// The transmission time and HARQ retry count come from `config`.
pub fn reconstruct_journeys(events: &[LayerEvent], config: &StackConfig) -> Reconstruction {
    let mut pairs: BTreeMap<(u64, Layer, u32), Pair> = BTreeMap::new();
    for e in events {
        let p = pairs.entry((e.packet_id, e.layer, e.segment_id)).or_default();
        let slot = match e.edge {
            Edge::Ingress => &mut p.ingress,
            Edge::Egress => &mut p.egress,
        };
        slot.get_or_insert(e.timestamp_ns);
    }

    let slot = config.slot_ns();
    let harq = config.harq_rtt_slots as u64 * slot;
    let mut out = Reconstruction::default();
    let mut packets: BTreeMap<u64, Vec<((Layer, u32), Option<(u64, u64)>)>> = BTreeMap::new();
    for ((pkt, layer, seg), p) in pairs {
        let span = match (p.ingress, p.egress) {
            (Some(i), Some(e)) if e >= i => Some((i, e)),
            (Some(i), Some(e)) => {
                out.rejected.push(format!(
                    "packet {pkt} {layer} segment {seg}: egress {e} ns precedes ingress {i} ns"
                ));
                None
            }
            _ => None,
        };
        packets.entry(pkt).or_default().push(((layer, seg), span));
    }

    'packet: for (pkt, spans) in packets {
        if spans.iter().any(|(_, s)| s.is_none()) {
            out.incomplete.push(pkt);
            continue;
        }
        let mut residence = [0u64; 5];
        let mut start = None;
        let mut rlc_segments = 0u32;
        for layer in Layer::ALL {
            let segs: Vec<(u32, (u64, u64))> = spans
                .iter()
                .filter(|((l, _), _)| *l == layer)
                .map(|((_, s), span)| (*s, span.unwrap()))
                .collect();
            if segs.is_empty() {
                out.incomplete.push(pkt);
                continue 'packet;
            }
            let lo = segs.iter().map(|(_, (i, _))| *i).min().unwrap();
            let hi = segs.iter().map(|(_, (_, e))| *e).max().unwrap();
            residence[layer.index()] = hi - lo;
            if layer == Layer::Sdap {
                start = Some(lo);
            }
            if layer == Layer::Rlc {
                rlc_segments = segs.len() as u32;
                if segs.iter().map(|(s, _)| *s).max() != Some(rlc_segments - 1) {
                    out.incomplete.push(pkt);
                    continue 'packet;
                }
            }
        }
        out.journeys.push(PacketJourney {
            packet_id: pkt,
            start_ns: start.unwrap_or(0),
            residence_ns: residence,
            transmission_ns: slot,
            retransmissions: if harq > 0 { (residence[Layer::Mac.index()] / harq) as u32 } else { 0 },
            segments: rlc_segments,
        });
    }
    out
}
