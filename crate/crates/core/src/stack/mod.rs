//! Per-packet latency through an SDAP/PDCP/RLC/MAC/PHY stack.
//!
//! [`simulate_packet`] produces both a ground-truth [`PacketJourney`] and the
//! layer boundary events a tracing tool would log. [`reconstruct_journeys`]
//! rebuilds journeys from such a log, so simulated and external traces go
//! through the same analysis ([`delay_cdf`], [`layer_contributions`]).
//!
//! Timestamps are integer nanoseconds; the text log prints milliseconds with
//! six decimals, so a write/read cycle is lossless.

mod analysis;
mod config;
mod events;
mod sim;

pub use analysis::{delay_cdf, layer_contributions, DelayCdf, LayerStat};
pub use config::{BlerModel, LayerBase, McsEntry, SinrProfile, StackConfig};
pub use events::{read_event_log, reconstruct_journeys, write_event_log, Edge, Layer, LayerEvent, Reconstruction};
pub use sim::{simulate_packet, simulate_traffic, tbs_bytes, PacketJourney};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum StackError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("MCS {index} has non-positive efficiency {efficiency}")]
    ZeroEfficiency { index: usize, efficiency: f64 },
    #[error("unknown MCS index {0}")]
    UnknownMcs(usize),
    #[error("no complete journeys to analyze")]
    Empty,
    #[error("need at least {need} complete journeys, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("event log line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
