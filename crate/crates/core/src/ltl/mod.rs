//! Liquid transport: a systematic random linear fountain code over GF(256)
//! and a session driver comparing it with plain datagrams over lossy,
//! capacity-limited traces.

mod code;
pub mod gf256;
mod session;
mod trace;

pub use code::{
    decode_block, encode_block, encode_symbol, repair_coefficients, BlockDecoder, EncodedSymbol, SourceBlock,
    SymbolKind, MAX_K,
};
pub use session::{stream_session, write_fps_csv, QoEReport, SessionConfig, Transport};
pub use trace::{synth_bad_connectivity, CapacityTrace, TracePoint, BAD_CONNECTIVITY_CSV};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LtlError {
    #[error("need {0} more independent symbols")]
    NeedMore(usize),
    #[error("inconsistent symbols: {0}")]
    Inconsistent(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("trace: {0}")]
    Trace(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
