//! MU-MIMO user grouping: channel matrices, the orthogonality metric (one
//! minus the multiple correlation coefficient), zero-forcing group capacity,
//! and per-resource-block greedy scheduling.

mod channel;
mod linalg;
mod metric;
mod schedule;
mod sets;

pub use channel::{synthesize_channels, ChannelMatrix, MimoSet, UeSpec};
pub use metric::{group_capacity, orthogonality, CorrelationMode, GroupRate, Orthogonality};
pub use schedule::{
    aggregate_capacity, schedule_rbs, write_histogram_csv, write_schedule_csv, RbGroup, RbPlan,
    Schedule, SchedulerParams, SchedulingPolicy,
};
pub use sets::FieldLayout;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MimoError {
    #[error("group needs at least two streams")]
    GroupTooSmall,
    #[error("stream {0} has a zero channel vector")]
    ZeroVector(usize),
    #[error("stream {0} out of range")]
    UnknownStream(usize),
    #[error("group of {streams} streams is not schedulable on {antennas} antennas")]
    UnschedulableGroup { streams: usize, antennas: usize },
    #[error("invalid input: {0}")]
    Invalid(String),
}
