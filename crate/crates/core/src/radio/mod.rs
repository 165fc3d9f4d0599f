//! RAN link budget: log-distance path loss with terrain blockage, Shannon
//! capacity per platform, drive-route capacity profiles, and coverage maps
//! interpolated by a discrete Laplace solver.

mod coverage;
mod ran;

pub use coverage::{fit_coverage_map, CoverageGrid, GridSpec};
pub use ran::{
    capacity_profile, path_loss_db, ran_capacity, route_from_profile, write_profile_csv,
    RanLink, RanLinkConfig, PARTIAL_BLOCKAGE_DB, REFERENCE_DISTANCE_M,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RadioError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("coverage map needs at least one sample inside the grid")]
    NoSamples,
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
