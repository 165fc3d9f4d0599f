//! Long-haul microwave and mmWave links: rain attenuation, link budget,
//! adaptive modulation, and widest-path routing over the x-haul mesh.

mod link;
mod mesh;
mod rain;

pub use link::{
    adapt_mcs, write_link_series, xhaul_link_state, LinkState, Modulation, ResolvedLink,
    XhaulLinkConfig,
};
pub use mesh::{build_mesh, route_flows, FlowResult, MeshDemand, MeshLink, RoutingPolicy};
pub use rain::{rain_attenuation_db, RainRow, RainTable};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum XhaulError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid demand: {0}")]
    Demand(String),
    #[error(transparent)]
    Domain(#[from] crate::domain::DomainError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
