//! Shared domain types: platform catalog, sites and topology, terrain
//! profiles, and deterministic random streams.

mod catalog;
mod rng;
mod terrain;
mod topology;

pub use catalog::{
    PlatformCatalog, PlatformKind, PlatformSpec, Propagation, XhaulRadio, DEFAULT_CATALOG,
};
pub use rng::{splitmix64, RngStream};
pub use terrain::{Blockage, TerrainProfile, TerrainSample, TerrainSource};
pub use topology::{
    distance_and_profile, CandidateLink, Site, SiteRole, Topology, DEFAULT_TOPOLOGY,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("{source_name}: parse error: {message}")]
    Parse { source_name: String, message: String },

    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("duplicate platform id '{0}'")]
    DuplicatePlatform(String),

    #[error("platform '{platform}': field `{field}` {reason}")]
    Invariant {
        platform: String,
        field: String,
        reason: String,
    },

    #[error("{}unknown platform '{platform}'", site.as_ref().map(|s| format!("site '{s}': ")).unwrap_or_default())]
    UnknownPlatform {
        site: Option<String>,
        platform: String,
    },

    #[error("duplicate site id '{0}'")]
    DuplicateSite(String),

    #[error("unknown site '{0}'")]
    UnknownSite(String),

    #[error("site '{0}': negative coordinate in a non-negative frame")]
    NegativeCoordinate(String),

    #[error("invalid terrain profile: {0}")]
    Terrain(String),

    #[error("link '{link}': {reason}")]
    Link { link: String, reason: String },
}

impl DomainError {
    pub(crate) fn with_source_name(self, name: &str) -> Self {
        match self {
            DomainError::Parse { message, .. } => DomainError::Parse {
                source_name: name.to_string(),
                message,
            },
            other => other,
        }
    }
}
