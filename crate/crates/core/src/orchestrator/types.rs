use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A device (platform instance) at a site.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ResourceId {
    pub site: String,
    pub device: String,
}

impl ResourceId {
    pub fn new(site: impl Into<String>, device: impl Into<String>) -> Self {
        Self { site: site.into(), device: device.into() }
    }
}

impl fmt::Display for ResourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.site, self.device)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumDecl {
    pub freq_low_hz: f64,
    pub freq_high_hz: f64,
    pub max_power_dbm: f64,
}

impl SpectrumDecl {
    pub fn overlaps(&self, low_hz: f64, high_hz: f64) -> bool {
        self.freq_low_hz < high_hz && low_hz < self.freq_high_hz
    }

    pub fn contains(&self, low_hz: f64, high_hz: f64) -> bool {
        low_hz >= self.freq_low_hz && high_hz <= self.freq_high_hz
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaseRequest {
    pub requester: String,
    pub resources: BTreeSet<ResourceId>,
    pub start_s: f64,
    pub end_s: f64,
    pub spectrum: Vec<SpectrumDecl>,
}

impl LeaseRequest {
    pub fn overlaps_window(&self, other: &LeaseRequest) -> bool {
        self.start_s < other.end_s && other.start_s < self.end_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LeaseState {
    Pending,
    Active,
    Expired,
    Revoked,
}

impl LeaseState {
    pub fn is_live(self) -> bool {
        matches!(self, LeaseState::Pending | LeaseState::Active)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lease {
    pub id: u64,
    pub request: LeaseRequest,
    pub state: LeaseState,
    pub granted_at_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revoked_at_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Conflict {
    Resource { blocking_lease: u64, resource: ResourceId },
    Spectrum { blocking_lease: u64, freq_low_hz: f64, freq_high_hz: f64, site_a: String, site_b: String, distance_m: f64 },
}

impl Conflict {
    pub fn blocking_lease(&self) -> u64 {
        match self {
            Conflict::Resource { blocking_lease, .. } | Conflict::Spectrum { blocking_lease, .. } => *blocking_lease,
        }
    }
}

impl fmt::Display for Conflict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Conflict::Resource { blocking_lease, resource } => {
                write!(f, "resource {resource} held by lease {blocking_lease}")
            }
            Conflict::Spectrum { blocking_lease, freq_low_hz, freq_high_hz, site_a, site_b, distance_m } => write!(
                f,
                "spectrum {:.3}-{:.3} MHz overlaps lease {blocking_lease} ({site_a} to {site_b}, {distance_m:.0} m)",
                freq_low_hz / 1e6,
                freq_high_hz / 1e6
            ),
        }
    }
}

/// What an experiment actually radiates during `[from_s, to_s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmissionPhase {
    pub resource: ResourceId,
    pub from_s: f64,
    pub to_s: f64,
    pub freq_low_hz: f64,
    pub freq_high_hz: f64,
    pub power_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub lease_id: u64,
    pub image_bytes: u64,
    pub workload: String,
    #[serde(default)]
    pub emissions: Vec<EmissionPhase>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpState {
    Created,
    Fetching,
    Starting,
    Running,
    Stopped,
    Revoked,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifecycleEvent {
    pub time_s: f64,
    pub state: ExpState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub id: u64,
    pub spec: ExperimentSpec,
    pub lifecycle: Vec<LifecycleEvent>,
}

impl Experiment {
    /// State at sim-time `t`: the last lifecycle event at or before `t`.
    pub fn state_at(&self, t: f64) -> ExpState {
        self.lifecycle
            .iter()
            .take_while(|e| e.time_s <= t)
            .last()
            .map(|e| e.state)
            .unwrap_or(ExpState::Created)
    }

    pub fn launch_time_s(&self) -> f64 {
        let t0 = self.lifecycle.first().map(|e| e.time_s).unwrap_or(0.0);
        self.lifecycle
            .iter()
            .find(|e| e.state == ExpState::Running)
            .map(|e| e.time_s - t0)
            .unwrap_or(f64::NAN)
    }

    /// Share of launch time spent fetching the image.
    pub fn fetch_share(&self) -> f64 {
        let at = |s| self.lifecycle.iter().find(|e| e.state == s).map(|e| e.time_s);
        match (at(ExpState::Fetching), at(ExpState::Starting), at(ExpState::Running)) {
            (Some(f), Some(s), Some(r)) if r > f => (s - f) / (r - f),
            _ => f64::NAN,
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self.lifecycle.last().map(|e| e.state), Some(ExpState::Stopped | ExpState::Revoked))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuardKind {
    OutOfBand,
    OverPower,
    Unleased,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DenyReason {
    OutOfBand,
    OverPower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuardEvent {
    pub time_s: f64,
    pub slot: u64,
    pub kind: GuardKind,
    pub experiment: Option<u64>,
    pub lease: Option<u64>,
    pub resource: ResourceId,
    pub freq_low_hz: f64,
    pub freq_high_hz: f64,
    pub power_dbm: f64,
}
