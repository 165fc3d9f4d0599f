//! Platform catalog: one entry per radio platform (RAN or x-haul), loaded from
//! a human-editable TOML document.
//!
//! ```toml
//! [[platform]]
//! id = "AraHaul-micro"
//! kind = "xhaul"
//! freq_low_hz = 10.6e9
//! freq_high_hz = 11.5e9
//! max_bandwidth_hz = 100e6
//! max_capacity_bps = 1e9
//! nominal_range_m = 20000.0
//! max_tx_power_w = 1.0
//! spectral_efficiency_cap = 9.25
//! antenna_gain_dbi = 33.6
//! beamwidth_deg = 3.2
//!
//! [platform.xhaul]
//! noise_figure_db = 2.5
//! ...
//! ```
//!
//! RAN entries carry a `[platform.propagation]` table with the log-distance
//! calibration constants; microwave/mmWave x-haul entries carry a
//! `[platform.xhaul]` radio table.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DomainError;

/// The catalog shipped with the crate.
pub const DEFAULT_CATALOG: &str = include_str!("../../data/catalog.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlatformKind {
    Ran,
    Xhaul,
}

/// Log-distance propagation constants for a RAN platform. The reference loss
/// is an effective value at 100 m that folds in array gain and cabling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Propagation {
    pub ref_loss_db: f64,
    pub exponent: f64,
    pub noise_figure_db: f64,
    #[serde(default = "default_demod_threshold")]
    pub demod_threshold_db: f64,
}

fn default_demod_threshold() -> f64 {
    -5.0
}

/// Radio parameters of a microwave or mmWave x-haul platform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XhaulRadio {
    pub noise_figure_db: f64,
    /// Information bits per modulation bit per Hz (symbol rate and FEC).
    pub coding_efficiency: f64,
    /// Achieved / theoretical throughput.
    pub overhead_factor: f64,
    /// Gap to the Shannon SNR that a modulation needs to hold.
    pub implementation_gap_db: f64,
    /// Transmit power used when a link does not specify one.
    pub default_tx_power_dbm: f64,
    pub modulations: Vec<String>,
    pub channel_bandwidths_hz: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformSpec {
    pub id: String,
    pub kind: PlatformKind,
    pub freq_low_hz: f64,
    pub freq_high_hz: f64,
    pub max_bandwidth_hz: f64,
    pub max_capacity_bps: f64,
    pub nominal_range_m: f64,
    pub max_tx_power_w: f64,
    pub spectral_efficiency_cap: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub antenna_gain_dbi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beamwidth_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub propagation: Option<Propagation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xhaul: Option<XhaulRadio>,
}

impl PlatformSpec {
    pub fn center_freq_hz(&self) -> f64 {
        0.5 * (self.freq_low_hz + self.freq_high_hz)
    }

    pub fn contains_freq(&self, low_hz: f64, high_hz: f64) -> bool {
        low_hz >= self.freq_low_hz && high_hz <= self.freq_high_hz && low_hz < high_hz
    }

    fn validate(&self) -> Result<(), DomainError> {
        let bad = |field: &str, why: &str| DomainError::Invariant {
            platform: self.id.clone(),
            field: field.to_string(),
            reason: why.to_string(),
        };
        if self.id.trim().is_empty() {
            return Err(bad("id", "must be non-empty"));
        }
        if !(self.freq_low_hz < self.freq_high_hz) {
            return Err(bad("freq_low_hz", "must be below freq_high_hz"));
        }
        if !(self.max_capacity_bps > 0.0) {
            return Err(bad("max_capacity_bps", "must be positive"));
        }
        if !(self.nominal_range_m > 0.0) {
            return Err(bad("nominal_range_m", "must be positive"));
        }
        if !(self.max_tx_power_w > 0.0) {
            return Err(bad("max_tx_power_w", "must be positive"));
        }
        if !(self.max_bandwidth_hz > 0.0) {
            return Err(bad("max_bandwidth_hz", "must be positive"));
        }
        if !(self.spectral_efficiency_cap > 0.0) {
            return Err(bad("spectral_efficiency_cap", "must be positive"));
        }
        if self.kind == PlatformKind::Ran && self.propagation.is_none() {
            return Err(bad("propagation", "required for ran platforms"));
        }
        if let Some(x) = &self.xhaul {
            if x.modulations.is_empty() {
                return Err(bad("xhaul.modulations", "must list at least one modulation"));
            }
            if x.channel_bandwidths_hz.iter().any(|b| *b <= 0.0 || *b > self.max_bandwidth_hz) {
                return Err(bad("xhaul.channel_bandwidths_hz", "entries must lie in (0, max_bandwidth_hz]"));
            }
            if !(x.overhead_factor > 0.0 && x.overhead_factor <= 1.0) {
                return Err(bad("xhaul.overhead_factor", "must lie in (0, 1]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CatalogDoc {
    platform: Vec<PlatformSpec>,
}

/// Platforms keyed by id. Iteration order is sorted by id.
#[derive(Debug, Clone, PartialEq)]
pub struct PlatformCatalog {
    platforms: BTreeMap<String, PlatformSpec>,
}

impl PlatformCatalog {
    pub fn from_toml_str(text: &str) -> Result<Self, DomainError> {
        if text.trim().is_empty() {
            return Err(DomainError::Parse {
                source_name: "catalog".into(),
                message: "empty document: expected at least one [[platform]] table".into(),
            });
        }
        let doc: CatalogDoc = toml::from_str(text).map_err(|e| DomainError::Parse {
            source_name: "catalog".into(),
            message: e.to_string(),
        })?;
        let mut platforms = BTreeMap::new();
        for p in doc.platform {
            p.validate()?;
            if platforms.contains_key(&p.id) {
                return Err(DomainError::DuplicatePlatform(p.id));
            }
            platforms.insert(p.id.clone(), p);
        }
        if platforms.is_empty() {
            return Err(DomainError::Parse {
                source_name: "catalog".into(),
                message: "no platforms defined".into(),
            });
        }
        Ok(Self { platforms })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DomainError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| DomainError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_toml_str(&text).map_err(|e| e.with_source_name(&path.display().to_string()))
    }

    /// The seven-platform catalog shipped with the crate.
    pub fn default_catalog() -> Self {
        Self::from_toml_str(DEFAULT_CATALOG).expect("shipped catalog is valid")
    }

    pub fn from_platforms(list: Vec<PlatformSpec>) -> Result<Self, DomainError> {
        let mut platforms = BTreeMap::new();
        for p in list {
            p.validate()?;
            if platforms.insert(p.id.clone(), p.clone()).is_some() {
                return Err(DomainError::DuplicatePlatform(p.id));
            }
        }
        Ok(Self { platforms })
    }

    pub fn get(&self, id: &str) -> Option<&PlatformSpec> {
        self.platforms.get(id)
    }

    pub fn require(&self, id: &str) -> Result<&PlatformSpec, DomainError> {
        self.get(id).ok_or_else(|| DomainError::UnknownPlatform {
            site: None,
            platform: id.to_string(),
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = &PlatformSpec> {
        self.platforms.values()
    }

    pub fn len(&self) -> usize {
        self.platforms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.platforms.is_empty()
    }

    /// Serializes to the normalized document form (platforms sorted by id).
    pub fn to_toml_string(&self) -> String {
        let doc = CatalogDoc {
            platform: self.platforms.values().cloned().collect(),
        };
        toml::to_string(&doc).expect("catalog serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_catalog_has_seven_rows() {
        let c = PlatformCatalog::default_catalog();
        assert_eq!(c.len(), 7);
        let mm = c.get("AraMIMO-mm").unwrap();
        assert_eq!(mm.freq_low_hz, 27.5e9);
        assert_eq!(mm.freq_high_hz, 27.9e9);
        assert_eq!(mm.max_bandwidth_hz, 400e6);
        assert_eq!(mm.max_capacity_bps, 1.3e9);
        assert_eq!(mm.nominal_range_m, 500.0);
        let micro = c.get("AraHaul-micro").unwrap();
        assert_eq!((micro.freq_low_hz, micro.freq_high_hz), (10.6e9, 11.5e9));
        assert_eq!(micro.max_bandwidth_hz, 100e6);
        assert_eq!(micro.max_capacity_bps, 1e9);
        assert_eq!(micro.nominal_range_m, 20_000.0);
    }

    #[test]
    fn empty_file_is_parse_error() {
        assert!(matches!(
            PlatformCatalog::from_toml_str(""),
            Err(DomainError::Parse { .. })
        ));
    }

    #[test]
    fn duplicate_id_rejected() {
        let one = r#"
[[platform]]
id = "A"
kind = "xhaul"
freq_low_hz = 1e9
freq_high_hz = 2e9
max_bandwidth_hz = 1e6
max_capacity_bps = 1e6
nominal_range_m = 10.0
max_tx_power_w = 1.0
spectral_efficiency_cap = 2.0
"#;
        let doc = format!("{one}{one}");
        assert!(matches!(
            PlatformCatalog::from_toml_str(&doc),
            Err(DomainError::DuplicatePlatform(id)) if id == "A"
        ));
    }

    #[test]
    fn invariant_violation_names_field() {
        let doc = r#"
[[platform]]
id = "B"
kind = "xhaul"
freq_low_hz = 3e9
freq_high_hz = 2e9
max_bandwidth_hz = 1e6
max_capacity_bps = 1e6
nominal_range_m = 10.0
max_tx_power_w = 1.0
spectral_efficiency_cap = 2.0
"#;
        let err = PlatformCatalog::from_toml_str(doc).unwrap_err();
        assert!(err.to_string().contains("freq_low_hz"), "{err}");
    }

    #[test]
    fn parse_error_carries_line_context() {
        let doc = "[[platform]]\nid = \"A\"\nkind = \"ran\"\nfreq_low_hz = \"oops\"\n";
        let err = PlatformCatalog::from_toml_str(doc).unwrap_err().to_string();
        assert!(err.contains("line"), "{err}");
    }
}
