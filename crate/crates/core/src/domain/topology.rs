//! Sites, candidate links, and per-path terrain, loaded from a TOML file.
//!
//! ```toml
//! [frame]
//! non_negative = true
//!
//! [[site]]
//! id = "wilson-hall"
//! x = 12000.0
//! y = 9000.0
//! elevation = 300.0
//! role = "bs"
//! platforms = ["AraMIMO-C", "AraHaul-micro"]
//!
//! [[link]]
//! id = "wh-af-micro"
//! a = "wilson-hall"
//! b = "agronomy-farm"
//! platform = "AraHaul-micro"
//!
//! [[terrain]]
//! a = "wilson-hall"
//! b = "ue-7"
//! samples = [{ d_m = 0.0, elevation_m = 300.0, blockage = "clear" }]
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DomainError, PlatformCatalog, TerrainProfile, TerrainSource};

/// The demo topology shipped with the crate.
pub const DEFAULT_TOPOLOGY: &str = include_str!("../../data/topology.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SiteRole {
    Bs,
    Ue,
    Core,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub id: String,
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub elevation: f64,
    pub role: SiteRole,
    #[serde(default)]
    pub platforms: Vec<String>,
}

impl Site {
    pub fn position(&self) -> (f64, f64) {
        (self.x, self.y)
    }

    pub fn has_platform(&self, id: &str) -> bool {
        self.platforms.iter().any(|p| p == id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateLink {
    pub id: String,
    pub a: String,
    pub b: String,
    pub platform: String,
}

#[derive(Debug, Default, Deserialize)]
struct Frame {
    #[serde(default)]
    non_negative: bool,
}

#[derive(Debug, Deserialize)]
struct TerrainEntry {
    a: String,
    b: String,
    samples: TerrainProfile,
}

#[derive(Debug, Deserialize)]
struct TopologyDoc {
    #[serde(default)]
    frame: Frame,
    #[serde(default)]
    site: Vec<Site>,
    #[serde(default)]
    link: Vec<CandidateLink>,
    #[serde(default)]
    terrain: Vec<TerrainEntry>,
}

/// Validated sites (sorted by id), candidate links, and known terrain paths.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    sites: BTreeMap<String, Site>,
    links: Vec<CandidateLink>,
    terrain: TerrainSource,
}

impl Topology {
    pub fn from_toml_str(text: &str, catalog: &PlatformCatalog) -> Result<Self, DomainError> {
        let doc: TopologyDoc = toml::from_str(text).map_err(|e| DomainError::Parse {
            source_name: "topology".into(),
            message: e.to_string(),
        })?;
        let mut sites = BTreeMap::new();
        for s in doc.site {
            if doc.frame.non_negative && (s.x < 0.0 || s.y < 0.0) {
                return Err(DomainError::NegativeCoordinate(s.id));
            }
            for p in &s.platforms {
                if catalog.get(p).is_none() {
                    return Err(DomainError::UnknownPlatform {
                        site: Some(s.id.clone()),
                        platform: p.clone(),
                    });
                }
            }
            if sites.contains_key(&s.id) {
                return Err(DomainError::DuplicateSite(s.id));
            }
            sites.insert(s.id.clone(), s);
        }
        for l in &doc.link {
            for end in [&l.a, &l.b] {
                let site = sites
                    .get(end)
                    .ok_or_else(|| DomainError::UnknownSite(end.clone()))?;
                if !site.has_platform(&l.platform) {
                    return Err(DomainError::Link {
                        link: l.id.clone(),
                        reason: format!("site '{end}' has no platform '{}'", l.platform),
                    });
                }
            }
            if l.a == l.b {
                return Err(DomainError::Link {
                    link: l.id.clone(),
                    reason: "endpoints must differ".into(),
                });
            }
        }
        let mut terrain = TerrainSource::default();
        for t in doc.terrain {
            for end in [&t.a, &t.b] {
                if !sites.contains_key(end) {
                    return Err(DomainError::UnknownSite(end.clone()));
                }
            }
            terrain.insert(&t.a, &t.b, t.samples);
        }
        Ok(Self {
            sites,
            links: doc.link,
            terrain,
        })
    }

    pub fn load(path: impl AsRef<Path>, catalog: &PlatformCatalog) -> Result<Self, DomainError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| DomainError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_toml_str(&text, catalog)
            .map_err(|e| e.with_source_name(&path.display().to_string()))
    }

    /// The shipped demo: 6 base stations and 7 UE sites.
    pub fn demo(catalog: &PlatformCatalog) -> Self {
        Self::from_toml_str(DEFAULT_TOPOLOGY, catalog).expect("shipped topology is valid")
    }

    pub fn site(&self, id: &str) -> Option<&Site> {
        self.sites.get(id)
    }

    pub fn require_site(&self, id: &str) -> Result<&Site, DomainError> {
        self.site(id).ok_or_else(|| DomainError::UnknownSite(id.to_string()))
    }

    pub fn sites(&self) -> impl Iterator<Item = &Site> {
        self.sites.values()
    }

    pub fn sites_with_role(&self, role: SiteRole) -> impl Iterator<Item = &Site> {
        self.sites.values().filter(move |s| s.role == role)
    }

    pub fn links(&self) -> &[CandidateLink] {
        &self.links
    }

    pub fn terrain(&self) -> &TerrainSource {
        &self.terrain
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Longest planar distance between any two base stations.
    pub fn max_bs_distance(&self) -> f64 {
        let bs: Vec<&Site> = self.sites_with_role(SiteRole::Bs).collect();
        let mut best = 0.0f64;
        for (i, a) in bs.iter().enumerate() {
            for b in &bs[i + 1..] {
                best = best.max(planar_distance(a, b));
            }
        }
        best
    }

    /// Distance between two named sites.
    pub fn distance(&self, a: &str, b: &str) -> Result<f64, DomainError> {
        Ok(planar_distance(self.require_site(a)?, self.require_site(b)?))
    }
}

fn planar_distance(a: &Site, b: &Site) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

/// Planar distance and the terrain profile from `a` to `b`. A stored profile
/// for the pair (in either direction) is used when present; otherwise the
/// path is a clear straight line between the two site elevations.
pub fn distance_and_profile(a: &Site, b: &Site, terrain: &TerrainSource) -> (f64, TerrainProfile) {
    let d = planar_distance(a, b);
    let profile = terrain
        .lookup(&a.id, &b.id)
        .unwrap_or_else(|| TerrainProfile::straight(d, a.elevation, b.elevation));
    (d, profile)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn site(id: &str, x: f64, y: f64) -> Site {
        Site {
            id: id.into(),
            x,
            y,
            elevation: 0.0,
            role: SiteRole::Bs,
            platforms: vec![],
        }
    }

    #[test]
    fn three_four_five() {
        let (d, p) = distance_and_profile(&site("a", 0.0, 0.0), &site("b", 3000.0, 4000.0), &TerrainSource::default());
        assert_eq!(d, 5000.0);
        assert_eq!(p.length_m(), 5000.0);
    }

    #[test]
    fn identical_sites_single_sample() {
        let a = site("a", 10.0, 20.0);
        let (d, p) = distance_and_profile(&a, &a, &TerrainSource::default());
        assert_eq!(d, 0.0);
        assert_eq!(p.samples().len(), 1);
    }

    #[test]
    fn demo_topology_anchors() {
        let cat = PlatformCatalog::default_catalog();
        let topo = Topology::demo(&cat);
        assert_eq!(topo.sites_with_role(SiteRole::Bs).count(), 6);
        assert_eq!(topo.sites_with_role(SiteRole::Ue).count(), 7);
        assert!(topo.max_bs_distance() >= 10_150.0);
        let d = topo.distance("agronomy-farm", "wilson-hall").unwrap();
        assert!((d - 10_150.0).abs() <= 1.0, "{d}");
    }

    #[test]
    fn unknown_platform_names_site_and_platform() {
        let cat = PlatformCatalog::default_catalog();
        let doc = r#"
[[site]]
id = "s1"
x = 0.0
y = 0.0
role = "bs"
platforms = ["X"]
"#;
        let msg = Topology::from_toml_str(doc, &cat).unwrap_err().to_string();
        assert!(msg.contains("s1") && msg.contains("'X'"), "{msg}");
    }

    #[test]
    fn duplicate_site_rejected() {
        let cat = PlatformCatalog::default_catalog();
        let doc = r#"
[[site]]
id = "s1"
x = 0.0
y = 0.0
role = "bs"
[[site]]
id = "s1"
x = 5.0
y = 0.0
role = "ue"
"#;
        assert!(matches!(
            Topology::from_toml_str(doc, &cat),
            Err(DomainError::DuplicateSite(_))
        ));
    }

    #[test]
    fn negative_coordinates_only_rejected_when_declared() {
        let cat = PlatformCatalog::default_catalog();
        let body = "[[site]]\nid = \"s\"\nx = -1.0\ny = 0.0\nrole = \"ue\"\n";
        assert!(Topology::from_toml_str(body, &cat).is_ok());
        let strict = format!("[frame]\nnon_negative = true\n{body}");
        assert!(matches!(
            Topology::from_toml_str(&strict, &cat),
            Err(DomainError::NegativeCoordinate(_))
        ));
    }
}
