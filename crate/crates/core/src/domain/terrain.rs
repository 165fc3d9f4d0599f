use serde::{Deserialize, Serialize};

use super::DomainError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Blockage {
    Clear,
    Partial,
    Blocked,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerrainSample {
    pub d_m: f64,
    pub elevation_m: f64,
    #[serde(default = "clear")]
    pub blockage: Blockage,
}

fn clear() -> Blockage {
    Blockage::Clear
}

/// Piecewise elevation profile along a path. Distances start at 0 and are
/// strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<TerrainSample>", into = "Vec<TerrainSample>")]
pub struct TerrainProfile {
    samples: Vec<TerrainSample>,
}

impl TerrainProfile {
    pub fn new(samples: Vec<TerrainSample>) -> Result<Self, DomainError> {
        let first = samples
            .first()
            .ok_or_else(|| DomainError::Terrain("profile has no samples".into()))?;
        if first.d_m != 0.0 {
            return Err(DomainError::Terrain(format!(
                "first sample must be at distance 0, found {}",
                first.d_m
            )));
        }
        if samples.windows(2).any(|w| !(w[1].d_m > w[0].d_m)) {
            return Err(DomainError::Terrain("distances must be strictly increasing".into()));
        }
        if samples.iter().any(|s| !s.d_m.is_finite() || !s.elevation_m.is_finite()) {
            return Err(DomainError::Terrain("non-finite sample".into()));
        }
        Ok(Self { samples })
    }

    /// A clear two-point profile between elevations; one point when `length_m == 0`.
    pub fn straight(length_m: f64, from_elev: f64, to_elev: f64) -> Self {
        let mut samples = vec![TerrainSample {
            d_m: 0.0,
            elevation_m: from_elev,
            blockage: Blockage::Clear,
        }];
        if length_m > 0.0 {
            samples.push(TerrainSample {
                d_m: length_m,
                elevation_m: to_elev,
                blockage: Blockage::Clear,
            });
        }
        Self { samples }
    }

    /// A flat clear profile of the given length with a blockage flag at the far end.
    pub fn with_endpoint_blockage(length_m: f64, blockage: Blockage) -> Self {
        let mut p = Self::straight(length_m, 0.0, 0.0);
        if let Some(last) = p.samples.last_mut() {
            last.blockage = blockage;
        }
        p
    }

    pub fn samples(&self) -> &[TerrainSample] {
        &self.samples
    }

    pub fn length_m(&self) -> f64 {
        self.samples.last().map(|s| s.d_m).unwrap_or(0.0)
    }

    /// Worst blockage anywhere on the path.
    pub fn worst_blockage(&self) -> Blockage {
        self.samples
            .iter()
            .map(|s| s.blockage)
            .max()
            .unwrap_or(Blockage::Clear)
    }

    /// Blockage of the segment containing distance `d_m`. Each sample's flag
    /// applies from its distance up to the next sample.
    pub fn blockage_at(&self, d_m: f64) -> Blockage {
        self.samples
            .iter()
            .take_while(|s| s.d_m <= d_m)
            .last()
            .map(|s| s.blockage)
            .unwrap_or(Blockage::Clear)
    }

    /// Elevation at `d_m`, linearly interpolated and clamped to the ends.
    pub fn elevation_at(&self, d_m: f64) -> f64 {
        let s = &self.samples;
        if d_m <= s[0].d_m {
            return s[0].elevation_m;
        }
        for w in s.windows(2) {
            if d_m <= w[1].d_m {
                let t = (d_m - w[0].d_m) / (w[1].d_m - w[0].d_m);
                return w[0].elevation_m + t * (w[1].elevation_m - w[0].elevation_m);
            }
        }
        s[s.len() - 1].elevation_m
    }

    /// The path from the origin to a receiver at `d_m`, carrying the local
    /// blockage at the receiver position.
    pub fn receiver_path(&self, d_m: f64) -> Self {
        let mut p = Self::straight(d_m, self.samples[0].elevation_m, self.elevation_at(d_m));
        if let Some(last) = p.samples.last_mut() {
            last.blockage = self.blockage_at(d_m);
        }
        p
    }

    /// The same path walked from the other end.
    pub fn reversed(&self) -> Self {
        let total = self.length_m();
        let samples = self
            .samples
            .iter()
            .rev()
            .map(|s| TerrainSample {
                d_m: total - s.d_m,
                ..*s
            })
            .collect();
        Self { samples }
    }
}

impl TryFrom<Vec<TerrainSample>> for TerrainProfile {
    type Error = DomainError;
    fn try_from(v: Vec<TerrainSample>) -> Result<Self, Self::Error> {
        TerrainProfile::new(v)
    }
}

impl From<TerrainProfile> for Vec<TerrainSample> {
    fn from(p: TerrainProfile) -> Self {
        p.samples
    }
}

/// Known per-path terrain profiles, keyed by the (from, to) site ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TerrainSource {
    paths: std::collections::BTreeMap<(String, String), TerrainProfile>,
}

impl TerrainSource {
    pub fn insert(&mut self, from: &str, to: &str, profile: TerrainProfile) {
        self.paths.insert((from.to_string(), to.to_string()), profile);
    }

    /// Profile from `from` to `to`, reversing a stored `to -> from` path if needed.
    pub fn lookup(&self, from: &str, to: &str) -> Option<TerrainProfile> {
        if let Some(p) = self.paths.get(&(from.to_string(), to.to_string())) {
            return Some(p.clone());
        }
        self.paths
            .get(&(to.to_string(), from.to_string()))
            .map(TerrainProfile::reversed)
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}
