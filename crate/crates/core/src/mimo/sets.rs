use serde::{Deserialize, Serialize};

use super::{MimoSet, UeSpec};

/// Seven two-stream UEs around a 14-antenna TVWS sector. UEs 1, 2, 5 and 6
/// sit close together and share a correlation cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FieldLayout {
    pub antennas: usize,
    /// Mean per-antenna SNR of UEs 1..=7 at full power.
    pub snr_db: [f64; 7],
    pub cluster_correlation: f64,
    pub clustered: Vec<u32>,
}

impl Default for FieldLayout {
    fn default() -> Self {
        Self {
            antennas: 14,
            snr_db: [8.5, 7.5, 5.5, 6.5, 8.0, 7.0, 4.5],
            cluster_correlation: 0.75,
            clustered: vec![1, 2, 5, 6],
        }
    }
}

impl FieldLayout {
    pub fn set(&self, name: &str, members: &[u32]) -> MimoSet {
        MimoSet {
            name: name.to_string(),
            antennas: self.antennas,
            cluster_correlation: self.cluster_correlation,
            ues: members
                .iter()
                .map(|&u| UeSpec {
                    id: format!("ue-{u}"),
                    snr_db: self.snr_db[(u - 1) as usize],
                    streams: 2,
                    cluster: self.clustered.contains(&u).then_some(1),
                })
                .collect(),
        }
    }

    /// Set 0 (all seven UEs), the packed Set 1 and the spread Set 2.
    pub fn sets(&self) -> Vec<MimoSet> {
        vec![
            self.set("set0", &[1, 2, 3, 4, 5, 6, 7]),
            self.set("set1", &[1, 2, 5, 6]),
            self.set("set2", &[1, 3, 4, 7]),
        ]
    }
}
