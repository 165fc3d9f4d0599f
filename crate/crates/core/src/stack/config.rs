use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::StackError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McsEntry {
    /// Information bits per resource element.
    pub efficiency: f64,
    /// Lowest SINR at which this entry is selected.
    pub min_sinr_db: f64,
}

/// `BLER = min(cap, at_threshold * 10^(-margin / db_per_decade))`, where the
/// margin is SINR above the selected entry's threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlerModel {
    pub at_threshold: f64,
    pub db_per_decade: f64,
    pub cap: f64,
    pub max_retx: u32,
}

impl Default for BlerModel {
    fn default() -> Self {
        Self {
            at_threshold: 0.1,
            db_per_decade: 2.0,
            cap: 0.5,
            max_retx: 4,
        }
    }
}

impl BlerModel {
    pub fn bler(&self, margin_db: f64) -> f64 {
        (self.at_threshold * 10f64.powf(-margin_db / self.db_per_decade)).min(self.cap)
    }
}

/// Base processing time per layer in ms; RLC adds per-segment cost on top.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerBase {
    pub sdap_ms: f64,
    pub pdcp_ms: f64,
    pub rlc_ms: f64,
    pub rlc_per_segment_ms: f64,
    pub mac_ms: f64,
    pub phy_ms: f64,
    /// Uniform jitter half-width as a fraction of each base value.
    pub jitter: f64,
}

impl Default for LayerBase {
    fn default() -> Self {
        Self {
            sdap_ms: 0.00355,
            pdcp_ms: 0.00712,
            rlc_ms: 0.034,
            rlc_per_segment_ms: 0.04,
            mac_ms: 0.08,
            phy_ms: 0.01784,
            jitter: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StackConfig {
    pub bandwidth_hz: f64,
    pub scs_hz: f64,
    pub dl_symbols: u32,
    pub ul_symbols: u32,
    pub carrier_hz: f64,
    pub harq_rtt_slots: u32,
    pub base: LayerBase,
    pub mcs_table: Vec<McsEntry>,
    pub bler: BlerModel,
}

impl Default for StackConfig {
    fn default() -> Self {
        let mcs = |efficiency, min_sinr_db| McsEntry { efficiency, min_sinr_db };
        Self {
            bandwidth_hz: 40e6,
            scs_hz: 30e3,
            dl_symbols: 6,
            ul_symbols: 4,
            carrier_hz: 3.5864e9,
            harq_rtt_slots: 8,
            base: LayerBase::default(),
            mcs_table: vec![mcs(0.6, -6.0), mcs(1.2, 0.0), mcs(2.5, 6.0), mcs(4.5, 12.0), mcs(7.0, 18.0)],
            bler: BlerModel::default(),
        }
    }
}

impl StackConfig {
    pub fn validate(&self) -> Result<(), StackError> {
        if self.dl_symbols + self.ul_symbols > 14 {
            return Err(StackError::Config(format!(
                "dl_symbols + ul_symbols = {} exceeds 14",
                self.dl_symbols + self.ul_symbols
            )));
        }
        if self.mcs_table.is_empty() {
            return Err(StackError::Config("empty MCS table".into()));
        }
        if self.mcs_table.windows(2).any(|w| w[1].min_sinr_db <= w[0].min_sinr_db) {
            return Err(StackError::Config("MCS thresholds must increase".into()));
        }
        self.prb_count()?;
        Ok(())
    }

    /// Slot length in ns (1 ms at 15 kHz, halving per numerology step).
    pub fn slot_ns(&self) -> u64 {
        (1e6 * 15e3 / self.scs_hz).round() as u64
    }

    /// Maximum PRB count for the channel bandwidth and subcarrier spacing.
    pub fn prb_count(&self) -> Result<u32, StackError> {
        const SCS15: [(u32, u32); 8] = [(5, 25), (10, 52), (15, 79), (20, 106), (25, 133), (30, 160), (40, 216), (50, 270)];
        const SCS30: [(u32, u32); 13] = [
            (5, 11), (10, 24), (15, 38), (20, 51), (25, 65), (30, 78), (40, 106),
            (50, 133), (60, 162), (70, 189), (80, 217), (90, 245), (100, 273),
        ];
        let table: &[(u32, u32)] = if self.scs_hz == 15e3 {
            &SCS15
        } else if self.scs_hz == 30e3 {
            &SCS30
        } else {
            return Err(StackError::Config(format!("unsupported subcarrier spacing {} Hz", self.scs_hz)));
        };
        let mhz = self.bandwidth_hz / 1e6;
        table
            .iter()
            .find(|(bw, _)| (*bw as f64 - mhz).abs() < 1e-9)
            .map(|(_, prb)| *prb)
            .ok_or_else(|| StackError::Config(format!("unsupported bandwidth {mhz} MHz at {} kHz", self.scs_hz / 1e3)))
    }

    /// Highest entry whose threshold the SINR meets; the lowest entry otherwise.
    pub fn select_mcs(&self, sinr_db: f64) -> usize {
        self.mcs_table
            .iter()
            .rposition(|m| sinr_db >= m.min_sinr_db)
            .unwrap_or(0)
    }
}

/// Per-packet SINR draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SinrProfile {
    Fixed { sinr_db: f64 },
    Gaussian { mean_db: f64, std_db: f64 },
    /// A clear state and a deep-fade state chosen independently per packet.
    TwoState {
        mean_db: f64,
        std_db: f64,
        fade_prob: f64,
        fade_mean_db: f64,
        fade_std_db: f64,
    },
}

impl SinrProfile {
    pub fn no_rain() -> Self {
        SinrProfile::Gaussian { mean_db: 24.0, std_db: 1.5 }
    }

    pub fn rain() -> Self {
        SinrProfile::TwoState {
            mean_db: 24.0,
            std_db: 1.5,
            fade_prob: 0.3,
            fade_mean_db: -4.5,
            fade_std_db: 1.5,
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        let normal = |m: f64, s: f64, rng: &mut dyn rand::RngCore| {
            Normal::new(m, s.max(0.0)).map(|d| d.sample(rng)).unwrap_or(m)
        };
        match *self {
            SinrProfile::Fixed { sinr_db } => sinr_db,
            SinrProfile::Gaussian { mean_db, std_db } => normal(mean_db, std_db, rng),
            SinrProfile::TwoState { mean_db, std_db, fade_prob, fade_mean_db, fade_std_db } => {
                if rng.random::<f64>() < fade_prob {
                    normal(fade_mean_db, fade_std_db, rng)
                } else {
                    normal(mean_db, std_db, rng)
                }
            }
        }
    }

    /// The same profile shifted by `db`.
    pub fn shifted(&self, db: f64) -> Self {
        match *self {
            SinrProfile::Fixed { sinr_db } => SinrProfile::Fixed { sinr_db: sinr_db + db },
            SinrProfile::Gaussian { mean_db, std_db } => SinrProfile::Gaussian { mean_db: mean_db + db, std_db },
            SinrProfile::TwoState { mean_db, std_db, fade_prob, fade_mean_db, fade_std_db } => SinrProfile::TwoState {
                mean_db: mean_db + db,
                std_db,
                fade_prob,
                fade_mean_db: fade_mean_db + db,
                fade_std_db,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forty_mhz_thirty_khz_is_106_prbs() {
        let c = StackConfig::default();
        assert_eq!(c.prb_count().unwrap(), 106);
        assert_eq!(c.slot_ns(), 500_000);
        c.validate().unwrap();
    }

    #[test]
    fn mcs_selection_edges() {
        let c = StackConfig::default();
        assert_eq!(c.select_mcs(-20.0), 0);
        assert_eq!(c.select_mcs(0.0), 1);
        assert_eq!(c.select_mcs(17.99), 3);
        assert_eq!(c.select_mcs(40.0), 4);
    }

    #[test]
    fn symbol_budget_enforced() {
        let c = StackConfig { dl_symbols: 10, ul_symbols: 5, ..Default::default() };
        assert!(c.validate().is_err());
    }
}
