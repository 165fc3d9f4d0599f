use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    Tvws,
    Sdr,
    Compute,
    Switches,
    Optical,
    Other,
}

impl Component {
    pub const ALL: [Component; 6] = [
        Component::Tvws,
        Component::Sdr,
        Component::Compute,
        Component::Switches,
        Component::Optical,
        Component::Other,
    ];
}

/// Operating state of the TVWS base station.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "state", content = "ues")]
pub enum BsState {
    Off,
    IdleNoTx,
    TxIdle,
    Connected(u32),
    Transmitting(u32),
}

impl BsState {
    /// TVWS draw relative to the no-transmission state.
    pub fn tvws_factor(self) -> f64 {
        match self {
            BsState::Off => 0.0,
            BsState::IdleNoTx => 1.0,
            BsState::TxIdle => 1.03,
            BsState::Connected(k) => 1.03 + 0.01 * k as f64,
            BsState::Transmitting(k) => 1.09 + 0.02 * k as f64,
        }
    }

    pub fn is_transmitting(self) -> bool {
        !matches!(self, BsState::Off | BsState::IdleNoTx)
    }
}

/// Per-component steady-state draw of the Residence Hall base station
/// (one-month average, with the radio transmitting but idle).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerTable {
    pub rows: Vec<(Component, f64, f64)>,
    pub reference_state: BsState,
}

impl Default for PowerTable {
    fn default() -> Self {
        Self {
            rows: vec![
                (Component::Tvws, 692.234, 5.822),
                (Component::Sdr, 415.198, 4.377),
                (Component::Compute, 319.516, 2.699),
                (Component::Switches, 188.118, 2.332),
                (Component::Optical, 115.482, 1.392),
                (Component::Other, 45.173, 0.783),
            ],
            reference_state: BsState::TxIdle,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerReading {
    pub time_s: f64,
    pub site: String,
    pub component: Component,
    pub watts: f64,
    pub amps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteReading {
    pub time_s: f64,
    pub site: String,
    pub state: BsState,
    pub components: Vec<PowerReading>,
    pub total_watts: f64,
    pub total_amps: f64,
}

impl SiteReading {
    pub fn component(&self, c: Component) -> Option<&PowerReading> {
        self.components.iter().find(|r| r.component == c)
    }

    pub fn share(&self, c: Component) -> f64 {
        self.component(c).map(|r| r.watts).unwrap_or(0.0) / self.total_watts
    }
}

/// Fraction of the no-transmission TVWS draw seen for one sample while the
/// RF chains restart at the start of transmission.
pub const TVWS_TRANSIENT_FACTOR: f64 = 0.6;

fn reading(table: &PowerTable, time_s: f64, site: &str, state: BsState, tvws_scale: f64) -> SiteReading {
    let components: Vec<PowerReading> = table
        .rows
        .iter()
        .map(|&(component, w, a)| {
            let k = match (state, component) {
                (BsState::Off, _) => 0.0,
                (_, Component::Tvws) => tvws_scale,
                _ => 1.0,
            };
            PowerReading {
                time_s,
                site: site.to_string(),
                component,
                watts: w * k,
                amps: a * k,
            }
        })
        .collect();
    SiteReading {
        time_s,
        site: site.to_string(),
        state,
        total_watts: components.iter().map(|r| r.watts).sum(),
        total_amps: components.iter().map(|r| r.amps).sum(),
        components,
    }
}

/// Component readings for a base station in `state`.
pub fn power_model(table: &PowerTable, site: &str, state: BsState) -> SiteReading {
    let scale = state.tvws_factor() / table.reference_state.tvws_factor();
    reading(table, 0.0, site, state, scale)
}

/// Samples at `dt_s` over a sequence of `(duration_s, state)` phases. The
/// first sample after leaving `IdleNoTx` for a transmitting state shows the
/// restart dip.
pub fn power_trace(table: &PowerTable, site: &str, phases: &[(f64, BsState)], dt_s: f64) -> Vec<SiteReading> {
    let reference = table.reference_state.tvws_factor();
    let mut out = Vec::new();
    let mut t = 0.0;
    let mut prev: Option<BsState> = None;
    for &(duration, state) in phases {
        let n = (duration / dt_s).round().max(1.0) as usize;
        for i in 0..n {
            let restarting = i == 0 && prev == Some(BsState::IdleNoTx) && state.is_transmitting();
            let factor = if restarting { TVWS_TRANSIENT_FACTOR } else { state.tvws_factor() };
            let mut r = reading(table, t, site, state, factor / reference);
            r.time_s = t;
            out.push(r);
            t += dt_s;
        }
        prev = Some(state);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steady_state_matches_table() {
        let r = power_model(&PowerTable::default(), "residence-hall", BsState::TxIdle);
        assert!((r.total_watts - 1775.721).abs() < 1e-9);
        assert!((r.total_amps - 17.405).abs() < 1e-9);
        assert!((100.0 * r.share(Component::Tvws) - 38.983).abs() < 5e-4);
    }

    #[test]
    fn tvws_rises_21_percent() {
        let t = PowerTable::default();
        let idle = power_model(&t, "rh", BsState::IdleNoTx);
        let busy = power_model(&t, "rh", BsState::Transmitting(6));
        let ratio = busy.component(Component::Tvws).unwrap().watts / idle.component(Component::Tvws).unwrap().watts;
        assert!((ratio - 1.21).abs() < 1e-9);
    }

    #[test]
    fn off_is_zero() {
        let r = power_model(&PowerTable::default(), "rh", BsState::Off);
        assert!(r.components.iter().all(|c| c.watts == 0.0 && c.amps == 0.0));
        assert_eq!(r.total_watts, 0.0);
    }

    #[test]
    fn trace_dips_at_transmission_start() {
        let t = PowerTable::default();
        let trace = power_trace(&t, "rh", &[(3.0, BsState::IdleNoTx), (3.0, BsState::TxIdle)], 1.0);
        let tv: Vec<f64> = trace.iter().map(|r| r.component(Component::Tvws).unwrap().watts).collect();
        assert!(tv[3] < tv[2]);
        assert!(tv[4] > tv[2]);
        assert_eq!(trace[5].time_s, 5.0);
    }
}
