use serde::{Deserialize, Serialize};

use super::{DenyReason, Lease, ResourceId};

/// A radio reconfiguration an experiment asks the platform API for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioConfigRequest {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub tx_power_dbm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "decision", content = "reason", rename_all = "snake_case")]
pub enum GuardDecision {
    Allow,
    Deny(DenyReason),
}

/// Proactive gate: the occupied band must fit inside one declared range
/// and the power must not exceed that range's limit. A denial only blocks
/// the request; the experiment keeps running.
pub fn guard_check_config(req: &RadioConfigRequest, lease: &Lease) -> GuardDecision {
    let low = req.carrier_hz - req.bandwidth_hz / 2.0;
    let high = req.carrier_hz + req.bandwidth_hz / 2.0;
    let fits: Vec<_> = lease.request.spectrum.iter().filter(|d| d.contains(low, high)).collect();
    if fits.is_empty() {
        GuardDecision::Deny(DenyReason::OutOfBand)
    } else if fits.iter().all(|d| req.tx_power_dbm > d.max_power_dbm) {
        GuardDecision::Deny(DenyReason::OverPower)
    } else {
        GuardDecision::Allow
    }
}

/// One sensed emission, attributed to the radiating device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub resource: ResourceId,
    pub freq_low_hz: f64,
    pub freq_high_hz: f64,
    pub power_dbm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<u64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orchestrator::{LeaseRequest, LeaseState, SpectrumDecl};

    fn lease() -> Lease {
        Lease {
            id: 1,
            request: LeaseRequest {
                requester: "a".into(),
                resources: [ResourceId::new("wilson-hall", "AraSDR")].into(),
                start_s: 0.0,
                end_s: 10.0,
                spectrum: vec![SpectrumDecl { freq_low_hz: 3.45e9, freq_high_hz: 3.50e9, max_power_dbm: 20.0 }],
            },
            state: LeaseState::Active,
            granted_at_s: 0.0,
            revoked_at_s: None,
        }
    }

    #[test]
    fn config_gate() {
        let l = lease();
        let ok = RadioConfigRequest { carrier_hz: 3.475e9, bandwidth_hz: 20e6, tx_power_dbm: 20.0 };
        assert_eq!(guard_check_config(&ok, &l), GuardDecision::Allow);
        let high = RadioConfigRequest { carrier_hz: 3.51e9, ..ok };
        assert_eq!(guard_check_config(&high, &l), GuardDecision::Deny(DenyReason::OutOfBand));
        let loud = RadioConfigRequest { tx_power_dbm: 23.0, ..ok };
        assert_eq!(guard_check_config(&loud, &l), GuardDecision::Deny(DenyReason::OverPower));
    }
}
