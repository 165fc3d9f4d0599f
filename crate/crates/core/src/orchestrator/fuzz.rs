use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    Conflict, EmissionPhase, ExperimentSpec, GuardKind, LeaseRequest, Orchestrator, OrchestratorError, ResourceId,
    SpectrumDecl,
};
use crate::domain::{PlatformCatalog, Topology};

/// A plausible request: one or two devices, a random sub-band of each
/// device's platform band, and a window starting within `lead_s` of `now_s`.
pub fn random_request(topo: &Topology, catalog: &PlatformCatalog, now_s: f64, lead_s: f64, rng: &mut impl Rng) -> LeaseRequest {
    let sites: Vec<_> = topo.sites().collect();
    let n = rng.random_range(1..=2);
    let mut resources = std::collections::BTreeSet::new();
    let mut spectrum = Vec::new();
    for _ in 0..n {
        let site = sites.choose(rng).expect("topology has sites");
        let dev = site.platforms.choose(rng).expect("site has platforms");
        resources.insert(ResourceId::new(site.id.clone(), dev.clone()));
        if let Some(p) = catalog.get(dev) {
            let span = p.freq_high_hz - p.freq_low_hz;
            let width = span * rng.random_range(0.02..0.3);
            let low = p.freq_low_hz + rng.random_range(0.0..(span - width));
            spectrum.push(SpectrumDecl { freq_low_hz: low, freq_high_hz: low + width, max_power_dbm: rng.random_range(10.0..40.0) });
        }
    }
    let start_s = now_s + rng.random_range(0.0..lead_s);
    LeaseRequest {
        requester: format!("user-{}", rng.random_range(0..50)),
        resources,
        start_s,
        end_s: start_s + rng.random_range(10.0..600.0),
        spectrum,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AdmissionReport {
    pub requests: usize,
    pub granted: usize,
    pub resource_conflicts: usize,
    pub spectrum_conflicts: usize,
    pub invalid: usize,
    pub safety_violations: Vec<String>,
}

/// Submits `n` random requests one second apart, then checks the safety
/// invariant at every lease start.
pub fn admission_fuzz(orch: &mut Orchestrator, n: usize, rng: &mut impl Rng) -> AdmissionReport {
    let mut rep = AdmissionReport { requests: n, ..Default::default() };
    let (topo, cat) = (orch.topology().clone(), orch.catalog().clone());
    for i in 0..n {
        let now = i as f64;
        let req = random_request(&topo, &cat, now, 300.0, rng);
        match orch.request_lease(req, now) {
            Ok(_) => rep.granted += 1,
            Err(OrchestratorError::Conflict(Conflict::Resource { .. })) => rep.resource_conflicts += 1,
            Err(OrchestratorError::Conflict(Conflict::Spectrum { .. })) => rep.spectrum_conflicts += 1,
            Err(_) => rep.invalid += 1,
        }
    }
    let mut times: Vec<f64> = orch.leases().iter().map(|l| l.request.start_s.max(l.granted_at_s)).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    for t in times {
        if let Err(e) = orch.check_safety(t) {
            rep.safety_violations.push(e);
        }
    }
    rep
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GuardReport {
    pub injections: usize,
    pub detected: usize,
    pub max_latency_s: f64,
    pub false_alarms: usize,
    pub emissions_after_revoke: usize,
}

/// Runs `n` experiments back to back, each compliant until a random onset
/// and then violating (out of band, over power, or on an unleased device)
/// until its lease ends. Records the revocation latency of each.
pub fn guard_fuzz(orch: &mut Orchestrator, n: usize, rng: &mut impl Rng) -> GuardReport {
    let mut rep = GuardReport { injections: n, ..Default::default() };
    let (topo, cat) = (orch.topology().clone(), orch.catalog().clone());
    let dt = orch.config().sensing_interval_s;
    let span = 100.0;
    let t_base = orch.now().max(0.0).ceil();
    for i in 0..n {
        let t0 = t_base + i as f64 * span;
        let mut req = random_request(&topo, &cat, t0, 1e-9, rng);
        req.start_s = t0;
        req.end_s = t0 + span;
        let r = req.resources.iter().next().unwrap().clone();
        req.resources = [r.clone()].into();
        let Some(p) = cat.get(&r.device) else { continue };
        let d = SpectrumDecl { freq_low_hz: p.freq_low_hz, freq_high_hz: p.center_freq_hz(), max_power_dbm: 20.0 };
        req.spectrum = vec![d];
        let Ok(lease) = orch.request_lease(req, t0) else { continue };
        let lease_id = lease.id;
        let onset = t0 + rng.random_range(2.0..90.0);
        let w = (d.freq_high_hz - d.freq_low_hz) * 0.1;
        let good = EmissionPhase { resource: r.clone(), from_s: t0, to_s: onset, freq_low_hz: d.freq_low_hz, freq_high_hz: d.freq_low_hz + w, power_dbm: 15.0 };
        let kind = [GuardKind::OutOfBand, GuardKind::OverPower, GuardKind::Unleased][i % 3];
        let bad = match kind {
            GuardKind::OutOfBand => EmissionPhase { from_s: onset, to_s: t0 + span, freq_low_hz: d.freq_high_hz - w / 2.0, freq_high_hz: d.freq_high_hz + w / 2.0, ..good.clone() },
            GuardKind::OverPower => EmissionPhase { from_s: onset, to_s: t0 + span, power_dbm: 23.0, ..good.clone() },
            GuardKind::Unleased => {
                let other = topo.sites().find(|s| s.id != r.site && !s.platforms.is_empty()).expect("two sites");
                EmissionPhase { resource: ResourceId::new(other.id.clone(), other.platforms[0].clone()), from_s: onset, to_s: t0 + span, ..good.clone() }
            }
        };
        let spec = ExperimentSpec { lease_id, image_bytes: 0, workload: "fuzz".into(), emissions: vec![good, bad] };
        let exp_id = orch.launch_experiment(spec, t0).expect("lease is active").id;
        let first = (t0 / dt).ceil() as u64;
        let last = ((t0 + span) / dt).floor() as u64 - 1;
        let mut caught = None;
        for slot in first..=last {
            let t = slot as f64 * dt;
            let events = orch.guard_step(slot);
            for e in &events {
                if t < onset || e.experiment != Some(exp_id) {
                    rep.false_alarms += 1;
                } else if caught.is_none() {
                    caught = Some(t);
                }
            }
            if caught.is_some_and(|c| t > c) && !orch.observe(t).is_empty() {
                rep.emissions_after_revoke += 1;
            }
            if caught.is_some_and(|c| t >= c + 2.0 * dt) {
                break;
            }
        }
        if let Some(c) = caught {
            rep.detected += 1;
            rep.max_latency_s = rep.max_latency_s.max(c - onset);
        }
    }
    rep
}
