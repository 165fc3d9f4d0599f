use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::guard::Observation;
use super::{
    Conflict, ExpState, Experiment, ExperimentSpec, GuardEvent, GuardKind, Lease, LeaseRequest, LeaseState,
    LifecycleEvent, OrchestratorError, SpectrumDecl,
};
use crate::domain::{PlatformCatalog, Topology};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OrchestratorConfig {
    /// Image download rate used by the launch-time model.
    pub download_rate_bps: f64,
    /// Container start time as a fraction of the download time.
    pub start_fraction: f64,
    pub sensing_interval_s: f64,
    /// Overrides the per-platform interference radius when set.
    pub interference_radius_m: Option<f64>,
}

impl Default for OrchestratorConfig {
    fn default() -> Self {
        Self {
            download_rate_bps: 100e6,
            start_fraction: 0.25,
            sensing_interval_s: 1.0,
            interference_radius_m: None,
        }
    }
}

/// One entry of the append-only calendar log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum Record {
    Granted { lease: Lease },
    Rejected { time_s: f64, requester: String, reason: String },
    LeaseState { id: u64, state: LeaseState, time_s: f64 },
    Launched { experiment: Experiment },
    ExperimentState { id: u64, state: ExpState, time_s: f64 },
    Guard { event: GuardEvent },
}

#[derive(Debug, Clone)]
pub struct Orchestrator {
    config: OrchestratorConfig,
    topology: Topology,
    catalog: PlatformCatalog,
    leases: Vec<Lease>,
    experiments: Vec<Experiment>,
    guard_events: Vec<GuardEvent>,
    log: Vec<Record>,
    persisted: usize,
    now_s: f64,
}

impl Orchestrator {
    pub fn new(topology: Topology, catalog: PlatformCatalog, config: OrchestratorConfig) -> Self {
        Self {
            config,
            topology,
            catalog,
            leases: Vec::new(),
            experiments: Vec::new(),
            guard_events: Vec::new(),
            log: Vec::new(),
            persisted: 0,
            now_s: f64::NEG_INFINITY,
        }
    }

    pub fn config(&self) -> &OrchestratorConfig {
        &self.config
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn catalog(&self) -> &PlatformCatalog {
        &self.catalog
    }

    /// Current sim-time (negative infinity before the first event).
    pub fn now(&self) -> f64 {
        self.now_s
    }

    pub fn leases(&self) -> &[Lease] {
        &self.leases
    }

    pub fn lease(&self, id: u64) -> Option<&Lease> {
        self.leases.iter().find(|l| l.id == id)
    }

    pub fn experiments(&self) -> &[Experiment] {
        &self.experiments
    }

    pub fn experiment(&self, id: u64) -> Option<&Experiment> {
        self.experiments.iter().find(|e| e.id == id)
    }

    pub fn guard_events(&self) -> &[GuardEvent] {
        &self.guard_events
    }

    pub fn log(&self) -> &[Record] {
        &self.log
    }

    fn validate(&self, req: &LeaseRequest) -> Result<(), OrchestratorError> {
        let bad = |m: String| Err(OrchestratorError::Validation(m));
        if req.requester.trim().is_empty() {
            return bad("requester must be non-empty".into());
        }
        if !(req.start_s.is_finite() && req.end_s.is_finite() && req.start_s < req.end_s) {
            return bad(format!("window [{}, {}) is empty or not finite", req.start_s, req.end_s));
        }
        if req.resources.is_empty() {
            return bad("no resources requested".into());
        }
        for r in &req.resources {
            let site = self.topology.site(&r.site).ok_or_else(|| OrchestratorError::Validation(format!("unknown site {}", r.site)))?;
            if !site.has_platform(&r.device) {
                return bad(format!("site {} has no device {}", r.site, r.device));
            }
        }
        for d in &req.spectrum {
            if !(d.freq_low_hz < d.freq_high_hz && d.max_power_dbm.is_finite()) {
                return bad(format!("bad spectrum range {d:?}"));
            }
            if self.device_for(req, d).is_none() {
                return bad(format!(
                    "range {:.3}-{:.3} MHz lies outside every requested device's band",
                    d.freq_low_hz / 1e6,
                    d.freq_high_hz / 1e6
                ));
            }
        }
        Ok(())
    }

    /// The platform of the first requested device whose band holds `d`.
    fn device_for(&self, req: &LeaseRequest, d: &SpectrumDecl) -> Option<&crate::domain::PlatformSpec> {
        req.resources
            .iter()
            .filter_map(|r| self.catalog.get(&r.device))
            .find(|p| p.contains_freq(d.freq_low_hz, d.freq_high_hz))
    }

    fn radius(&self, a: &LeaseRequest, da: &SpectrumDecl, b: &LeaseRequest, db: &SpectrumDecl) -> f64 {
        if let Some(r) = self.config.interference_radius_m {
            return r;
        }
        let ra = self.device_for(a, da).map(|p| p.nominal_range_m).unwrap_or(0.0);
        let rb = self.device_for(b, db).map(|p| p.nominal_range_m).unwrap_or(0.0);
        ra.max(rb)
    }

    /// The first reason `req` cannot coexist with `other`, if any. Windows
    /// are assumed to overlap.
    fn conflict(&self, req: &LeaseRequest, other: &Lease) -> Option<Conflict> {
        if let Some(r) = req.resources.intersection(&other.request.resources).next() {
            return Some(Conflict::Resource { blocking_lease: other.id, resource: r.clone() });
        }
        for da in &req.spectrum {
            for db in &other.request.spectrum {
                if !da.overlaps(db.freq_low_hz, db.freq_high_hz) {
                    continue;
                }
                let radius = self.radius(req, da, &other.request, db);
                for ra in &req.resources {
                    for rb in &other.request.resources {
                        let d = self.topology.distance(&ra.site, &rb.site).unwrap_or(f64::INFINITY);
                        if d <= radius {
                            return Some(Conflict::Spectrum {
                                blocking_lease: other.id,
                                freq_low_hz: da.freq_low_hz.max(db.freq_low_hz),
                                freq_high_hz: da.freq_high_hz.min(db.freq_high_hz),
                                site_a: ra.site.clone(),
                                site_b: rb.site.clone(),
                                distance_m: d,
                            });
                        }
                    }
                }
            }
        }
        None
    }

    /// Moves the clock to `now_s`, activating and expiring leases and
    /// stopping experiments whose lease ended. The clock never runs back.
    pub fn advance(&mut self, now_s: f64) {
        if now_s <= self.now_s {
            return;
        }
        self.now_s = now_s;
        for i in 0..self.leases.len() {
            let (id, start, end) = (self.leases[i].id, self.leases[i].request.start_s, self.leases[i].request.end_s);
            if self.leases[i].state == LeaseState::Pending && start <= now_s {
                self.set_lease_state(i, LeaseState::Active, start);
            }
            if self.leases[i].state == LeaseState::Active && end <= now_s {
                self.set_lease_state(i, LeaseState::Expired, end);
                self.end_experiments(id, ExpState::Stopped, end);
            }
        }
    }

    fn set_lease_state(&mut self, idx: usize, state: LeaseState, time_s: f64) {
        let l = &mut self.leases[idx];
        l.state = state;
        if state == LeaseState::Revoked {
            l.revoked_at_s = Some(time_s);
        }
        self.log.push(Record::LeaseState { id: l.id, state, time_s });
    }

    fn end_experiments(&mut self, lease: u64, state: ExpState, time_s: f64) {
        for e in self.experiments.iter_mut().filter(|e| e.spec.lease_id == lease && !e.is_terminal()) {
            // Lifecycle steps scheduled after the end never happen.
            e.lifecycle.retain(|x| x.time_s <= time_s);
            e.lifecycle.push(LifecycleEvent { time_s, state });
            self.log.push(Record::ExperimentState { id: e.id, state, time_s });
        }
    }

    /// First-come first-served admission against every live lease whose
    /// window overlaps the request.
    pub fn request_lease(&mut self, req: LeaseRequest, now_s: f64) -> Result<&Lease, OrchestratorError> {
        self.advance(now_s);
        if let Err(e) = self.validate(&req) {
            self.log.push(Record::Rejected { time_s: now_s, requester: req.requester.clone(), reason: e.to_string() });
            return Err(e);
        }
        if req.end_s <= now_s {
            let e = OrchestratorError::Validation(format!("window ends at {} s, before now ({now_s} s)", req.end_s));
            self.log.push(Record::Rejected { time_s: now_s, requester: req.requester.clone(), reason: e.to_string() });
            return Err(e);
        }
        let blocking = self
            .leases
            .iter()
            .filter(|l| l.state.is_live() && l.request.overlaps_window(&req))
            .find_map(|l| self.conflict(&req, l));
        if let Some(c) = blocking {
            self.log.push(Record::Rejected { time_s: now_s, requester: req.requester.clone(), reason: c.to_string() });
            return Err(OrchestratorError::Conflict(c));
        }
        let id = self.leases.iter().map(|l| l.id).max().map_or(1, |m| m + 1);
        let state = if req.start_s <= now_s { LeaseState::Active } else { LeaseState::Pending };
        let lease = Lease { id, request: req, state, granted_at_s: now_s, revoked_at_s: None };
        self.log.push(Record::Granted { lease: lease.clone() });
        self.leases.push(lease);
        Ok(self.leases.last().unwrap())
    }

    /// Starts an experiment on an active lease. Launch time is the image
    /// download plus a container start of `start_fraction` of it.
    pub fn launch_experiment(&mut self, spec: ExperimentSpec, now_s: f64) -> Result<&Experiment, OrchestratorError> {
        self.advance(now_s);
        let lease = self.lease(spec.lease_id).ok_or(OrchestratorError::UnknownLease(spec.lease_id))?;
        if lease.state != LeaseState::Active {
            return Err(OrchestratorError::LeaseNotActive { id: lease.id, state: lease.state });
        }
        let fetch = spec.image_bytes as f64 * 8.0 / self.config.download_rate_bps;
        let start = self.config.start_fraction * fetch;
        let ev = |time_s, state| LifecycleEvent { time_s, state };
        let id = self.experiments.iter().map(|e| e.id).max().map_or(1, |m| m + 1);
        let exp = Experiment {
            id,
            spec,
            lifecycle: vec![
                ev(now_s, ExpState::Created),
                ev(now_s, ExpState::Fetching),
                ev(now_s + fetch, ExpState::Starting),
                ev(now_s + fetch + start, ExpState::Running),
            ],
        };
        self.log.push(Record::Launched { experiment: exp.clone() });
        self.experiments.push(exp);
        Ok(self.experiments.last().unwrap())
    }

    /// Leases holding a slot at `t`: granted, inside their window, and not
    /// revoked by then.
    pub fn active_at(&self, t: f64) -> impl Iterator<Item = &Lease> {
        self.leases.iter().filter(move |l| {
            l.granted_at_s <= t
                && l.request.start_s <= t
                && t < l.request.end_s
                && l.revoked_at_s.is_none_or(|r| t < r)
        })
    }

    /// Checks that no two leases active at `t` share a device or co-channel
    /// spectrum within interference range.
    pub fn check_safety(&self, t: f64) -> Result<(), String> {
        let active: Vec<&Lease> = self.active_at(t).collect();
        for (i, a) in active.iter().enumerate() {
            for b in &active[i + 1..] {
                if let Some(c) = self.conflict(&a.request, b) {
                    return Err(format!("t = {t}: lease {} vs {}: {c}", a.id, b.id));
                }
            }
        }
        Ok(())
    }

    /// Emissions radiated at `t` by experiments that are running then.
    pub fn observe(&self, t: f64) -> Vec<Observation> {
        self.experiments
            .iter()
            .filter(|e| e.state_at(t) == ExpState::Running)
            .flat_map(|e| {
                e.spec.emissions.iter().filter(move |p| p.from_s <= t && t < p.to_s).map(move |p| Observation {
                    resource: p.resource.clone(),
                    freq_low_hz: p.freq_low_hz,
                    freq_high_hz: p.freq_high_hz,
                    power_dbm: p.power_dbm,
                    experiment: Some(e.id),
                })
            })
            .collect()
    }

    /// Reactive gate for one sensing slot. Each offending lease is revoked
    /// at the slot time, together with its experiments.
    pub fn guard_check_spectrum(&mut self, observations: &[Observation], slot: u64) -> Vec<GuardEvent> {
        let t = slot as f64 * self.config.sensing_interval_s;
        self.advance(t);
        let mut events = Vec::new();
        for obs in observations {
            let lease = self
                .leases
                .iter()
                .position(|l| l.state == LeaseState::Active && l.request.resources.contains(&obs.resource));
            let kind = match lease {
                None => Some(GuardKind::Unleased),
                Some(i) => {
                    let decls = &self.leases[i].request.spectrum;
                    let holding: Vec<_> = decls.iter().filter(|d| d.contains(obs.freq_low_hz, obs.freq_high_hz)).collect();
                    if holding.is_empty() {
                        Some(GuardKind::OutOfBand)
                    } else if holding.iter().all(|d| obs.power_dbm > d.max_power_dbm) {
                        Some(GuardKind::OverPower)
                    } else {
                        None
                    }
                }
            };
            let Some(kind) = kind else { continue };
            let lease_id = lease.map(|i| self.leases[i].id);
            let event = GuardEvent {
                time_s: t,
                slot,
                kind,
                experiment: obs.experiment,
                lease: lease_id,
                resource: obs.resource.clone(),
                freq_low_hz: obs.freq_low_hz,
                freq_high_hz: obs.freq_high_hz,
                power_dbm: obs.power_dbm,
            };
            self.log.push(Record::Guard { event: event.clone() });
            self.guard_events.push(event.clone());
            events.push(event);
            if let Some(i) = lease {
                self.set_lease_state(i, LeaseState::Revoked, t);
                self.end_experiments(self.leases[i].id, ExpState::Revoked, t);
            } else if let Some(eid) = obs.experiment {
                // Emitting on a device it holds no lease for: stop the culprit.
                if let Some(e) = self.experiments.iter_mut().find(|e| e.id == eid && !e.is_terminal()) {
                    e.lifecycle.retain(|x| x.time_s <= t);
                    e.lifecycle.push(LifecycleEvent { time_s: t, state: ExpState::Revoked });
                    self.log.push(Record::ExperimentState { id: eid, state: ExpState::Revoked, time_s: t });
                }
            }
        }
        events
    }

    /// Observes and checks one sensing slot.
    pub fn guard_step(&mut self, slot: u64) -> Vec<GuardEvent> {
        let t = slot as f64 * self.config.sensing_interval_s;
        self.advance(t);
        let obs = self.observe(t);
        self.guard_check_spectrum(&obs, slot)
    }

    fn apply(&mut self, rec: &Record) {
        match rec {
            Record::Granted { lease } => self.leases.push(lease.clone()),
            Record::Rejected { .. } => {}
            Record::LeaseState { id, state, time_s } => {
                if let Some(l) = self.leases.iter_mut().find(|l| l.id == *id) {
                    l.state = *state;
                    if *state == LeaseState::Revoked {
                        l.revoked_at_s = Some(*time_s);
                    }
                }
                self.now_s = self.now_s.max(*time_s);
            }
            Record::Launched { experiment } => {
                self.now_s = self.now_s.max(experiment.lifecycle[0].time_s);
                self.experiments.push(experiment.clone());
            }
            Record::ExperimentState { id, state, time_s } => {
                if let Some(e) = self.experiments.iter_mut().find(|e| e.id == *id) {
                    e.lifecycle.retain(|x| x.time_s <= *time_s);
                    e.lifecycle.push(LifecycleEvent { time_s: *time_s, state: *state });
                }
            }
            Record::Guard { event } => {
                self.now_s = self.now_s.max(event.time_s);
                self.guard_events.push(event.clone());
            }
        }
        if let Record::Granted { lease } = rec {
            self.now_s = self.now_s.max(lease.granted_at_s);
        }
        if let Record::Rejected { time_s, .. } = rec {
            self.now_s = self.now_s.max(*time_s);
        }
        self.log.push(rec.clone());
    }

    /// Rebuilds state by replaying a calendar log.
    pub fn replay(topology: Topology, catalog: PlatformCatalog, config: OrchestratorConfig, records: &[Record]) -> Self {
        let mut o = Self::new(topology, catalog, config);
        for r in records {
            o.apply(r);
        }
        o.persisted = o.log.len();
        o
    }

    pub fn read_log(r: impl BufRead) -> Result<Vec<Record>, OrchestratorError> {
        let mut out = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            out.push(serde_json::from_str(&line).map_err(|e| OrchestratorError::Log { line: i + 1, message: e.to_string() })?);
        }
        Ok(out)
    }

    /// Writes records not yet persisted, one JSON object per line.
    pub fn flush_log(&mut self, mut w: impl Write) -> Result<(), OrchestratorError> {
        for r in &self.log[self.persisted..] {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        self.persisted = self.log.len();
        Ok(())
    }
}
