use ara_lab::domain::{PlatformCatalog, RngStream, Topology};
use rand::Rng;
use ara_lab::orchestrator::{
    admission_fuzz, guard_fuzz, random_request, Conflict, ExperimentSpec, LeaseRequest, Orchestrator,
    OrchestratorConfig, OrchestratorError, ResourceId, SpectrumDecl,
};

fn orch() -> Orchestrator {
    let cat = PlatformCatalog::default_catalog();
    Orchestrator::new(Topology::demo(&cat), cat, OrchestratorConfig::default())
}

#[test]
fn safety_holds_over_fuzz() {
    let mut o = orch();
    let rep = admission_fuzz(&mut o, 10_000, &mut RngStream::new(17, 0).rng());
    assert!(rep.safety_violations.is_empty(), "{:?}", &rep.safety_violations[..1]);
    assert!(rep.granted > 100 && rep.resource_conflicts > 100 && rep.spectrum_conflicts > 100, "{rep:?}");
}

#[test]
fn fcfs_on_adversarial_pairs() {
    let mut rng = RngStream::new(18, 0).rng();
    let mut base = orch();
    admission_fuzz(&mut base, 20, &mut rng);
    let now = base.now();
    let (topo, cat) = (base.topology().clone(), base.catalog().clone());
    let mut contested = 0;
    for _ in 0..1000 {
        let a = random_request(&topo, &cat, now, 50.0, &mut rng);
        // B usually takes A's devices over an overlapping window.
        let mut b = random_request(&topo, &cat, now, 50.0, &mut rng);
        if rng.random_bool(0.8) {
            b.resources = a.resources.clone();
            b.spectrum = a.spectrum.clone();
            b.start_s = a.start_s + 1.0;
        }
        let a_alone = base.clone().request_lease(a.clone(), now).is_ok();
        let b_alone = base.clone().request_lease(b.clone(), now).is_ok();
        let mut o = base.clone();
        let ra = o.request_lease(a.clone(), now).map(|l| l.id);
        assert_eq!(ra.is_ok(), a_alone);
        let rb = o.request_lease(b.clone(), now);
        if let (Ok(a_id), Err(OrchestratorError::Conflict(c))) = (&ra, &rb) {
            if b_alone && c.blocking_lease() == *a_id {
                contested += 1;
            }
        }
        if let Ok(a_id) = ra {
            // A keeps its grant whatever happened to B.
            assert!(o.lease(a_id).unwrap().state.is_live());
        }
    }
    assert!(contested > 100, "{contested}");
}

#[test]
fn every_injected_violation_revoked_within_a_slot() {
    let mut o = orch();
    let rep = guard_fuzz(&mut o, 1000, &mut RngStream::new(19, 0).rng());
    assert_eq!(rep.detected, rep.injections, "{rep:?}");
    assert!(rep.max_latency_s <= o.config().sensing_interval_s);
    assert_eq!(rep.false_alarms, 0);
    assert_eq!(rep.emissions_after_revoke, 0);
}

#[test]
fn five_hundred_metres_apart_cochannel_conflicts() {
    let cat = PlatformCatalog::default_catalog();
    let topo = Topology::from_toml_str(
        r#"
[[site]]
id = "a"
x = 1000.0
y = 1000.0
elevation = 300.0
role = "bs"
platforms = ["AraMIMO-C"]

[[site]]
id = "b"
x = 1500.0
y = 1000.0
elevation = 300.0
role = "bs"
platforms = ["AraMIMO-C"]
"#,
        &cat,
    )
    .unwrap();
    let mut o = Orchestrator::new(topo, cat, OrchestratorConfig::default());
    let req = |site: &str| LeaseRequest {
        requester: site.into(),
        resources: [ResourceId::new(site, "AraMIMO-C")].into(),
        start_s: 0.0,
        end_s: 60.0,
        spectrum: vec![SpectrumDecl { freq_low_hz: 3.45e9, freq_high_hz: 3.55e9, max_power_dbm: 30.0 }],
    };
    o.request_lease(req("a"), 0.0).unwrap();
    match o.request_lease(req("b"), 0.0) {
        Err(OrchestratorError::Conflict(Conflict::Spectrum { distance_m, .. })) => assert_eq!(distance_m, 500.0),
        other => panic!("{other:?}"),
    }
}

#[test]
fn launch_split_is_eighty_twenty() {
    let mut o = orch();
    let mut rng = RngStream::new(20, 0).rng();
    let (topo, cat) = (o.topology().clone(), o.catalog().clone());
    let mut launched = 0;
    for i in 0..200 {
        let now = i as f64 * 1000.0;
        let mut r = random_request(&topo, &cat, now, 1e-9, &mut rng);
        r.start_s = now;
        r.end_s = now + 900.0;
        let Ok(l) = o.request_lease(r, now) else { continue };
        let bytes = rng.random_range(1u64..5_000_000_000);
        let id = l.id;
        let e = o.launch_experiment(ExperimentSpec { lease_id: id, image_bytes: bytes, workload: "x".into(), emissions: vec![] }, now).unwrap();
        assert!((e.fetch_share() - 0.8).abs() < 1e-12);
        launched += 1;
    }
    assert!(launched > 150);
}
