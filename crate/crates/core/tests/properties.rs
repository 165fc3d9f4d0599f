use ara_lab::domain::{distance_and_profile, PlatformCatalog, PlatformKind, RngStream, TerrainProfile, Topology};
use ara_lab::radio::{fit_coverage_map, ran_capacity, GridSpec, RanLinkConfig};
use ara_lab::telemetry::{
    power_model, power_trace, spectrum_scan, weather_feed, BsState, ExperimentEmission, PowerTable, PrimaryEmitter,
    ScanConfig, WeatherParams, WeatherSample, WeatherSource, NOISE_FLOOR_DBM, OCCUPANCY_MAX_DBM,
};
use proptest::prelude::*;

const RAN: [&str; 4] = ["AraMIMO-C", "AraMIMO-mm", "AraMIMO-TVWS", "AraSDR"];

fn ran_cfg(cat: &PlatformCatalog, id: &str, power_frac: f64) -> RanLinkConfig {
    let p = cat.get(id).unwrap();
    RanLinkConfig {
        platform: id.into(),
        tx_power_w: p.max_tx_power_w * power_frac,
        bandwidth_hz: p.max_bandwidth_hz,
        carrier_hz: p.center_freq_hz(),
    }
}

fn state(i: u8, k: u32) -> BsState {
    match i % 5 {
        0 => BsState::Off,
        1 => BsState::IdleNoTx,
        2 => BsState::TxIdle,
        3 => BsState::Connected(k),
        _ => BsState::Transmitting(k),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn catalog_roundtrip(keep in proptest::collection::vec(any::<bool>(), 7), scale in 0.5f64..2.0, rot in 0usize..7) {
        let base: Vec<_> = PlatformCatalog::default_catalog().iter().cloned().collect();
        let mut list: Vec<_> = base.into_iter().zip(&keep).filter(|(_, k)| **k).map(|(p, _)| p).collect();
        prop_assume!(!list.is_empty());
        for p in &mut list {
            p.max_capacity_bps *= scale;
        }
        let n = list.len();
        list.rotate_left(rot % n);
        let cat = PlatformCatalog::from_platforms(list).unwrap();
        let text = cat.to_toml_string();
        let back = PlatformCatalog::from_toml_str(&text).unwrap();
        prop_assert_eq!(&back, &cat);
        prop_assert_eq!(back.to_toml_string(), text);
    }

    #[test]
    fn distance_is_symmetric(i in 0usize..64, j in 0usize..64) {
        let cat = PlatformCatalog::default_catalog();
        let topo = Topology::demo(&cat);
        let sites: Vec<_> = topo.sites().collect();
        let (a, b) = (sites[i % sites.len()], sites[j % sites.len()]);
        let (dab, pab) = distance_and_profile(a, b, topo.terrain());
        let (dba, pba) = distance_and_profile(b, a, topo.terrain());
        prop_assert_eq!(dab, dba);
        prop_assert_eq!(pba, pab.reversed());
    }

    #[test]
    fn ran_capacity_monotone_and_capped(
        which in 0usize..4, d1 in 10.0f64..20_000.0, d2 in 10.0f64..20_000.0, p1 in 0.01f64..1.0, p2 in 0.01f64..1.0,
    ) {
        let cat = PlatformCatalog::default_catalog();
        let id = RAN[which];
        prop_assert_eq!(cat.get(id).unwrap().kind, PlatformKind::Ran);
        let cap = |d: f64, p: f64| {
            ran_capacity(&cat, &ran_cfg(&cat, id, p), d, &TerrainProfile::straight(d, 0.0, 0.0), &WeatherSample::clear()).unwrap()
        };
        let (near, far) = (d1.min(d2), d1.max(d2));
        let (lo, hi) = (p1.min(p2), p1.max(p2));
        prop_assert!(cap(far, hi) <= cap(near, hi));
        prop_assert!(cap(near, lo) <= cap(near, hi));
        let max = cat.get(id).unwrap().max_capacity_bps;
        prop_assert!(cap(near, hi) <= max && cap(near, hi) >= 0.0);
    }

    #[test]
    fn coverage_maximum_principle(samples in proptest::collection::vec((0usize..15, 0usize..12, -110.0f64..-40.0), 1..20)) {
        let spec = GridSpec { origin: (0.0, 0.0), cell_m: 10.0, width: 15, height: 12 };
        let pts: Vec<_> = samples.iter().map(|&(c, r, v)| ((c as f64 * 10.0 + 5.0, r as f64 * 10.0 + 5.0), v)).collect();
        let g = fit_coverage_map(&pts, spec, 1e-9, 50_000).unwrap();
        // Duplicate cells average, so bound by the per-cell values actually held.
        let held: Vec<f64> = (0..12).flat_map(|r| (0..15).map(move |c| (r, c)))
            .filter(|&(r, c)| g.is_sample(r, c)).map(|(r, c)| g.get(r, c)).collect();
        let lo = held.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = held.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for v in &g.values {
            prop_assert!(*v >= lo - 1e-9 && *v <= hi + 1e-9);
        }
    }

    #[test]
    fn occupancy_dims_and_clipping(
        width_mhz in prop_oneof![Just(6.0f64), Just(8.0), Just(12.0)],
        duration in 1u32..120,
        prim in proptest::collection::vec((0usize..50, -150.0f64..10.0, 0.0f64..1.0), 0..10),
        eirp in -20.0f64..120.0,
        seed in any::<u64>(),
    ) {
        let cfg = ScanConfig {
            band_low_hz: 470e6,
            band_high_hz: 470e6 + 24.0 * width_mhz * 1e6,
            channel_width_hz: width_mhz * 1e6,
            duration_s: duration,
            slot_s: 1.0,
        };
        let primaries: Vec<_> = prim.iter().map(|&(channel, rx_dbm, duty)| PrimaryEmitter {
            channel, rx_dbm, start_slot: 0, end_slot: usize::MAX, duty,
        }).collect();
        let em = ExperimentEmission {
            experiment: "e".into(), position: (10.0, 0.0), freq_low_hz: 500e6, freq_high_hz: 520e6,
            eirp_dbm: eirp, start_slot: 0, end_slot: 5,
        };
        let g = spectrum_scan("s", (0.0, 0.0), &cfg, &primaries, &[em], RngStream::new(seed, 0)).unwrap();
        prop_assert_eq!((g.channels, g.slots), (24, duration as usize));
        prop_assert_eq!(g.values().len(), 24 * duration as usize);
        prop_assert!(g.values().iter().all(|v| (NOISE_FLOOR_DBM..=OCCUPANCY_MAX_DBM).contains(v)));
    }

    #[test]
    fn site_total_is_sum_of_components(s in 0u8..5, k in 0u32..12, phases in proptest::collection::vec((1.0f64..5.0, 0u8..5), 1..5)) {
        let t = PowerTable::default();
        let mut readings = vec![power_model(&t, "rh", state(s, k))];
        let phases: Vec<_> = phases.iter().map(|&(d, i)| (d, state(i, k))).collect();
        readings.extend(power_trace(&t, "rh", &phases, 1.0));
        for r in readings {
            let w: f64 = r.components.iter().map(|c| c.watts).sum();
            let a: f64 = r.components.iter().map(|c| c.amps).sum();
            prop_assert_eq!(r.total_watts, w);
            prop_assert_eq!(r.total_amps, a);
            prop_assert!(r.components.iter().all(|c| c.watts >= 0.0 && c.amps >= 0.0));
        }
    }

    #[test]
    fn weather_feed_is_deterministic(seed in any::<u64>(), hours in 1.0f64..12.0) {
        let sites = vec!["a".to_string(), "b".to_string()];
        let p = WeatherParams::default();
        let run = || weather_feed(&sites, hours * 3600.0, &p, WeatherSource::Synthetic(RngStream::new(seed, 3))).unwrap();
        let (x, y) = (run(), run());
        prop_assert_eq!(&x, &y);
        for v in x.values() {
            prop_assert!(v.iter().all(|s| s.rain_rate_mm_h >= 0.0));
        }
    }
}
