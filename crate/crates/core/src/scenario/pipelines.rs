use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{sha256_hex, InputRef, Pipeline, Result, Scenario, ScenarioError, Sink};
use crate::domain::{RngStream, TerrainProfile};
use crate::fsoc::{
    beacon_roundtrip, fsoc_rx_power, ook_ber, run_alignment, scintillation_series, write_alignment_csv,
    AlignmentMode, AlignmentSim, AlignmentState, AlignmentThresholds, BeaconFrame,
};
use crate::ltl::{stream_session, write_fps_csv, CapacityTrace, SessionConfig, Transport};
use crate::mimo::{
    aggregate_capacity, schedule_rbs, synthesize_channels, write_histogram_csv, write_schedule_csv,
    CorrelationMode, FieldLayout, RbPlan, Schedule, SchedulerParams, SchedulingPolicy,
};
use crate::orchestrator::{admission_fuzz, guard_fuzz, Orchestrator, OrchestratorConfig};
use crate::radio::{capacity_profile, fit_coverage_map, route_from_profile, write_profile_csv, GridSpec, RanLink, RanLinkConfig};
use crate::stack::{delay_cdf, layer_contributions, simulate_traffic, write_event_log, SinrProfile, StackConfig};
use crate::telemetry::{
    default_rural_primaries, power_trace, spectrum_scan, weather_feed, write_weather_csv, BsState, MeasurementRecord,
    PowerTable, PrimaryEmitter, ScanConfig, Unit, WeatherParams, WeatherSample, WeatherSource,
};
use crate::xhaul::{xhaul_link_state, Modulation, XhaulLinkConfig};

/// Stream ids for the per-pipeline random sources.
mod stream {
    pub const COVERAGE: u64 = 100;
    pub const MIMO: u64 = 200;
    pub const WEATHER: u64 = 300;
    pub const FSOC: u64 = 400;
    pub const BEACON: u64 = 410;
    pub const STACK: u64 = 500;
    pub const ORCH_ADMISSION: u64 = 600;
    pub const ORCH_GUARD: u64 = 610;
    pub const SCAN: u64 = 700;
}

pub(super) fn check(s: &Scenario) -> Result<()> {
    match s.pipeline {
        Pipeline::CapacityProfile => capacity::params(s).map(drop),
        Pipeline::CoverageMap => coverage::params(s).map(drop),
        Pipeline::MimoSets => mimo::params(s).map(drop),
        Pipeline::XhaulWeather => xhaul::params(s).map(drop),
        Pipeline::FsocAlign => fsoc::params(s).map(drop),
        Pipeline::DelayCdf => delay::params(s).map(drop),
        Pipeline::LtlQoe => ltl::params(s).map(drop),
        Pipeline::OrchestratorFuzz => orch::params(s).map(drop),
        Pipeline::Telemetry => telemetry::params(s).map(drop),
    }
}

pub(super) fn run(s: &Scenario, out: &mut Sink) -> Result<()> {
    let mut metrics = Vec::new();
    match s.pipeline {
        Pipeline::CapacityProfile => capacity::run(s, out, &mut metrics)?,
        Pipeline::CoverageMap => coverage::run(s, out, &mut metrics)?,
        Pipeline::MimoSets => mimo::run(s, out, &mut metrics)?,
        Pipeline::XhaulWeather => xhaul::run(s, out, &mut metrics)?,
        Pipeline::FsocAlign => fsoc::run(s, out, &mut metrics)?,
        Pipeline::DelayCdf => delay::run(s, out, &mut metrics)?,
        Pipeline::LtlQoe => ltl::run(s, out, &mut metrics)?,
        Pipeline::OrchestratorFuzz => orch::run(s, out, &mut metrics)?,
        Pipeline::Telemetry => telemetry::run(s, out, &mut metrics)?,
    }
    out.put_jsonl("metrics.jsonl", &metrics)
}

type Metrics = Vec<MeasurementRecord>;

fn metric(s: &Scenario, m: &mut Metrics, name: &str, value: f64, unit: Unit) {
    m.push(MeasurementRecord::new(0.0, &s.name, name, value, unit));
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> std::result::Result<(), String>) -> std::result::Result<Vec<u8>, String> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ScenarioError::Params(format!("{name} must be positive, got {v}")))
    }
}

mod capacity {
    use super::*;

    #[derive(Debug, Deserialize)]
    #[serde(default, deny_unknown_fields)]
    pub struct Params {
        pub links: Vec<RanLinkConfig>,
        pub distances_m: Vec<f64>,
        pub route: Option<Route>,
    }

    #[derive(Debug, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct Route {
        pub from: String,
        pub to: String,
        #[serde(default = "hundred")]
        pub step_m: f64,
    }

    fn hundred() -> f64 {
        100.0
    }

    pub fn link(platform: &str, w: f64, b: f64, f: f64) -> RanLinkConfig {
        RanLinkConfig {
            platform: platform.into(),
            tx_power_w: w,
            bandwidth_hz: b,
            carrier_hz: f,
        }
    }

    impl Default for Params {
        fn default() -> Self {
            let mut d: Vec<f64> = (1..=200).map(|i| i as f64 * 50.0).collect();
            d.extend([170.0, 1200.0, 8600.0]);
            d.sort_by(f64::total_cmp);
            d.dedup();
            Self {
                links: vec![
                    link("AraMIMO-TVWS", 10.0, 24e6, 539e6),
                    link("AraMIMO-C", 128.0, 100e6, 3.5e9),
                    link("AraMIMO-mm", 128.0, 400e6, 27.7e9),
                    link("AraSDR", 0.01, 40e6, 3.5e9),
                ],
                distances_m: d,
                route: None,
            }
        }
    }

    pub fn params(s: &Scenario) -> Result<Params> {
        let p: Params = s.params()?;
        if p.links.is_empty() || p.distances_m.is_empty() {
            return Err(ScenarioError::Params("links and distances_m must be non-empty".into()));
        }
        for d in &p.distances_m {
            positive("distances_m entry", *d)?;
        }
        for l in &p.links {
            RanLink::new(&s.catalog, l).map_err(|e| ScenarioError::Params(e.to_string()))?;
        }
        if let Some(r) = &p.route {
            positive("route.step_m", r.step_m)?;
            if s.topology.terrain().lookup(&r.from, &r.to).is_none() {
                return Err(ScenarioError::Params(format!("no terrain path {} -> {}", r.from, r.to)));
            }
        }
        Ok(p)
    }

    fn name(l: &RanLinkConfig) -> String {
        format!("{}@{}W", l.platform, l.tx_power_w)
    }

    pub fn run(s: &Scenario, out: &mut Sink, m: &mut Metrics) -> Result<()> {
        let p = params(s)?;
        let clear = WeatherSample::clear();
        let route: Vec<(f64, TerrainProfile)> =
            p.distances_m.iter().map(|&d| (d, TerrainProfile::straight(d, 0.0, 0.0))).collect();
        let mut series = Vec::new();
        for l in &p.links {
            let link = RanLink::new(&s.catalog, l).map_err(|e| s.fail(e))?;
            let prof = capacity_profile(&link, &route, &clear);
            let reach = prof.iter().filter(|(_, c)| *c > 0.0).map(|(d, _)| *d).fold(0.0, f64::max);
            metric(s, m, &format!("{}.reach_m", name(l)), reach, Unit::Meters);
            metric(s, m, &format!("{}.peak_bps", name(l)), prof.iter().map(|x| x.1).fold(0.0, f64::max), Unit::BitsPerSecond);
            series.push((name(l), prof));
        }
        let bytes = csv_bytes(|b| write_profile_csv(b, &series).map_err(|e| e.to_string())).map_err(|e| s.fail(e))?;
        out.put("capacity.csv", &bytes)?;

        if let Some(r) = &p.route {
            let profile = s.topology.terrain().lookup(&r.from, &r.to).expect("checked");
            let pts = route_from_profile(&profile, r.step_m);
            let mut series = Vec::new();
            for l in &p.links {
                let link = RanLink::new(&s.catalog, l).map_err(|e| s.fail(e))?;
                series.push((name(l), capacity_profile(&link, &pts, &clear)));
            }
            let bytes = csv_bytes(|b| write_profile_csv(b, &series).map_err(|e| e.to_string())).map_err(|e| s.fail(e))?;
            out.put("route.csv", &bytes)?;
        }
        Ok(())
    }
}

mod coverage {
    use super::*;

    #[derive(Debug, Deserialize)]
    #[serde(default, deny_unknown_fields)]
    pub struct Params {
        pub site: String,
        pub link: RanLinkConfig,
        pub cell_m: f64,
        pub width: usize,
        pub height: usize,
        pub samples: usize,
        pub shadowing_db: f64,
        pub tolerance: f64,
        pub max_iters: usize,
    }

    impl Default for Params {
        fn default() -> Self {
            Self {
                site: "wilson-hall".into(),
                link: capacity::link("AraMIMO-TVWS", 10.0, 24e6, 539e6),
                cell_m: 200.0,
                width: 60,
                height: 60,
                samples: 120,
                shadowing_db: 3.0,
                tolerance: 1e-6,
                max_iters: 50_000,
            }
        }
    }

    pub fn params(s: &Scenario) -> Result<Params> {
        let p: Params = s.params()?;
        s.topology.require_site(&p.site).map_err(|e| ScenarioError::Params(e.to_string()))?;
        RanLink::new(&s.catalog, &p.link).map_err(|e| ScenarioError::Params(e.to_string()))?;
        positive("cell_m", p.cell_m)?;
        positive("tolerance", p.tolerance)?;
        if p.width == 0 || p.height == 0 || p.samples == 0 {
            return Err(ScenarioError::Params("width, height and samples must be positive".into()));
        }
        if p.shadowing_db < 0.0 {
            return Err(ScenarioError::Params("shadowing_db must be non-negative".into()));
        }
        Ok(p)
    }

    pub fn run(s: &Scenario, out: &mut Sink, m: &mut Metrics) -> Result<()> {
        let p = params(s)?;
        let site = s.topology.require_site(&p.site).map_err(|e| s.fail(e))?;
        let (sx, sy) = site.position();
        let spec = GridSpec {
            origin: (sx - p.width as f64 * p.cell_m / 2.0, sy - p.height as f64 * p.cell_m / 2.0),
            cell_m: p.cell_m,
            width: p.width,
            height: p.height,
        };
        let link = RanLink::new(&s.catalog, &p.link).map_err(|e| s.fail(e))?;
        let clear = WeatherSample::clear();
        let mut r = RngStream::new(s.seed, stream::COVERAGE).rng();
        let mut samples = Vec::with_capacity(p.samples);
        for _ in 0..p.samples {
            let x = spec.origin.0 + r.random::<f64>() * p.width as f64 * p.cell_m;
            let y = spec.origin.1 + r.random::<f64>() * p.height as f64 * p.cell_m;
            let d = (x - sx).hypot(y - sy).max(10.0);
            let n: f64 = r.sample(StandardNormal);
            let v = link.snr_db(d, &TerrainProfile::straight(d, 0.0, 0.0), &clear) + p.shadowing_db * n;
            samples.push(((x, y), v));
        }
        let grid = fit_coverage_map(&samples, spec, p.tolerance, p.max_iters).map_err(|e| s.fail(e))?;
        let mut buf = Vec::new();
        grid.write_csv(&mut buf).map_err(|e| s.fail(e))?;
        out.put("coverage.csv", &buf)?;
        let mut text = String::from("x_m,y_m,snr_db\n");
        for ((x, y), v) in &samples {
            writeln!(text, "{x:.2},{y:.2},{v:.4}").unwrap();
        }
        out.put("samples.csv", text.as_bytes())?;
        metric(s, m, "converged", grid.converged as u8 as f64, Unit::Count);
        metric(s, m, "iterations", grid.iterations as f64, Unit::Count);
        metric(s, m, "residual_db", grid.residual, Unit::Db);
        Ok(())
    }
}

mod mimo {
    use super::*;

    #[derive(Debug, Deserialize)]
    #[serde(default, deny_unknown_fields)]
    pub struct Params {
        pub layout: FieldLayout,
        pub plan: RbPlan,
        pub threshold: f64,
        pub mode: CorrelationMode,
        pub se_cap: f64,
    }

    impl Default for Params {
        fn default() -> Self {
            let d = SchedulerParams::default();
            Self {
                layout: FieldLayout::default(),
                plan: RbPlan::default(),
                threshold: d.threshold,
                mode: d.mode,
                se_cap: d.se_cap,
            }
        }
    }

    pub fn params(s: &Scenario) -> Result<Params> {
        let p: Params = s.params()?;
        if p.plan.n_rbs == 0 || p.layout.antennas == 0 {
            return Err(ScenarioError::Params("plan.n_rbs and layout.antennas must be positive".into()));
        }
        positive("plan.rb_bandwidth_hz", p.plan.rb_bandwidth_hz)?;
        positive("se_cap", p.se_cap)?;
        if !(0.0..=1.0).contains(&p.layout.cluster_correlation) || !(0.0..=1.0).contains(&p.threshold) {
            return Err(ScenarioError::Params("cluster_correlation and threshold must lie in [0, 1]".into()));
        }
        Ok(p)
    }

    #[derive(Serialize)]
    struct SetSummary {
        set: String,
        ues: Vec<String>,
        streams: usize,
        greedy_bps: f64,
        force_all_bps: f64,
        max_group_size: usize,
    }

    /// Mean of the per-RB mean orthogonality, by group size.
    fn orthogonality_rows(name: &str, sched: &Schedule, text: &mut String) {
        let mut acc: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
        for g in sched.rbs.iter().filter(|g| g.streams.len() >= 2) {
            let e = acc.entry(g.streams.len()).or_insert((0.0, 0));
            e.0 += g.orthogonality_mean;
            e.1 += 1;
        }
        for (size, (sum, n)) in acc {
            writeln!(text, "{name},{size},{:.6},{n}", sum / n as f64).unwrap();
        }
    }

    pub fn run(s: &Scenario, out: &mut Sink, m: &mut Metrics) -> Result<()> {
        let p = params(s)?;
        let sp = SchedulerParams {
            threshold: p.threshold,
            mode: p.mode,
            tx_power_w: 1.0,
            noise_w: 1.0,
            se_cap: p.se_cap,
        };
        let mut summaries = Vec::new();
        let mut greedy = Vec::new();
        let mut forced = Vec::new();
        for (i, set) in p.layout.sets().into_iter().enumerate() {
            let rng = RngStream::new(s.seed, stream::MIMO).substream(i as u64);
            let ch = synthesize_channels(&set, p.plan.n_rbs, 1.0, 1.0, rng).map_err(|e| s.fail(e))?;
            let g = schedule_rbs(&ch, &p.plan, SchedulingPolicy::Greedy, &sp);
            let f = schedule_rbs(&ch, &p.plan, SchedulingPolicy::ForceAll, &sp);
            metric(s, m, &format!("{}.greedy_bps", set.name), aggregate_capacity(&g), Unit::BitsPerSecond);
            metric(s, m, &format!("{}.force_all_bps", set.name), aggregate_capacity(&f), Unit::BitsPerSecond);
            summaries.push(SetSummary {
                set: set.name.clone(),
                ues: set.ues.iter().map(|u| u.id.clone()).collect(),
                streams: set.stream_count(),
                greedy_bps: aggregate_capacity(&g),
                force_all_bps: aggregate_capacity(&f),
                max_group_size: g.max_group_size(),
            });
            let mut buf = Vec::new();
            write_schedule_csv(&mut buf, &g).map_err(|e| s.fail(e))?;
            out.put(&format!("schedule_{}.csv", set.name), &buf)?;
            greedy.push((set.name.clone(), g));
            forced.push((set.name.clone(), f));
        }
        let refs: Vec<(String, &Schedule)> = greedy.iter().map(|(n, g)| (n.clone(), g)).collect();
        let mut buf = Vec::new();
        write_histogram_csv(&mut buf, &refs).map_err(|e| s.fail(e))?;
        out.put("group_sizes.csv", &buf)?;
        let mut text = String::from("set,group_size,mean_orthogonality,rbs\n");
        for (n, g) in &greedy {
            orthogonality_rows(n, g, &mut text);
        }
        for (n, f) in &forced {
            orthogonality_rows(&format!("{n}-forced"), f, &mut text);
        }
        out.put("orthogonality.csv", text.as_bytes())?;
        out.put_json("sets.json", &summaries)
    }
}

mod xhaul {
    use super::*;

    #[derive(Debug, Deserialize)]
    #[serde(default, deny_unknown_fields)]
    pub struct Params {
        pub distance_km: f64,
        pub links: Vec<XhaulLinkConfig>,
        pub rain_rates_mm_h: Vec<f64>,
        pub site: String,
        pub duration_s: f64,
        pub weather: WeatherParams,
    }

    impl Default for Params {
        fn default() -> Self {
            Self {
                distance_km: 10.15,
                links: vec![
                    XhaulLinkConfig {
                        platform: "AraHaul-micro".into(),
                        carrier_hz: 11e9,
                        bandwidth_hz: 100e6,
                        mcs: Modulation(4096),
                        tx_power_dbm: 26.0,
                    },
                    XhaulLinkConfig {
                        platform: "AraHaul-mm".into(),
                        carrier_hz: 80e9,
                        bandwidth_hz: 2e9,
                        mcs: Modulation(32),
                        tx_power_dbm: 13.0,
                    },
                ],
                rain_rates_mm_h: (0..=20).map(|i| i as f64 * 5.0).collect(),
                site: "wilson-hall".into(),
                duration_s: 86_400.0,
                weather: WeatherParams::default(),
            }
        }
    }

    pub fn params(s: &Scenario) -> Result<Params> {
        let p: Params = s.params()?;
        positive("distance_km", p.distance_km)?;
        positive("duration_s", p.duration_s)?;
        if p.rain_rates_mm_h.iter().any(|r| !(*r >= 0.0)) {
            return Err(ScenarioError::Params("rain rates must be non-negative".into()));
        }
        for l in &p.links {
            xhaul_link_state(&s.catalog, l, p.distance_km, &WeatherSample::clear())
                .map_err(|e| ScenarioError::Params(e.to_string()))?;
        }
        s.topology.require_site(&p.site).map_err(|e| ScenarioError::Params(e.to_string()))?;
        Ok(p)
    }

    #[derive(Serialize)]
    struct Anchor {
        platform: String,
        carrier_hz: f64,
        bandwidth_hz: f64,
        modulation: String,
        distance_km: f64,
        rsl_dbm: f64,
        throughput_bps: f64,
        limit_bps: f64,
    }

    pub fn run(s: &Scenario, out: &mut Sink, m: &mut Metrics) -> Result<()> {
        let p = params(s)?;
        let clear = WeatherSample::clear();
        let mut anchors = Vec::new();
        for l in &p.links {
            let st = xhaul_link_state(&s.catalog, l, p.distance_km, &clear).map_err(|e| s.fail(e))?;
            metric(s, m, &format!("{}.clear_bps", l.platform), st.throughput_bps, Unit::BitsPerSecond);
            anchors.push(Anchor {
                platform: l.platform.clone(),
                carrier_hz: l.carrier_hz,
                bandwidth_hz: l.bandwidth_hz,
                modulation: l.mcs.to_string(),
                distance_km: p.distance_km,
                rsl_dbm: st.rsl_dbm,
                throughput_bps: st.throughput_bps,
                limit_bps: st.limit_bps,
            });
        }
        out.put_json("anchors.json", &anchors)?;

        let mut text = String::from("rain_mm_h,platform,rsl_dbm,snr_db,throughput_bps\n");
        for &rate in &p.rain_rates_mm_h {
            for l in &p.links {
                let st = xhaul_link_state(&s.catalog, l, p.distance_km, &WeatherSample::rain(rate)).map_err(|e| s.fail(e))?;
                writeln!(text, "{rate},{},{:.4},{:.4},{:.1}", l.platform, st.rsl_dbm, st.snr_db, st.throughput_bps).unwrap();
            }
        }
        out.put("rain_sweep.csv", text.as_bytes())?;

        let feed = weather_feed(
            std::slice::from_ref(&p.site),
            p.duration_s,
            &p.weather,
            WeatherSource::Synthetic(RngStream::new(s.seed, stream::WEATHER)),
        )
        .map_err(|e| s.fail(e))?;
        let series = &feed[&p.site];
        let mut buf = Vec::new();
        write_weather_csv(&mut buf, series).map_err(|e| s.fail(e))?;
        out.put("weather.csv", &buf)?;
        let mut text = String::from("time_s,rain_mm_h");
        for l in &p.links {
            write!(text, ",{}", l.platform).unwrap();
        }
        text.push('\n');
        let mut mean = vec![0.0; p.links.len()];
        for w in series {
            write!(text, "{},{:.3}", w.time_s, w.rain_rate_mm_h).unwrap();
            for (i, l) in p.links.iter().enumerate() {
                let st = xhaul_link_state(&s.catalog, l, p.distance_km, w).map_err(|e| s.fail(e))?;
                mean[i] += st.throughput_bps / series.len() as f64;
                write!(text, ",{:.1}", st.throughput_bps).unwrap();
            }
            text.push('\n');
        }
        out.put("link_series.csv", text.as_bytes())?;
        for (l, v) in p.links.iter().zip(mean) {
            metric(s, m, &format!("{}.mean_bps", l.platform), v, Unit::BitsPerSecond);
        }
        Ok(())
    }
}

mod fsoc {
    use super::*;

    #[derive(Debug, Deserialize)]
    #[serde(default, deny_unknown_fields)]
    pub struct Params {
        pub initial_error_rad: (f64, f64),
        pub rain_mm_h: f64,
        pub scintillation: bool,
        pub max_frames: usize,
        /// Frames logged after lock.
        pub track_frames: usize,
        pub thresholds: AlignmentThresholds,
        pub beacon_snr_db: Vec<f64>,
        pub beacon_frames: usize,
    }

    impl Default for Params {
        fn default() -> Self {
            Self {
                initial_error_rad: (0.05, -0.03),
                rain_mm_h: 0.0,
                scintillation: true,
                max_frames: 100_000,
                track_frames: 500,
                thresholds: AlignmentThresholds::default(),
                beacon_snr_db: vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0],
                beacon_frames: 200,
            }
        }
    }

    pub fn params(s: &Scenario) -> Result<Params> {
        let p: Params = s.params()?;
        let lim = p.thresholds.coarse_range_rad;
        if p.initial_error_rad.0.abs() > lim || p.initial_error_rad.1.abs() > lim {
            return Err(ScenarioError::Params(format!("initial error outside +-{lim} rad")));
        }
        if !(p.rain_mm_h >= 0.0) || p.max_frames == 0 {
            return Err(ScenarioError::Params("rain_mm_h must be non-negative and max_frames positive".into()));
        }
        Ok(p)
    }

    pub fn run(s: &Scenario, out: &mut Sink, m: &mut Metrics) -> Result<()> {
        let p = params(s)?;
        let mut sim = AlignmentSim::new(p.initial_error_rad);
        sim.weather = WeatherSample::rain(p.rain_mm_h);
        let total = p.max_frames + p.track_frames;
        let fades: Vec<f64> = if p.scintillation {
            scintillation_series(
                &sim.scint,
                p.rain_mm_h,
                total as f64 * sim.frame_dt_s,
                sim.frame_dt_s,
                RngStream::new(s.seed, stream::FSOC).substream(1),
            )
            .iter()
            .map(|x| x.fade_db)
            .collect()
        } else {
            Vec::new()
        };
        let rng = RngStream::new(s.seed, stream::FSOC);
        let first = run_alignment(&sim, &p.thresholds, AlignmentState::default(), p.max_frames, Some(&fades), true, rng);
        let run = match first.locked_frame {
            Some(k) => {
                run_alignment(&sim, &p.thresholds, AlignmentState::default(), k + 1 + p.track_frames, Some(&fades), false, rng)
            }
            None => first,
        };
        let mut buf = Vec::new();
        write_alignment_csv(&mut buf, &run.log).map_err(|e| s.fail(e))?;
        out.put("alignment.csv", &buf)?;
        out.put_jsonl("transitions.jsonl", &run.transitions)?;

        let locked = run.final_state.mode == AlignmentMode::Locked;
        let e = sim.error(run.final_state.motor_position);
        let err = e.0.hypot(e.1);
        let rx = fsoc_rx_power(&sim.spec, sim.distance_km, err, &sim.weather, 0.0);
        metric(s, m, "locked", locked as u8 as f64, Unit::Count);
        if let Some(k) = run.locked_frame {
            metric(s, m, "lock_time_s", k as f64 * sim.frame_dt_s, Unit::Seconds);
        }
        metric(s, m, "residual_error_rad", err, Unit::Radians);
        metric(s, m, "rx_power_dbm", rx, Unit::Dbm);
        metric(s, m, "margin_db", rx - sim.spec.rx_sensitivity_dbm, Unit::Db);

        let payload: Vec<u8> = (0..32u8).collect();
        let frame = BeaconFrame {
            rx_power_report_dbm: (rx * 100.0).round() / 100.0,
            payload,
        };
        let mut text = String::from("snr_db,bits,bit_errors,ber,ber_theory,frames_lost\n");
        for (i, &snr) in p.beacon_snr_db.iter().enumerate() {
            let base = RngStream::new(s.seed, stream::BEACON).substream(i as u64);
            let (mut bits, mut errs, mut lost) = (0u64, 0u64, 0u64);
            for f in 0..p.beacon_frames {
                let r = beacon_roundtrip(&frame, snr, base.substream(f as u64));
                bits += r.bits_sent as u64;
                errs += r.bit_errors as u64;
                lost += r.frame_lost as u64;
            }
            let ber = errs as f64 / bits.max(1) as f64;
            writeln!(text, "{snr},{bits},{errs},{ber:.6e},{:.6e},{lost}", ook_ber(snr)).unwrap();
        }
        out.put("beacon.csv", text.as_bytes())
    }
}

mod delay {
    use super::*;

    #[derive(Debug, Deserialize)]
    #[serde(default, deny_unknown_fields)]
    pub struct Params {
        pub packets: usize,
        pub size_bytes: u64,
        pub spacing_ms: f64,
        pub bound_ms: f64,
        pub profiles: BTreeMap<String, SinrProfile>,
        pub stack: StackConfig,
    }

    impl Default for Params {
        fn default() -> Self {
            Self {
                packets: 100,
                size_bytes: 100_000,
                spacing_ms: 10.0,
                bound_ms: 10.0,
                profiles: BTreeMap::from([
                    ("no_rain".to_string(), SinrProfile::no_rain()),
                    ("rain".to_string(), SinrProfile::rain()),
                ]),
                stack: StackConfig::default(),
            }
        }
    }

    pub fn params(s: &Scenario) -> Result<Params> {
        let p: Params = s.params()?;
        p.stack.validate().map_err(|e| ScenarioError::Params(e.to_string()))?;
        positive("bound_ms", p.bound_ms)?;
        positive("spacing_ms", p.spacing_ms)?;
        if p.packets == 0 || p.size_bytes == 0 || p.profiles.is_empty() {
            return Err(ScenarioError::Params("packets, size_bytes and profiles must be non-empty".into()));
        }
        for name in p.profiles.keys() {
            if !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(ScenarioError::Params(format!("profile name '{name}' is not file-safe")));
            }
        }
        Ok(p)
    }

    pub fn run(s: &Scenario, out: &mut Sink, m: &mut Metrics) -> Result<()> {
        let p = params(s)?;
        let mut cdf_text = String::from("profile,delay_ms,fraction\n");
        let mut layer_text = String::from("profile,layer,mean_ms,ci95_ms\n");
        for (i, (name, profile)) in p.profiles.iter().enumerate() {
            let rng = RngStream::new(s.seed, stream::STACK).substream(i as u64);
            let (journeys, events) =
                simulate_traffic(p.packets, p.size_bytes, p.spacing_ms, profile, &p.stack, rng).map_err(|e| s.fail(e))?;
            let mut buf = Vec::new();
            write_event_log(&mut buf, &events).map_err(|e| s.fail(e))?;
            out.put(&format!("events_{name}.log"), &buf)?;
            let cdf = delay_cdf(&journeys, p.bound_ms).map_err(|e| s.fail(e))?;
            for (d, f) in &cdf.points {
                writeln!(cdf_text, "{name},{d:.6},{f:.6}").unwrap();
            }
            metric(s, m, &format!("{name}.fraction_within_bound"), cdf.fraction_within_bound, Unit::Ratio);
            for l in layer_contributions(&journeys).map_err(|e| s.fail(e))? {
                writeln!(layer_text, "{name},{},{:.6},{:.6}", l.layer, l.mean_ms, l.ci95_ms).unwrap();
                metric(s, m, &format!("{name}.{}_mean_ms", l.layer), l.mean_ms, Unit::Milliseconds);
            }
        }
        out.put("delay_cdf.csv", cdf_text.as_bytes())?;
        out.put("layers.csv", layer_text.as_bytes())
    }
}

mod ltl {
    use super::*;

    #[derive(Debug, Deserialize)]
    #[serde(default, deny_unknown_fields)]
    pub struct Params {
        /// CSV trace relative to the config; the shipped bad-connectivity
        /// trace when absent.
        pub trace: Option<PathBuf>,
        pub session: SessionConfig,
        pub transports: Vec<Transport>,
        /// Session seeds; the scenario seed when empty.
        pub seeds: Vec<u64>,
    }

    impl Default for Params {
        fn default() -> Self {
            Self {
                trace: None,
                session: SessionConfig::default(),
                transports: vec![Transport::Udp, Transport::Ltl { overhead: 0.2 }],
                seeds: Vec::new(),
            }
        }
    }

    pub fn params(s: &Scenario) -> Result<Params> {
        let p: Params = s.params()?;
        if p.transports.is_empty() {
            return Err(ScenarioError::Params("transports must be non-empty".into()));
        }
        load_trace(s, &p)?;
        Ok(p)
    }

    fn load_trace(s: &Scenario, p: &Params) -> Result<(CapacityTrace, Option<InputRef>)> {
        match &p.trace {
            None => Ok((CapacityTrace::bad_connectivity(), None)),
            Some(rel) => {
                let path = s.base_dir.join(rel);
                let bytes = std::fs::read(&path).map_err(super::super::io_err(&path))?;
                let t = CapacityTrace::from_csv(bytes.as_slice()).map_err(|e| ScenarioError::Input(e.to_string()))?;
                Ok((
                    t,
                    Some(InputRef {
                        source: rel.display().to_string(),
                        sha256: sha256_hex(&bytes),
                    }),
                ))
            }
        }
    }

    #[derive(Serialize)]
    struct Row<'a> {
        seed: u64,
        transport: &'a str,
        frames: usize,
        displayed: usize,
        intact: usize,
        median_fps: f64,
        stall_ratio: f64,
        frame_intact_ratio: f64,
        delivered_bitrate_bps: f64,
    }

    pub fn run(s: &Scenario, out: &mut Sink, m: &mut Metrics) -> Result<()> {
        let p = params(s)?;
        let (trace, input) = load_trace(s, &p)?;
        if let Some(r) = input {
            out.input("trace", r);
        }
        let seeds = if p.seeds.is_empty() { vec![s.seed] } else { p.seeds.clone() };
        let mut rows = Vec::new();
        let mut first = Vec::new();
        for (i, &seed) in seeds.iter().enumerate() {
            for &t in &p.transports {
                let r = stream_session(&trace, &p.session, t, seed).map_err(|e| s.fail(e))?;
                rows.push(Row {
                    seed,
                    transport: t.name(),
                    frames: r.frames,
                    displayed: r.displayed,
                    intact: r.intact,
                    median_fps: r.median_fps,
                    stall_ratio: r.stall_ratio,
                    frame_intact_ratio: r.frame_intact_ratio,
                    delivered_bitrate_bps: r.delivered_bitrate_bps,
                });
                if i == 0 {
                    metric(s, m, &format!("{}.stall_ratio", r.transport), r.stall_ratio, Unit::Ratio);
                    metric(s, m, &format!("{}.frame_intact_ratio", r.transport), r.frame_intact_ratio, Unit::Ratio);
                    metric(s, m, &format!("{}.median_fps", r.transport), r.median_fps, Unit::FramesPerSecond);
                    first.push(r);
                }
            }
        }
        let mut buf = Vec::new();
        write_fps_csv(&mut buf, &first).map_err(|e| s.fail(e))?;
        out.put("fps.csv", &buf)?;
        let mut text = String::from("transport,fps,cdf\n");
        for r in &first {
            for (x, f) in r.fps_cdf() {
                writeln!(text, "{},{x},{f:.6}", r.transport).unwrap();
            }
        }
        out.put("fps_cdf.csv", text.as_bytes())?;
        out.put_jsonl("qoe.jsonl", &rows)
    }
}

mod orch {
    use super::*;

    #[derive(Debug, Deserialize)]
    #[serde(default, deny_unknown_fields)]
    pub struct Params {
        pub requests: usize,
        pub injections: usize,
        pub config: OrchestratorConfig,
    }

    impl Default for Params {
        fn default() -> Self {
            Self {
                requests: 10_000,
                injections: 1000,
                config: OrchestratorConfig::default(),
            }
        }
    }

    pub fn params(s: &Scenario) -> Result<Params> {
        let p: Params = s.params()?;
        positive("config.download_rate_bps", p.config.download_rate_bps)?;
        positive("config.sensing_interval_s", p.config.sensing_interval_s)?;
        if !(0.0..=1.0).contains(&p.config.start_fraction) {
            return Err(ScenarioError::Params("config.start_fraction must lie in [0, 1]".into()));
        }
        Ok(p)
    }

    pub fn run(s: &Scenario, out: &mut Sink, m: &mut Metrics) -> Result<()> {
        let p = params(s)?;
        let new = || Orchestrator::new(s.topology.clone(), s.catalog.clone(), p.config.clone());

        let mut o = new();
        let adm = admission_fuzz(&mut o, p.requests, &mut RngStream::new(s.seed, stream::ORCH_ADMISSION).rng());
        let mut buf = Vec::new();
        o.flush_log(&mut buf).map_err(|e| s.fail(e))?;
        out.put("calendar.jsonl", &buf)?;
        out.put_json("admission.json", &adm)?;
        metric(s, m, "requests", adm.requests as f64, Unit::Count);
        metric(s, m, "granted", adm.granted as f64, Unit::Count);
        metric(s, m, "safety_violations", adm.safety_violations.len() as f64, Unit::Count);

        let mut o = new();
        let g = guard_fuzz(&mut o, p.injections, &mut RngStream::new(s.seed, stream::ORCH_GUARD).rng());
        out.put_jsonl("guard_events.jsonl", o.guard_events())?;
        out.put_json("guard.json", &g)?;
        metric(s, m, "injections", g.injections as f64, Unit::Count);
        metric(s, m, "detected", g.detected as f64, Unit::Count);
        metric(s, m, "max_revocation_latency_s", g.max_latency_s, Unit::Seconds);
        Ok(())
    }
}

mod telemetry {
    use super::*;

    #[derive(Debug, Deserialize)]
    #[serde(default, deny_unknown_fields)]
    pub struct Params {
        /// Weather sites; every base station when empty.
        pub sites: Vec<String>,
        pub duration_s: f64,
        pub weather: WeatherParams,
        pub power_site: String,
        pub power_phases: Vec<(f64, BsState)>,
        pub power_dt_s: f64,
        pub scan_site: String,
        pub scan: ScanConfig,
        /// Incumbents; the default rural set when absent.
        pub primaries: Option<Vec<PrimaryEmitter>>,
    }

    impl Default for Params {
        fn default() -> Self {
            Self {
                sites: Vec::new(),
                duration_s: 86_400.0,
                weather: WeatherParams::default(),
                power_site: "residence-hall".into(),
                power_phases: vec![
                    (60.0, BsState::IdleNoTx),
                    (60.0, BsState::TxIdle),
                    (60.0, BsState::Connected(6)),
                    (60.0, BsState::Transmitting(6)),
                ],
                power_dt_s: 1.0,
                scan_site: "wilson-hall".into(),
                scan: ScanConfig::default(),
                primaries: None,
            }
        }
    }

    pub fn params(s: &Scenario) -> Result<Params> {
        let p: Params = s.params()?;
        positive("duration_s", p.duration_s)?;
        positive("power_dt_s", p.power_dt_s)?;
        for site in p.sites.iter().chain([&p.power_site, &p.scan_site]) {
            s.topology.require_site(site).map_err(|e| ScenarioError::Params(e.to_string()))?;
        }
        let ch = p.scan.channels().map_err(|e| ScenarioError::Params(e.to_string()))?;
        if let Some(pr) = &p.primaries {
            if let Some(bad) = pr.iter().find(|e| e.channel >= ch) {
                return Err(ScenarioError::Params(format!("primary on channel {} of {ch}", bad.channel)));
            }
        }
        Ok(p)
    }

    fn sites(s: &Scenario, p: &Params) -> Vec<String> {
        if p.sites.is_empty() {
            s.topology
                .sites_with_role(crate::domain::SiteRole::Bs)
                .map(|x| x.id.clone())
                .collect()
        } else {
            p.sites.clone()
        }
    }

    pub fn run(s: &Scenario, out: &mut Sink, m: &mut Metrics) -> Result<()> {
        let p = params(s)?;
        let sites = sites(s, &p);
        let feed = weather_feed(
            &sites,
            p.duration_s,
            &p.weather,
            WeatherSource::Synthetic(RngStream::new(s.seed, stream::WEATHER)),
        )
        .map_err(|e| s.fail(e))?;
        let all: Vec<WeatherSample> = feed.values().flatten().cloned().collect();
        let mut buf = Vec::new();
        write_weather_csv(&mut buf, &all).map_err(|e| s.fail(e))?;
        out.put("weather.csv", &buf)?;
        for (site, series) in &feed {
            let wet = series.iter().filter(|w| w.rain_rate_mm_h > 0.0).count() as f64 / series.len().max(1) as f64;
            metric(s, m, &format!("{site}.wet_fraction"), wet, Unit::Ratio);
        }

        let table = PowerTable::default();
        let trace = power_trace(&table, &p.power_site, &p.power_phases, p.power_dt_s);
        let mut text = String::from("time_s,site,state,component,watts,amps\n");
        for r in &trace {
            let state = serde_json::to_value(r.state).map_err(|e| s.fail(e))?;
            let state = match (&state["state"], &state["ues"]) {
                (serde_json::Value::String(n), serde_json::Value::Number(k)) => format!("{n}:{k}"),
                (serde_json::Value::String(n), _) => n.clone(),
                _ => state.to_string(),
            };
            for c in &r.components {
                let comp = serde_json::to_value(c.component).map_err(|e| s.fail(e))?;
                writeln!(
                    text,
                    "{},{},{state},{},{:.3},{:.3}",
                    r.time_s,
                    r.site,
                    comp.as_str().unwrap_or_default(),
                    c.watts,
                    c.amps
                )
                .unwrap();
            }
            writeln!(text, "{},{},{state},total,{:.3},{:.3}", r.time_s, r.site, r.total_watts, r.total_amps).unwrap();
        }
        out.put("power.csv", text.as_bytes())?;

        let site = s.topology.require_site(&p.scan_site).map_err(|e| s.fail(e))?;
        let primaries = p.primaries.clone().unwrap_or_else(default_rural_primaries);
        let grid = spectrum_scan(
            &p.scan_site,
            site.position(),
            &p.scan,
            &primaries,
            &[],
            RngStream::new(s.seed, stream::SCAN),
        )
        .map_err(|e| s.fail(e))?;
        let mut buf = Vec::new();
        grid.write_csv(&mut buf).map_err(|e| s.fail(e))?;
        out.put("occupancy.csv", &buf)?;
        let avail = grid.available_channels();
        metric(s, m, "available_channels", avail.len() as f64, Unit::Count);
        out.put_json("available_channels.json", &avail)
    }
}
