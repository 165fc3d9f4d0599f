use ara_lab::domain::RngStream;
use ara_lab::fsoc::{
    beacon_roundtrip, fsoc_rx_power, ook_ber, run_alignment, scintillation_series, step_alignment,
    AlignmentMode, AlignmentSim, AlignmentState, AlignmentThresholds, BeaconFrame, OpticalLinkSpec,
    ScintParams, SensorFrame,
};
use ara_lab::telemetry::WeatherSample;
use proptest::prelude::*;

#[test]
fn converges_from_grid_of_offsets() {
    let thr = AlignmentThresholds::default();
    let rings = (thr.coarse_range_rad / thr.coarse_step_rad).ceil() as usize;
    let bound = (2 * rings + 1).pow(2) + 2_000;
    let lim = 6f64.to_radians();
    let mut worst = 0;
    for i in 0..10 {
        for j in 0..10 {
            let az = -lim + 2.0 * lim * i as f64 / 9.0;
            let el = -lim + 2.0 * lim * j as f64 / 9.0;
            let sim = AlignmentSim::new((az, el));
            let run = run_alignment(&sim, &thr, AlignmentState::default(), bound, None, true, RngStream::new(7, (i * 10 + j) as u64));
            let at = run.locked_frame.unwrap_or_else(|| panic!("({az}, {el}) did not lock"));
            worst = worst.max(at);
            let e = sim.error(run.final_state.motor_position);
            assert!(e.0.hypot(e.1) < 2e-6, "residual {e:?}");
        }
    }
    assert!(worst < bound);
}

#[test]
fn locked_terminal_meets_calibrated_power() {
    let sim = AlignmentSim::new((0.3f64.to_radians(), -0.2f64.to_radians()));
    let run = run_alignment(&sim, &Default::default(), AlignmentState::default(), 20_000, None, false, RngStream::new(2, 0));
    let last = run.log.last().unwrap();
    assert_eq!(last.mode, AlignmentMode::Locked);
    assert!((last.rx_power_dbm + 6.86).abs() < 0.1, "{}", last.rx_power_dbm);
}

#[test]
fn ber_matches_analytic_within_three_sigma() {
    let frame = BeaconFrame {
        rx_power_report_dbm: -10.0,
        payload: (0..=255u8).collect(),
    };
    for snr_db in [0.0, 6.0, 10.0] {
        let trials = 40;
        let mut errs = 0.0;
        let mut bits = 0.0;
        for t in 0..trials {
            let r = beacon_roundtrip(&frame, snr_db, RngStream::new(11, t));
            errs += r.bit_errors as f64;
            bits += r.bits_sent as f64;
        }
        let p = errs / bits;
        let snr = 10f64.powf(snr_db / 10.0);
        let q = 0.5 * statrs::function::erf::erfc(snr.sqrt() / 2.0 / std::f64::consts::SQRT_2);
        assert!((ook_ber(snr_db) - q).abs() < 1e-6);
        let sigma = (q * (1.0 - q) / bits).sqrt();
        assert!((p - q).abs() < 3.0 * sigma, "snr {snr_db}: {p} vs {q}");
    }
}

#[test]
fn rain_orders_pixel_statistics() {
    let p = ScintParams::default();
    let stats = |rain: f64| {
        let s = scintillation_series(&p, rain, 200.0, 0.01, RngStream::new(5, 0));
        assert!(s.len() >= 10_000);
        let n = s.len() as f64;
        let m = s.iter().map(|x| x.cmos_mean_pixel).sum::<f64>() / n;
        let v = s.iter().map(|x| (x.cmos_mean_pixel - m).powi(2)).sum::<f64>() / n;
        (m, v)
    };
    let (m0, v0) = stats(0.0);
    let (m25, v25) = stats(25.0);
    assert!(m25 < m0 && v25 > v0, "{m0} {v0} {m25} {v25}");
}

proptest! {
    #[test]
    fn rx_power_non_increasing_in_rain(a in 0.0f64..100.0, b in 0.0f64..100.0, err in 0.0f64..50e-6) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let spec = OpticalLinkSpec::default();
        let p_lo = fsoc_rx_power(&spec, 10.15, err, &WeatherSample::rain(lo), 0.0);
        let p_hi = fsoc_rx_power(&spec, 10.15, err, &WeatherSample::rain(hi), 0.0);
        prop_assert!(p_hi <= p_lo);
    }

    #[test]
    fn commands_are_whole_microsteps(
        mode in 0usize..4, apd in 0.0f64..1.5, rx in -40.0f64..0.0,
        cx in proptest::option::of((-250.0f64..250.0, -250.0f64..250.0)),
        m0 in -100_000i64..100_000, m1 in -100_000i64..100_000, idx in 0u64..50_000,
    ) {
        let mut s = AlignmentState::default();
        s.mode = [AlignmentMode::SearchCoarse, AlignmentMode::AlignFine, AlignmentMode::AlignUltrafine, AlignmentMode::Locked][mode];
        s.motor_position = (m0, m1);
        s.spiral_index = idx;
        let f = SensorFrame { apd_voltage: apd, cmos_centroid: cx, cmos_mean_pixel: 100.0, rx_power_dbm: rx };
        let (n, cmd) = step_alignment(&s, &f, &Default::default());
        prop_assert_eq!(n.motor_position, (m0 + cmd.0, m1 + cmd.1));
        let legal = match (s.mode, n.mode) {
            (a, b) if a == b => true,
            (AlignmentMode::SearchCoarse, AlignmentMode::AlignFine)
            | (AlignmentMode::AlignFine, AlignmentMode::AlignUltrafine)
            | (AlignmentMode::AlignUltrafine, AlignmentMode::Locked)
            | (AlignmentMode::Locked, AlignmentMode::AlignFine)
            | (_, AlignmentMode::SearchCoarse) => true,
            _ => false,
        };
        prop_assert!(legal, "{:?} -> {:?}", s.mode, n.mode);
    }
}
