use ara_lab::domain::RngStream;
use ara_lab::mimo::{
    aggregate_capacity, group_capacity, orthogonality, schedule_rbs, synthesize_channels, ChannelMatrix,
    CorrelationMode, FieldLayout, MimoSet, RbPlan, SchedulerParams, SchedulingPolicy, UeSpec,
};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;

fn greedy_and_forced(set: &MimoSet, seed: u64) -> (f64, f64) {
    let ch = synthesize_channels(set, 42, 1.0, 1.0, RngStream::new(seed, 7)).unwrap();
    let p = SchedulerParams::default();
    let g = schedule_rbs(&ch, &RbPlan::default(), SchedulingPolicy::Greedy, &p);
    let f = schedule_rbs(&ch, &RbPlan::default(), SchedulingPolicy::ForceAll, &p);
    (aggregate_capacity(&g), aggregate_capacity(&f))
}

/// 1 - |P h| / |h| with the projection from a least-squares solve.
fn lstsq_orthogonality(h: &ChannelMatrix, i: usize, others: &[usize]) -> f64 {
    let m = h.antennas();
    let a = DMatrix::from_fn(m, others.len(), |r, c| h.row(others[c])[r]);
    let v = DVector::from_fn(m, |r, _| h.row(i)[r]);
    let x = a.clone().svd(true, true).solve(&v, 1e-12).unwrap();
    1.0 - (&a * x).norm() / v.norm()
}

#[test]
fn orthogonality_matches_least_squares() {
    let set = MimoSet {
        name: "r".into(),
        antennas: 8,
        cluster_correlation: 0.5,
        ues: (0..3)
            .map(|u| UeSpec {
                id: format!("{u}"),
                snr_db: 10.0,
                streams: 2,
                cluster: (u < 2).then_some(0),
            })
            .collect(),
    };
    for h in synthesize_channels(&set, 20, 1.0, 1.0, RngStream::new(11, 0)).unwrap() {
        let group = [0, 2, 3, 5];
        let o = orthogonality(&h, &group, CorrelationMode::Amplitude).unwrap();
        for (k, &i) in group.iter().enumerate() {
            let others: Vec<usize> = group.iter().copied().filter(|&j| j != i).collect();
            assert!((o.per_stream[k] - lstsq_orthogonality(&h, i, &others)).abs() < 1e-9);
        }
    }
}

#[test]
fn two_vector_case() {
    let c = |x: f64| Complex64::new(x, 0.0);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = ChannelMatrix::from_rows(vec![vec![c(1.0), c(0.0)], vec![c(s), c(s)]]).unwrap();
    let o = orthogonality(&h, &[0, 1], CorrelationMode::Amplitude).unwrap();
    assert!((o.min - lstsq_orthogonality(&h, 0, &[1])).abs() < 1e-12);
    assert!((o.min - 0.2929).abs() < 1e-4);
}

#[test]
fn spread_beats_clustered_over_twenty_seeds() {
    let layout = FieldLayout::default();
    let sets = layout.sets();
    for seed in 0..20 {
        let (spread, _) = greedy_and_forced(&sets[2], seed);
        let (packed, _) = greedy_and_forced(&sets[1], seed);
        assert!(spread > packed && packed > 0.0, "seed {seed}: {spread} vs {packed}");
    }
}

#[test]
fn all_seven_ues_near_four_hundred_mbps() {
    let sets = FieldLayout::default().sets();
    let (g, f) = greedy_and_forced(&sets[0], 0);
    assert!((3.5e8..=4.5e8).contains(&g), "{g}");
    assert!(f < g);
}

#[test]
fn packed_set_groups_fewer_streams() {
    let l = FieldLayout {
        cluster_correlation: 0.95,
        ..Default::default()
    };
    let p = SchedulerParams::default();
    let max = |set: &MimoSet| {
        let ch = synthesize_channels(set, 42, 1.0, 1.0, RngStream::new(3, 7)).unwrap();
        schedule_rbs(&ch, &RbPlan::default(), SchedulingPolicy::Greedy, &p).max_group_size()
    };
    assert!(max(&l.set("spread", &[3, 4, 7, 1])) > max(&l.set("packed", &[1, 2, 5, 6])));
}

fn random_set(ues: usize, antennas: usize, rho: f64) -> MimoSet {
    MimoSet {
        name: "x".into(),
        antennas,
        cluster_correlation: rho,
        ues: (0..ues)
            .map(|u| UeSpec {
                id: format!("{u}"),
                snr_db: 5.0 + u as f64,
                streams: 2,
                cluster: (u % 2 == 0).then_some(0),
            })
            .collect(),
    }
}

#[test]
fn greedy_never_trails_force_all() {
    for seed in 0..100u64 {
        let ues = 1 + (seed % 4) as usize;
        let set = random_set(ues, 4 + (seed % 5) as usize * 2, (seed % 10) as f64 / 10.0);
        let ch = synthesize_channels(&set, 6, 1.0, 1.0, RngStream::new(seed, 1)).unwrap();
        let plan = RbPlan {
            n_rbs: 6,
            ..Default::default()
        };
        let p = SchedulerParams::default();
        let g = aggregate_capacity(&schedule_rbs(&ch, &plan, SchedulingPolicy::Greedy, &p));
        let f = aggregate_capacity(&schedule_rbs(&ch, &plan, SchedulingPolicy::ForceAll, &p));
        assert!(g >= f, "seed {seed}: {g} < {f}");
    }
}

fn cplx() -> impl Strategy<Value = Complex64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| Complex64::new(a, b))
}

proptest! {
    #[test]
    fn orthogonality_ignores_per_vector_scale(
        rows in prop::collection::vec(prop::collection::vec(cplx(), 6), 3),
        scale in prop::collection::vec((0.1f64..10.0, 0.0f64..6.3), 3),
    ) {
        prop_assume!(rows.iter().all(|r| r.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1e-3));
        let h = ChannelMatrix::from_rows(rows.clone()).unwrap();
        let scaled: Vec<Vec<Complex64>> = rows
            .iter()
            .zip(&scale)
            .map(|(r, &(m, ph))| r.iter().map(|z| z * Complex64::from_polar(m, ph)).collect())
            .collect();
        let hs = ChannelMatrix::from_rows(scaled).unwrap();
        let a = orthogonality(&h, &[0, 1, 2], CorrelationMode::Amplitude).unwrap();
        let b = orthogonality(&hs, &[0, 1, 2], CorrelationMode::Amplitude).unwrap();
        for (x, y) in a.per_stream.iter().zip(&b.per_stream) {
            prop_assert!((x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn orthogonal_group_is_sum_of_isolated_streams(
        gains in prop::collection::vec(0.2f64..5.0, 1..5),
        power in 0.5f64..20.0,
    ) {
        let k = gains.len();
        let rows: Vec<Vec<Complex64>> = (0..k)
            .map(|i| (0..k).map(|j| Complex64::new(if i == j { gains[i] } else { 0.0 }, 0.0)).collect())
            .collect();
        let h = ChannelMatrix::from_rows(rows).unwrap();
        let group: Vec<usize> = (0..k).collect();
        let r = group_capacity(&h, &group, 540e3, 1.0, power, 6.0).unwrap();
        let expect: f64 = gains
            .iter()
            .map(|g| 540e3 * (1.0 + power / k as f64 * g * g).log2().min(6.0))
            .sum();
        prop_assert!((r.total_bps - expect).abs() < 1e-6 * expect.max(1.0));
    }
}
