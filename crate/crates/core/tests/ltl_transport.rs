use ara_lab::domain::RngStream;
use ara_lab::ltl::{
    decode_block, encode_block, encode_symbol, stream_session, CapacityTrace, LtlError, QoEReport, SessionConfig,
    SourceBlock, Transport,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn random_block(id: u64, k: usize, size: usize, rng: &mut impl Rng) -> SourceBlock {
    let data: Vec<u8> = (0..k * size).map(|_| rng.random()).collect();
    SourceBlock::from_bytes(id, &data, size).unwrap()
}

#[test]
fn k_random_repair_symbols_decode_at_k32() {
    let mut r = RngStream::new(1, 0).rng();
    let k = 32;
    let mut ok = 0;
    for trial in 0..1000u64 {
        let b = random_block(trial, k, 4, &mut r);
        // K repair symbols with random ids far into the stream.
        let base: u32 = r.random_range(32..1_000_000);
        let syms: Vec<_> = (0..k as u32).map(|i| encode_symbol(&b, base + i * 7, trial)).collect();
        match decode_block(&syms) {
            Ok(p) => {
                assert_eq!(p, b.payload);
                ok += 1;
            }
            Err(LtlError::NeedMore(d)) => assert!(d >= 1),
            Err(e) => panic!("{e}"),
        }
    }
    // Full-rank probability of a random 32x32 matrix over GF(256) is ~0.996.
    let analytic: f64 = (1..=32).map(|i| 1.0 - 256f64.powi(-i)).product();
    assert!(analytic > 0.995);
    assert!(ok as f64 / 1000.0 >= 0.99, "{ok}");
}

#[test]
fn bit_exact_decode_fuzz() {
    let mut r = RngStream::new(2, 0).rng();
    let mut decoded = 0;
    for blk in 0..1000u64 {
        let k = r.random_range(1..=40);
        let size = r.random_range(1..=24);
        let b = random_block(blk, k, size, &mut r);
        let mut syms = encode_block(&b, (2 * k + 4) as u32, blk ^ 0xabc).unwrap();
        syms.shuffle(&mut r);
        let take = r.random_range(k..=syms.len());
        match decode_block(&syms[..take]) {
            Ok(p) => {
                assert_eq!(p, b.payload, "block {blk}");
                decoded += 1;
            }
            Err(LtlError::NeedMore(_)) => {}
            Err(e) => panic!("{e}"),
        }
    }
    assert!(decoded > 950);
}

fn ordering(t: &CapacityTrace, seed: u64) -> (QoEReport, QoEReport) {
    let c = SessionConfig::default();
    (
        stream_session(t, &c, Transport::Udp, seed).unwrap(),
        stream_session(t, &c, Transport::Ltl { overhead: 0.2 }, seed).unwrap(),
    )
}

#[test]
fn iid_loss_favors_ltl() {
    let (udp, ltl) = ordering(&CapacityTrace::constant(30.0, 1e9, 0.1), 3);
    assert!(ltl.median_fps > udp.median_fps);
    assert!(ltl.stall_ratio < udp.stall_ratio);
}

#[test]
fn bad_connectivity_ordering_over_seeds() {
    let t = CapacityTrace::bad_connectivity();
    for seed in 0..10 {
        let (udp, ltl) = ordering(&t, seed);
        assert!(ltl.stall_ratio < udp.stall_ratio, "seed {seed}");
        assert!(ltl.frame_intact_ratio > udp.frame_intact_ratio, "seed {seed}");
        assert!(ltl.median_fps >= udp.median_fps, "seed {seed}");
    }
}

#[test]
fn more_overhead_never_stalls_more() {
    let t = CapacityTrace::bad_connectivity();
    let c = SessionConfig::default();
    let stalls: Vec<f64> = [0.0, 0.05, 0.1, 0.2, 0.3, 0.4]
        .iter()
        .map(|&o| stream_session(&t, &c, Transport::Ltl { overhead: o }, 5).unwrap().stall_ratio)
        .collect();
    assert!(stalls.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{stalls:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decode_depends_only_on_span(k in 1usize..20, extra in 0usize..10, seed in any::<u64>()) {
        let mut r = RngStream::new(seed, 0).rng();
        let b = random_block(seed, k, 3, &mut r);
        let mut syms = encode_block(&b, (k + extra) as u32, seed).unwrap();
        syms.drain(..k / 2);
        let first = decode_block(&syms).map_err(|e| e.to_string());
        syms.shuffle(&mut r);
        let second = decode_block(&syms).map_err(|e| e.to_string());
        prop_assert_eq!(first, second);
    }

    #[test]
    fn expandable_stream_is_deterministic(k in 1usize..16, id in 0u32..100_000, seed in any::<u64>()) {
        let mut r = RngStream::new(seed, 1).rng();
        let b = random_block(7, k, 2, &mut r);
        prop_assert_eq!(encode_symbol(&b, id, seed), encode_symbol(&b, id, seed));
    }

    #[test]
    fn no_stall_means_full_rate(loss in 0.0f64..0.02, seed in 0u64..50) {
        let t = CapacityTrace::constant(6.0, 1e9, loss);
        let r = stream_session(&t, &SessionConfig::default(), Transport::Ltl { overhead: 0.2 }, seed).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.stall_ratio) && (0.0..=1.0).contains(&r.frame_intact_ratio));
        if r.stall_ratio == 0.0 {
            let full = r.fps_series.len() - 1;
            prop_assert!(r.fps_series[..full].iter().all(|&f| (f - 30.0).abs() <= 1.0));
        }
    }
}
