mod common;

use common::{depth, n_at, naive_curves, naive_snapshots, random_log, v_upto, NaiveBook};
use knudsen_core::synth::{generate_flash_crash, generate_one_sided_halt};
use knudsen_core::{
    correlation_curves, generate, layer_delta, layer_profile, read_event_log, replay, write_event_log, BookState,
    DepthRange, Scenario, Side, SynthConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn same_levels(book: &BookState, naive: &NaiveBook) -> bool {
    Side::BOTH.iter().all(|&s| book.levels(s).iter().map(|(p, v)| (*p, *v)).eq(naive.sorted(s)))
}

#[test]
fn every_prefix_matches_recomputation_from_scratch() {
    let log = random_log(11, 1000);
    let mut book = BookState::new();
    for m in 0..log.len() {
        book.apply(&log[m]).unwrap();
        let mut naive = NaiveBook::default();
        log[..=m].iter().for_each(|e| {
            naive.apply(e);
        });
        assert!(same_levels(&book, &naive), "prefix {}", m + 1);
        assert_eq!(book.mid(), naive.mid2().map(|x| x as f64 / 2.0));
    }
}

#[test]
fn snapshots_match_naive_transactions() {
    for seed in 0..5 {
        let log = random_log(seed, 1000);
        let snaps = replay(&log).unwrap();
        let naive = naive_snapshots(&log);
        assert_eq!(snaps.len(), naive.len());
        for (i, (s, n)) in snaps.iter().zip(&naive).enumerate() {
            assert!(same_levels(&s.book, n), "seed {seed} tick {}", i + 1);
            assert_eq!(s.book.tick_index(), i as u64 + 1);
        }
    }
}

#[test]
fn profile_of_500_random_levels_matches_double_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let levels: Vec<(i64, u64)> = (0..500).map(|_| (rng.random_range(0..2000), rng.random_range(1..50))).collect();
        let book = BookState::from_levels(levels.iter().copied(), std::iter::empty());
        let naive = NaiveBook { minus: merge(&levels), plus: vec![] };
        let reference = rng.random_range(900..1100);
        let prof = layer_profile(&book, Side::Minus, reference, DepthRange::new(-10, 300));
        let cum = prof.cumulative();
        for g in 0..=300 {
            assert_eq!(cum[g as usize] as i64, v_upto(&naive, Side::Minus, reference, g));
        }
        for g in -10..=300 {
            assert_eq!(prof.n_at(g) as i64, n_at(&naive, Side::Minus, reference, g));
        }
    }
}

fn merge(levels: &[(i64, u64)]) -> Vec<(i64, u64)> {
    let mut out: Vec<(i64, u64)> = Vec::new();
    for &(p, v) in levels {
        match out.iter_mut().find(|(q, _)| *q == p) {
            Some(e) => e.1 += v,
            None => out.push((p, v)),
        }
    }
    out
}

#[test]
fn layer_deltas_match_per_level_recomputation() {
    let log = random_log(3, 1000);
    let snaps = replay(&log).unwrap();
    let naive = naive_snapshots(&log);
    let range = DepthRange::up_to(40);
    for i in 1..snaps.len() {
        for side in Side::BOTH {
            let d = layer_delta(&snaps[i - 1].book, &snaps[i].book, side, range);
            let Some(r) = naive[i - 1].best(side) else {
                assert!(d.is_none());
                continue;
            };
            let d = d.unwrap();
            let (p, c) = (&naive[i - 1], &naive[i]);
            let mut prices: Vec<i64> = p.side(side).iter().chain(c.side(side)).map(|x| x.0).collect();
            prices.sort();
            prices.dedup();
            for g in range.depths() {
                let per_level: Vec<i64> = prices
                    .iter()
                    .filter(|&&q| depth(q, side, r) == g)
                    .map(|&q| c.volume(side, q) as i64 - p.volume(side, q) as i64)
                    .collect();
                let idx = range.index(g).unwrap();
                assert_eq!(d.delta_at(g), n_at(c, side, r, g) - n_at(p, side, r, g));
                assert_eq!(d.adds[idx] as i64, per_level.iter().filter(|x| **x > 0).sum::<i64>());
                assert_eq!(d.removes[idx] as i64, -per_level.iter().filter(|x| **x < 0).sum::<i64>());
            }
            let cum = d.cumulative();
            for g in 0..=40 {
                assert_eq!(cum[g as usize], v_upto(c, side, r, g) - v_upto(p, side, r, g));
            }
        }
    }
}

fn assert_close(a: &[Option<f64>], b: &[Option<f64>]) {
    assert_eq!(a.len(), b.len());
    for (g, (x, y)) in a.iter().zip(b).enumerate() {
        match (x, y) {
            (Some(x), Some(y)) => assert!((x - y).abs() <= 1e-9 * y.abs().max(1e-300), "depth {g}: {x} vs {y}"),
            _ => assert_eq!(x.is_some(), y.is_some(), "depth {g}"),
        }
    }
}

#[test]
fn correlation_curves_match_two_pass_recomputation() {
    for (seed, k) in [(1, 1), (2, 3), (4, 5)] {
        let log = random_log(seed, 1000);
        let snaps = replay(&log).unwrap();
        let naive = naive_snapshots(&log);
        let curves = correlation_curves(snaps.iter().map(|s| &s.book), k, 30).unwrap();
        for (side, sc) in Side::BOTH.into_iter().zip(&curves) {
            let (per, cum, blocks) = naive_curves(&naive, side, k, 30);
            assert_eq!(sc.per_depth.n_blocks, blocks);
            assert_close(&sc.per_depth.corr, &per);
            assert_close(&sc.cumulative.corr, &cum);
        }
    }
}

#[test]
fn generated_logs_survive_csv_round_trip() {
    let base = SynthConfig { n_events: 5000, ..SynthConfig::default() };
    let logs = [
        generate(&SynthConfig { seed: 4, ..base }).unwrap(),
        generate(&SynthConfig { n_events: 5000, ..SynthConfig::scenario(5, Scenario::DensitySweep) }).unwrap(),
        generate_flash_crash(&SynthConfig { seed: 6, scenario: Scenario::FlashCrash, ..base }).unwrap().events,
        generate_one_sided_halt(&SynthConfig { seed: 7, scenario: Scenario::OneSidedHalt, ..base }).unwrap().events,
        random_log(8, 1000),
    ];
    for log in logs {
        let mut buf = Vec::new();
        write_event_log(&mut buf, &log).unwrap();
        assert_eq!(read_event_log(buf.as_slice()).unwrap(), log);
    }
}
