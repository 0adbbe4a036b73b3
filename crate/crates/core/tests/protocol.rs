use proptest::prelude::*;
use rand::RngCore;
use relaynet_core::contention::ContentionConfig;
use relaynet_core::experiments::Estimate;
use relaynet_core::netmodel::{compute_sir, mutual_information, sample_network, Receiver, SlotState};
use relaynet_core::protocol::{run_episode, run_episode_rates};
use relaynet_core::random::episode_rng;
use relaynet_core::{NetworkConfig, NetworkRealization, RelaySelection, Scheme};

/// Single-slot progress straight from the definition: the largest progress
/// among receive-mode nodes whose SIR from the source supports the rate.
fn direct_d1(cfg: &NetworkConfig, real: &NetworkRealization, key: u64) -> f64 {
    let slot = SlotState::from_key(real.len(), cfg.map_p, real.source_index, key);
    (0..real.len())
        .filter(|&i| i != real.source_index && !slot.is_transmitter(i))
        .filter(|&i| {
            let sir = compute_sir(&Receiver::node(real, i), real.source_index, &slot, real, cfg.alpha);
            mutual_information(sir) >= cfg.rate
        })
        .map(|i| real.progress(i))
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn d1_matches_definition_on_the_same_slot(
        seed in any::<u64>(),
        map_p in 0.05f64..0.5,
        rate in 0.3f64..4.0,
        alpha in prop_oneof![Just(3.0), Just(4.0), 2.5f64..5.0],
    ) {
        let mut cfg = NetworkConfig::new(Scheme::Nc, 1);
        cfg.map_p = map_p;
        cfg.rate = rate;
        cfg.alpha = alpha;
        let mut rng = episode_rng(seed, 0);
        let real = sample_network(&cfg, &mut rng).unwrap();
        let key = rng.clone().next_u64();
        let res = run_episode(&cfg, &real, &mut rng).unwrap();
        prop_assert_eq!(res.progress[0], direct_d1(&cfg, &real, key));
    }

    #[test]
    fn lanes_equal_separate_runs(
        seed in any::<u64>(),
        scheme in prop_oneof![Just(Scheme::Irc), Just(Scheme::Rc)],
        diversity in 1usize..4,
        map_p in 0.05f64..0.3,
    ) {
        let mut cfg = NetworkConfig::new(scheme, diversity);
        cfg.map_p = map_p;
        let rates = [0.5, 1.5, 2.5, 4.0, 6.0];
        let mut rng = episode_rng(seed, 1);
        let real = sample_network(&cfg, &mut rng).unwrap();
        let together = run_episode_rates(&cfg, &rates, &real, &mut rng.clone()).unwrap();
        for (lane, &rate) in together.iter().zip(&rates) {
            cfg.rate = rate;
            let alone = run_episode(&cfg, &real, &mut rng.clone()).unwrap();
            prop_assert_eq!(lane, &alone);
        }
    }

    #[test]
    fn episode_invariants(seed in any::<u64>(), rate in 0.5f64..5.0, diversity in 1usize..5) {
        let mut cfg = NetworkConfig::new(Scheme::Irc, diversity);
        cfg.map_p = 0.1;
        cfg.rate = rate;
        let mut rng = episode_rng(seed, 2);
        let real = sample_network(&cfg, &mut rng).unwrap();
        let res = run_episode(&cfg, &real, &mut rng).unwrap();
        prop_assert_eq!(res.progress.len(), diversity);
        prop_assert!(res.progress.iter().all(|&d| d >= 0.0));
        prop_assert!(res.progress.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(res.relays.len() <= diversity);
        let mut seen = res.relays.clone();
        seen.sort_unstable();
        seen.dedup();
        prop_assert_eq!(seen.len(), res.relays.len());
        for &r in &res.relays {
            prop_assert!(r != real.source_index);
            prop_assert!(real.progress(r) > 0.0);
            prop_assert!(real.progress(r) <= *res.progress.last().unwrap());
        }
        prop_assert_eq!(res.retransmissions.len(), res.relays.len() + 1);
    }
}

#[test]
fn irc_with_one_block_is_nc() {
    let nc = NetworkConfig::new(Scheme::Nc, 1);
    let irc = NetworkConfig::new(Scheme::Irc, 1);
    for e in 0..50 {
        let mut rng = episode_rng(4, e);
        let real = sample_network(&nc, &mut rng).unwrap();
        let a = run_episode(&nc, &real, &mut rng.clone()).unwrap();
        let b = run_episode(&irc, &real, &mut rng).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn unreachable_rate_freezes_at_zero() {
    let mut cfg = NetworkConfig::new(Scheme::Nc, 1);
    cfg.rate = 50.0;
    let real = sample_network(&cfg, &mut episode_rng(8, 0)).unwrap();
    let res = run_episode(&cfg, &real, &mut episode_rng(8, 1)).unwrap();
    assert_eq!(res.progress, vec![0.0]);
    assert!(res.relays.is_empty());

    // With slots to spare the source retries until the cap, then gives up.
    let mut cfg = NetworkConfig::new(Scheme::Irc, 14);
    cfg.rate = 50.0;
    let res = run_episode(&cfg, &real, &mut episode_rng(8, 1)).unwrap();
    assert!(res.failed);
    assert_eq!(res.progress, vec![0.0; 14]);
    assert_eq!(res.retransmissions, vec![cfg.retry_cap]);
}

#[test]
fn cooperation_never_loses_progress() {
    let trials = 2_000u64;
    let nc = NetworkConfig::new(Scheme::Nc, 1);
    let irc = NetworkConfig::new(Scheme::Irc, 2);
    let (mut d1, mut inc) = (Vec::new(), Vec::new());
    for e in 0..trials {
        let mut rng = episode_rng(17, e);
        let real = sample_network(&nc, &mut rng).unwrap();
        d1.push(run_episode(&nc, &real, &mut rng.clone()).unwrap().progress[0]);
        inc.push(run_episode(&irc, &real, &mut rng).unwrap().increment());
    }
    let d1 = Estimate::from_samples(&d1);
    let inc = Estimate::from_samples(&inc);
    assert!(inc.mean >= d1.mean - 2.0 * d1.std_error, "{inc:?} vs {d1:?}");
}

#[test]
fn first_hop_agrees_with_independent_estimator() {
    let trials = 5_000u64;
    let irc = NetworkConfig::new(Scheme::Irc, 2);
    let engine: Vec<f64> = (0..trials)
        .map(|e| {
            let mut rng = episode_rng(31, e);
            let real = sample_network(&irc, &mut rng).unwrap();
            run_episode(&irc, &real, &mut rng).unwrap().progress[0]
        })
        .collect();
    let nc = NetworkConfig::new(Scheme::Nc, 1);
    let oracle: Vec<f64> = (0..trials)
        .map(|e| {
            let mut rng = episode_rng(32, e);
            let real = sample_network(&nc, &mut rng).unwrap();
            direct_d1(&nc, &real, rng.next_u64())
        })
        .collect();
    let a = Estimate::from_samples(&engine);
    let b = Estimate::from_samples(&oracle);
    let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
    assert!((a.mean - b.mean).abs() < 3.0 * se, "{a:?} vs {b:?}");
}

#[test]
fn contention_selection_reports_statistics() {
    let mut cfg = NetworkConfig::new(Scheme::Irc, 3);
    cfg.map_p = 0.1;
    cfg.rate = 2.0;
    cfg.selection = RelaySelection::Contention(ContentionConfig::new(3, 6.0).unwrap());
    let mut rounds = 0;
    let mut errors = 0;
    for e in 0..200 {
        let mut rng = episode_rng(2, e);
        let real = sample_network(&cfg, &mut rng).unwrap();
        let res = run_episode(&cfg, &real, &mut rng).unwrap();
        assert!(res.progress.windows(2).all(|w| w[0] <= w[1]));
        rounds += res.contention.rounds;
        errors += res.contention.selection_errors;
        assert!(res.contention.collisions <= res.contention.rounds);
    }
    assert!(rounds > 0);
    // Three bits cannot separate nearby relays.
    assert!(errors > 0);
}
