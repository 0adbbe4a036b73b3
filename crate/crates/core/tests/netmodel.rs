use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use relaynet_core::analytic::{success_probability, AnalyticParams};
use relaynet_core::netmodel::{
    accumulate_metric, compute_sir, draw_slot, sample_network, sir_from_links, Receiver, SlotState,
};
use relaynet_core::random::episode_rng;
use relaynet_core::{NetworkConfig, NetworkRealization, Point, Scheme};

#[test]
fn poisson_count_matches_window_area() {
    let cfg = NetworkConfig::new(Scheme::Nc, 1);
    let draws = 10_000u64;
    let total: usize = (0..draws)
        .map(|i| sample_network(&cfg, &mut episode_rng(5, i)).unwrap().len() - 1)
        .sum();
    let mean = total as f64 / draws as f64;
    let expected = 400.0 * std::f64::consts::PI;
    assert!((mean / expected - 1.0).abs() < 0.01, "{mean} vs {expected}");
}

#[test]
fn realization_geometry() {
    let cfg = NetworkConfig::new(Scheme::Irc, 2);
    for i in 0..20 {
        let real = sample_network(&cfg, &mut episode_rng(1, i)).unwrap();
        assert_eq!(real.points[real.source_index], Point::ORIGIN);
        assert!(real.points.iter().all(|p| p.dist2(Point::ORIGIN) <= 400.0));
    }
}

#[test]
fn transmitter_fraction_concentrates() {
    let cfg = NetworkConfig::new(Scheme::Nc, 1);
    let real = NetworkRealization::from_points((1..10_000).map(|i| Point::new(i as f64, 0.0)));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let slot = draw_slot(&real, &cfg, 0, &mut rng);
    let frac = slot.transmitters().len() as f64 / real.len() as f64;
    assert!((0.29..=0.31).contains(&frac), "{frac}");
    assert!(slot.is_transmitter(0));
}

#[test]
fn successive_slots_are_uncorrelated() {
    let cfg = NetworkConfig::new(Scheme::Nc, 1);
    let real = NetworkRealization::from_points((1..200).map(|i| Point::new(i as f64, 0.0)));
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let roles = |s: &SlotState| -> Vec<f64> {
        (1..real.len())
            .map(|i| f64::from(u8::from(s.is_transmitter(i))))
            .collect()
    };
    let mut prev = roles(&draw_slot(&real, &cfg, 0, &mut rng));
    let (mut sx, mut sy, mut sxy, mut sxx, mut syy, mut n) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for _ in 0..1_000 {
        let next = roles(&draw_slot(&real, &cfg, 0, &mut rng));
        for (a, b) in prev.iter().zip(&next) {
            sx += a;
            sy += b;
            sxy += a * b;
            sxx += a * a;
            syy += b * b;
            n += 1.0;
        }
        prev = next;
    }
    let cov = sxy / n - sx / n * sy / n;
    let corr = cov / ((sxx / n - (sx / n).powi(2)) * (syy / n - (sy / n).powi(2))).sqrt();
    assert!(corr.abs() < 0.05, "{corr}");
}

#[test]
fn closed_form_success_probability_at_alpha_four() {
    // Smaller run of the acceptance check, at the exponent where the window
    // truncation is negligible.
    let mut cfg = NetworkConfig::new(Scheme::Nc, 1);
    cfg.rate = 3.0;
    let params = AnalyticParams::from_config(&cfg);
    let slots = 6_000u64;
    let probes = [0.2, 0.5];
    let mut hits = [0u32; 2];
    for s in 0..slots {
        let mut rng = episode_rng(21, s);
        let real = sample_network(&cfg, &mut rng).unwrap();
        let slot = draw_slot(&real, &cfg, 0, &mut rng);
        for (k, &r) in probes.iter().enumerate() {
            let rx = Receiver::probe(k as u64, Point::new(r, 0.0));
            let mi = compute_sir(&rx, 0, &slot, &real, cfg.alpha).ln_1p() / std::f64::consts::LN_2;
            hits[k] += u32::from(mi >= cfg.rate);
        }
    }
    for (k, &r) in probes.iter().enumerate() {
        let p = success_probability(r, &params).unwrap();
        let est = hits[k] as f64 / slots as f64;
        let se = (p * (1.0 - p) / slots as f64).sqrt();
        assert!((est - p).abs() < 3.0 * se, "r={r}: {est} vs {p}");
    }
}

proptest! {
    #[test]
    fn sir_is_scale_invariant(
        s in 0.01f64..100.0,
        alpha in 2.1f64..6.0,
        pts in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0, 0.01f64..5.0), 2..8),
    ) {
        let rx = Point::new(0.3, -0.2);
        let links: Vec<(Point, f64)> = pts.iter().map(|&(x, y, g)| (Point::new(x, y), g)).collect();
        let a = sir_from_links(rx, links[0], links[1..].iter().copied(), alpha);
        let scaled: Vec<(Point, f64)> = links.iter().map(|&(p, g)| (p.scaled(s), g)).collect();
        let b = sir_from_links(rx.scaled(s), scaled[0], scaled[1..].iter().copied(), alpha);
        prop_assert!((a / b - 1.0).abs() < 1e-9, "{} vs {}", a, b);
    }

    #[test]
    fn adding_a_contribution_never_undecodes(
        values in proptest::collection::vec(0.0f64..3.0, 0..4),
        extra in 0.0f64..3.0,
        rate in 0.1f64..6.0,
        irc in any::<bool>(),
    ) {
        let scheme = if irc { Scheme::Irc } else { Scheme::Rc };
        let before = accumulate_metric(&values, scheme, rate, 5).unwrap();
        let mut more = values.clone();
        more.push(extra);
        let after = accumulate_metric(&more, scheme, rate, 5).unwrap();
        prop_assert!(!before || after);
    }

    #[test]
    fn sampling_is_reproducible(seed in any::<u64>(), index in 0u64..1000) {
        let cfg = NetworkConfig::new(Scheme::Nc, 1);
        let mut r1 = episode_rng(seed, index);
        let mut r2 = episode_rng(seed, index);
        let a = sample_network(&cfg, &mut r1).unwrap();
        let b = sample_network(&cfg, &mut r2).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(draw_slot(&a, &cfg, 0, &mut r1), draw_slot(&b, &cfg, 0, &mut r2));
    }
}
