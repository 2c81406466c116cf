//! Analytic building blocks checked against direct simulation.

mod common;

use common::*;
use hetnet_coverage::analytic::direct::{
    decondition_power, interference_pdf, lt_near_interference, lt_truncated_power,
    serving_power_nodes,
};
use hetnet_coverage::analytic::{network_coverage, per_tier_coverage};
use hetnet_coverage::geometry::CandidateSet;
use hetnet_coverage::laplace::Inverter;
use hetnet_coverage::model::{db_to_linear, NetworkConfig, SweepSpec};
use hetnet_coverage::montecarlo::{
    empirical_conditionals, estimate_coverage, window_bias, ConditioningSpec,
};
use hetnet_coverage::propagation::{draw_received_power, power_cdf_given_r};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cands(d: &[f64]) -> CandidateSet {
    CandidateSet {
        tier_index: 0,
        distances: d.to_vec(),
    }
}

/// Accepted draws below `t` at distance `r`.
fn truncated_draws(cfg: &NetworkConfig, r: f64, t: f64, count: usize, seed: u64) -> Vec<f64> {
    let tier = cfg.tier(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p = draw_received_power(&tier, r, KAPPA, &mut rng).0;
        if p <= t {
            out.push(p);
        }
    }
    out
}

/// Median received power at `r`, by bisection on the exact CDF.
fn median_power(cfg: &NetworkConfig, r: f64) -> f64 {
    let tier = cfg.tier(0);
    let (mut lo, mut hi) = (-80.0f64, 0.0f64);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if power_cdf_given_r(mid.exp(), r, &tier, KAPPA).unwrap() < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi.exp()
}

#[test]
fn truncated_power_transform_matches_rejection_sampling() {
    let cfg = single_macro(2);
    let tier = cfg.tier(0);
    for (i, r) in [150.0, 500.0].into_iter().enumerate() {
        let t = median_power(&cfg, r);
        let draws = truncated_draws(&cfg, r, t, 200_000, 10 + i as u64);
        let scale = draws.iter().sum::<f64>() / draws.len() as f64;
        for c in [0.3, 1.0, 3.0] {
            let s = c / scale;
            let (mean, se) = mean_se(&draws.iter().map(|p| (-s * p).exp()).collect::<Vec<_>>());
            let exact = lt_truncated_power(Complex64::new(s, 0.0), t, r, &tier, KAPPA).unwrap();
            assert!(exact.im.abs() < 1e-12);
            assert!(
                (exact.re - mean).abs() < 4.0 * se + 1e-9,
                "r={r} s·E={c}: {} vs {mean} ± {se}",
                exact.re
            );
        }
    }
}

#[test]
fn near_interference_is_the_product_of_truncated_peers() {
    let cfg = single_macro(3);
    let tier = cfg.tier(0);
    let d = [180.0, 260.0, 400.0];
    let t = median_power(&cfg, d[0]);
    let peers: Vec<Vec<f64>> = d[1..]
        .iter()
        .enumerate()
        .map(|(i, &r)| truncated_draws(&cfg, r, t, 100_000, 40 + i as u64))
        .collect();
    let sums: Vec<f64> = peers[0].iter().zip(&peers[1]).map(|(a, b)| a + b).collect();
    let scale = sums.iter().sum::<f64>() / sums.len() as f64;
    for c in [0.5, 2.0] {
        let s = c / scale;
        let (mean, se) = mean_se(&sums.iter().map(|x| (-s * x).exp()).collect::<Vec<_>>());
        let exact =
            lt_near_interference(Complex64::new(s, 0.0), 1, t, &cands(&d), &tier, KAPPA).unwrap();
        assert!(
            (exact.re - mean).abs() < 4.0 * se,
            "s·E={c}: {} vs {mean} ± {se}",
            exact.re
        );
    }
}

/// Direct-route configuration with a lighter serving-power rule.
fn direct_config() -> NetworkConfig {
    let mut cfg = single_macro(2);
    cfg.mc.farfield_all_nlos = true;
    cfg.quad.power_panels = 6;
    cfg.quad.power_panel_nodes = 4;
    cfg
}

#[test]
fn deconditioned_terms_match_conditional_simulation() {
    let cfg = direct_config();
    let tier = cfg.tier(0);
    let d = [220.0, 380.0];
    let gamma_db = [-60.0, 0.0];
    let spec = ConditioningSpec {
        tier_index: 0,
        distances: d.to_vec(),
        samples: 100_000,
        far_field_s: vec![],
        gamma_db: gamma_db.to_vec(),
        interference_m: 1,
        interference_x: vec![],
        min_hits: 0,
    };
    let rep = empirical_conditionals(&cfg, &spec, &mut ChaCha8Rng::seed_from_u64(50)).unwrap();
    let inv = Inverter::euler(cfg.quad.euler_terms);
    for (g, &gdb) in gamma_db.iter().enumerate() {
        for m in 1..=2 {
            let an = decondition_power(
                m,
                &cands(&d),
                db_to_linear(gdb),
                &tier,
                KAPPA,
                &cfg.quad,
                &inv,
            )
            .unwrap();
            let mc = rep.joint[g][m - 1];
            assert!(
                (an - mc.estimate()).abs() < 0.02,
                "γ={gdb} dB m={m}: analytic {an} vs simulated {}",
                mc.estimate()
            );
        }
    }
    // A vanishing threshold leaves only the association event.
    for m in 1..=2 {
        let an = decondition_power(
            m,
            &cands(&d),
            db_to_linear(-60.0),
            &tier,
            KAPPA,
            &cfg.quad,
            &inv,
        )
        .unwrap();
        assert!((an - rep.argmax[m - 1].estimate()).abs() < 0.01);
    }
}

#[test]
fn conditional_interference_cdf_matches_simulation() {
    let cfg = direct_config();
    let tier = cfg.tier(0);
    let d = cands(&[220.0, 380.0]);
    let mut spec = ConditioningSpec {
        tier_index: 0,
        distances: d.distances.clone(),
        samples: 20_000,
        far_field_s: vec![],
        gamma_db: vec![],
        interference_m: 1,
        interference_x: (0..60).map(|i| (-30.0 + 0.25 * i as f64).exp()).collect(),
        min_hits: 1000,
    };
    // A pilot run picks arguments across the bulk of the law.
    let pilot = empirical_conditionals(&cfg, &spec, &mut ChaCha8Rng::seed_from_u64(60)).unwrap();
    let pick =
        |p: f64| spec.interference_x[pilot.interference_cdf.iter().position(|&f| f >= p).unwrap()];
    let xs = vec![pick(0.2), pick(0.5), pick(0.8)];
    spec.interference_x = xs.clone();
    spec.samples = 100_000;
    let rep = empirical_conditionals(&cfg, &spec, &mut ChaCha8Rng::seed_from_u64(61)).unwrap();

    // Mix the conditional law over the serving power, weighted by the
    // chance that the peer stays below it.
    let inv = Inverter::euler(cfg.quad.euler_terms);
    let mut num = vec![0.0; xs.len()];
    let mut den = 0.0;
    for (y, w) in serving_power_nodes(&tier, d.distances[0], KAPPA, &cfg.quad) {
        let t = y.exp();
        let weight = w * power_cdf_given_r(t, d.distances[1], &tier, KAPPA).unwrap();
        if weight < 1e-12 {
            continue;
        }
        let law = interference_pdf(1, t, &d, &tier, KAPPA, &cfg.quad).unwrap();
        den += weight;
        for (acc, &x) in num.iter_mut().zip(&xs) {
            *acc += weight * law.cdf(&inv, x).unwrap();
        }
    }
    for ((n, &x), &mc) in num.iter().zip(&xs).zip(&rep.interference_cdf) {
        let an = n / den;
        assert!(
            (an - mc).abs() <= 0.01,
            "x={x:e}: analytic {an} vs simulated {mc}"
        );
    }
}

#[test]
fn two_tier_network_matches_simulation() {
    let mut cfg = NetworkConfig::new(vec![macro_tier(2e-6), pico_tier(2e-5)], KAPPA, 3);
    cfg.mc.farfield_all_nlos = true;
    cfg.mc.realizations = 50_000;
    cfg.quad.distance_samples = 2000;
    let sweep = SweepSpec::new(vec![-5.0, 5.0, 15.0]).unwrap();
    let an = network_coverage(&cfg, &sweep).unwrap();
    let mc = estimate_coverage(&cfg, &sweep).unwrap();
    for g in 0..sweep.len() {
        let sim = mc.network.covered[g];
        let gap = (an.pc[g] - sim.estimate()).abs();
        assert!(
            gap < 0.02 + 3.0 * sim.se(),
            "γ index {g}: {} vs {}",
            an.pc[g],
            sim.estimate()
        );
    }
}

#[test]
fn simulated_network_coverage_combines_independent_tiers() {
    let mut cfg = NetworkConfig::new(vec![macro_tier(2e-6), pico_tier(2e-5)], KAPPA, 2);
    cfg.mc.realizations = 40_000;
    let sweep = SweepSpec::new(vec![-10.0, 0.0, 10.0, 20.0]).unwrap();
    let mc = estimate_coverage(&cfg, &sweep).unwrap();
    for g in 0..sweep.len() {
        let net = mc.network.covered[g];
        let tiers: Vec<f64> = mc
            .per_tier
            .iter()
            .map(|t| t.covered[g].estimate())
            .collect();
        // Covered by the network exactly when some tier covers.
        for t in &mc.per_tier {
            assert!(net.hits >= t.covered[g].hits);
        }
        assert!(net.hits <= mc.per_tier.iter().map(|t| t.covered[g].hits).sum::<u64>());
        let product = 1.0 - tiers.iter().map(|p| 1.0 - p).product::<f64>();
        assert!(
            (net.estimate() - product).abs() < 3.0 * net.se() + 1e-3,
            "{} vs {product}",
            net.estimate()
        );
    }
}

#[test]
fn coverage_is_invariant_to_density_when_every_link_is_nlos() {
    // With blockage this strong every link is NLOS, the path loss is a pure
    // power law, and scaling the density only rescales the geometry.
    let sweep = SweepSpec::new(vec![-5.0, 5.0]).unwrap();
    let run = |density: f64| {
        let mut cfg = NetworkConfig::new(vec![macro_tier(density)], 10.0, 2);
        cfg.quad.distance_samples = 1000;
        cfg.mc.realizations = 30_000;
        (
            per_tier_coverage(&cfg, 0, &sweep).unwrap(),
            estimate_coverage(&cfg, &sweep).unwrap(),
        )
    };
    let (an_a, mc_a) = run(2e-6);
    let (an_b, mc_b) = run(2e-5);
    for g in 0..sweep.len() {
        assert!(
            (an_a.pc[g] - an_b.pc[g]).abs() < 2e-3,
            "{} vs {}",
            an_a.pc[g],
            an_b.pc[g]
        );
        let (a, b) = (mc_a.per_tier[0].covered[g], mc_b.per_tier[0].covered[g]);
        let se = (a.se().powi(2) + b.se().powi(2)).sqrt();
        assert!(
            (a.estimate() - b.estimate()).abs() < 3.0 * se,
            "{} vs {}",
            a.estimate(),
            b.estimate()
        );
    }
}

#[test]
fn finite_window_bias_is_negligible() {
    let mut cfg = single_macro(2);
    cfg.mc.realizations = 20_000;
    let sweep = SweepSpec::new(vec![0.0, 10.0]).unwrap();
    let worst = window_bias(&cfg, &sweep).unwrap();
    assert!(
        worst < 4.0,
        "window doubling moved coverage by {worst} s.e."
    );
}
