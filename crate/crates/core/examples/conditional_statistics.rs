//! With the candidate distances fixed, compares the analytic joint
//! probability of serving and coverage against a conditional simulation.
//!
//! `cargo run --release --example conditional_statistics`

use hetnet_coverage::analytic::direct::decondition_power;
use hetnet_coverage::geometry::CandidateSet;
use hetnet_coverage::laplace::Inverter;
use hetnet_coverage::model::{db_to_linear, NetworkConfig, TierParams};
use hetnet_coverage::montecarlo::{empirical_conditionals, ConditioningSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> hetnet_coverage::Result<()> {
    let tier = TierParams {
        density: 2e-6,
        tx_power_dbm: 47.0,
        intercept_nlos_db: 2.7,
        intercept_los_db: 30.8,
        exponent_nlos: 4.28,
        exponent_los: 2.42,
        shadow_sigma_nlos_db: 8.0,
        shadow_sigma_los_db: 4.0,
    };
    let mut config = NetworkConfig::new(vec![tier], 0.008, 2);
    config.mc.farfield_all_nlos = true;
    config.quad.power_panels = 6;
    config.quad.power_panel_nodes = 4;
    let distances = vec![220.0, 380.0];
    let gamma_db = 0.0;

    let spec = ConditioningSpec {
        tier_index: 0,
        distances: distances.clone(),
        samples: 50_000,
        far_field_s: vec![],
        gamma_db: vec![gamma_db],
        interference_m: 1,
        interference_x: vec![],
        min_hits: 0,
    };
    let report = empirical_conditionals(&config, &spec, &mut ChaCha8Rng::seed_from_u64(5))?;
    let cands = CandidateSet {
        tier_index: 0,
        distances,
    };
    let inv = Inverter::euler(config.quad.euler_terms);
    for m in 1..=2 {
        let an = decondition_power(
            m,
            &cands,
            db_to_linear(gamma_db),
            &config.tier(0),
            0.008,
            &config.quad,
            &inv,
        )?;
        let sim = report.joint[0][m - 1];
        println!(
            "candidate {m}: P(serves, SIR ≥ {gamma_db} dB) analytic {an:.4}, simulated {:.4} ± {:.4}",
            sim.estimate(),
            sim.se()
        );
    }
    Ok(())
}
