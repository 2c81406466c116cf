//! Semi-analytic coverage of a two-tier network over a threshold sweep.
//!
//! `cargo run --release --example analytic_sweep`

use hetnet_coverage::analytic::network_coverage;
use hetnet_coverage::model::{per_km2_to_per_m2, NetworkConfig, SweepSpec, TierParams};

fn main() -> hetnet_coverage::Result<()> {
    let macro_bs = TierParams {
        density: per_km2_to_per_m2(2.0),
        tx_power_dbm: 47.0,
        intercept_nlos_db: 2.7,
        intercept_los_db: 30.8,
        exponent_nlos: 4.28,
        exponent_los: 2.42,
        shadow_sigma_nlos_db: 8.0,
        shadow_sigma_los_db: 4.0,
    };
    let pico = TierParams {
        density: per_km2_to_per_m2(20.0),
        tx_power_dbm: 33.0,
        intercept_nlos_db: 32.9,
        intercept_los_db: 41.4,
        exponent_nlos: 3.75,
        exponent_los: 2.09,
        ..macro_bs
    };
    let mut config = NetworkConfig::new(vec![macro_bs, pico], 0.008, 3);
    config.quad.distance_samples = 500;
    let sweep = SweepSpec::range(-10.0, 20.0, 5.0)?;
    let net = network_coverage(&config, &sweep)?;

    println!("gamma_db  macro    pico     network  (± s.e.)");
    for (g, gamma) in net.gamma_db.iter().enumerate() {
        println!(
            "{gamma:>7}  {:.4}   {:.4}   {:.4}   ({:.4})",
            net.tiers[0].pc[g], net.tiers[1].pc[g], net.pc[g], net.pc_se[g]
        );
    }
    // Each tier's coverage splits by which of its candidates serves.
    let terms = &net.tiers[0].terms[0];
    println!("macro terms at {} dB: {terms:.4?}", net.gamma_db[0]);
    Ok(())
}
