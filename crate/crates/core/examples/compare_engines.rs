//! Runs both engines on one network and prints their differences.
//!
//! `cargo run --release --example compare_engines`

use hetnet_coverage::analytic::network_coverage;
use hetnet_coverage::model::{NetworkConfig, SweepSpec, TierParams};
use hetnet_coverage::montecarlo::estimate_coverage;
use hetnet_coverage::report::comparison_rows;

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
    config.quad.distance_samples = 2000;
    config.mc.realizations = 30_000;
    // The analytic far field is all NLOS; matching it in the simulation
    // isolates the remaining numerical error.
    config.mc.farfield_all_nlos = true;
    let sweep = SweepSpec::new(vec![-10.0, 0.0, 10.0])?;

    let an = network_coverage(&config, &sweep)?;
    let mc = estimate_coverage(&config, &sweep)?;
    println!("gamma_db scope    analytic  simulated  delta    (s.e. an / mc)");
    for row in comparison_rows(&an, &mc) {
        println!(
            "{:>7}  {:<7}  {:.4}    {:.4}     {:+.4}  ({:.4} / {:.4})",
            row.gamma_db,
            row.scope,
            row.analytic,
            row.montecarlo,
            row.delta(),
            row.analytic_se,
            row.montecarlo_se
        );
    }
    Ok(())
}
