//! Monte Carlo coverage with Wilson intervals and association statistics.
//!
//! `cargo run --release --example monte_carlo`

use hetnet_coverage::model::{NetworkConfig, SweepSpec, TierParams};
use hetnet_coverage::montecarlo::{estimate_coverage, Z95};

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
    let mut config = NetworkConfig::new(vec![tier], 0.008, 3);
    config.mc.realizations = 20_000;
    config.mc.seed = 42;
    let sweep = SweepSpec::new(vec![-10.0, 0.0, 10.0, 20.0])?;
    let mc = estimate_coverage(&config, &sweep)?;

    for (g, gamma) in mc.gamma_db.iter().enumerate() {
        let p = mc.network.covered[g];
        let (lo, hi) = p.wilson(Z95);
        println!(
            "{gamma:>5} dB  pc = {:.4}  95% [{lo:.4}, {hi:.4}]",
            p.estimate()
        );
    }
    let freq: Vec<String> = mc.per_tier[0]
        .assoc
        .iter()
        .map(|a| format!("{:.3}", a.estimate()))
        .collect();
    println!("serving candidate frequencies: [{}]", freq.join(", "));
    println!(
        "window radius {:.0} m; {} realizations where the SIR and power winners differ",
        mc.window_radii[0], mc.argmax_mismatches
    );
    Ok(())
}
