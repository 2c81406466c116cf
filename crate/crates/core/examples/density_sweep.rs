//! Simulated network coverage as the small-cell density grows.
//!
//! `cargo run --release --example density_sweep`

use hetnet_coverage::model::{per_km2_to_per_m2, NetworkConfig, SweepSpec, TierParams};
use hetnet_coverage::montecarlo::estimate_coverage;

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
        tx_power_dbm: 33.0,
        intercept_nlos_db: 32.9,
        intercept_los_db: 41.4,
        exponent_nlos: 3.75,
        exponent_los: 2.09,
        ..macro_bs
    };
    let sweep = SweepSpec::new(vec![0.0])?;
    println!("pico/km²  coverage at 0 dB");
    for per_km2 in [10.0, 50.0, 100.0, 200.0, 400.0] {
        let mut config = NetworkConfig::new(
            vec![
                macro_bs,
                TierParams {
                    density: per_km2_to_per_m2(per_km2),
                    ..pico
                },
            ],
            0.008,
            2,
        );
        config.mc.realizations = 20_000;
        let mc = estimate_coverage(&config, &sweep)?;
        let p = mc.network.covered[0];
        println!("{per_km2:>8}  {:.4} ± {:.4}", p.estimate(), p.se());
    }
    Ok(())
}
