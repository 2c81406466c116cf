//! Numerical Laplace inversion: the built-in self-test and the agreement of
//! the two algorithms on a conditional interference law.
//!
//! `cargo run --release --example laplace_inversion`

use hetnet_coverage::analytic::inversion_agreement;
use hetnet_coverage::geometry::CandidateSet;
use hetnet_coverage::laplace::{self_test_report, Inverter};
use hetnet_coverage::model::{NetworkConfig, TierParams};
use num_complex::Complex64;

fn main() -> hetnet_coverage::Result<()> {
    for inv in [Inverter::euler(15), Inverter::talbot(32)] {
        let r = self_test_report(&inv);
        println!(
            "{:?}({}): exponential {:.1e}, gamma(2) {:.1e}",
            inv.method, inv.order, r.exponential, r.gamma2
        );
    }

    // CDF of an Erlang(2, 1) variable from its transform 1/(1+s)².
    let one = Complex64::new(1.0, 0.0);
    let x = 1.5;
    let cdf = Inverter::talbot(32).cdf(|s| one / ((one + s) * (one + s)), x);
    println!(
        "Erlang CDF at {x}: {cdf:.12} (exact {:.12})",
        1.0 - (1.0 + x) * (-x).exp()
    );

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
    let config = NetworkConfig::new(vec![tier], 0.008, 2);
    let distances = CandidateSet {
        tier_index: 0,
        distances: vec![200.0, 450.0],
    };
    // Interference seen by the nearest BS when it delivers 1e-10 W.
    let points = inversion_agreement(
        1,
        1e-10,
        &distances,
        &config.tier(0),
        0.008,
        &config.quad,
        8,
    )?;
    for p in points {
        println!(
            "x = {:.3e} W  Euler {:.8}  Talbot {:.8}  gap {:.1e}",
            p.x,
            p.euler,
            p.talbot,
            p.gap()
        );
    }
    Ok(())
}
