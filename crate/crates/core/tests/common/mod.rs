//! Shared fixtures and goodness-of-fit helpers for the integration tests.
#![allow(dead_code)]

use hetnet_coverage::model::{NetworkConfig, TierParams};
use std::path::PathBuf;

/// Macro-tier propagation constants used across the tests.
pub fn macro_tier(density_per_m2: f64) -> TierParams {
    TierParams {
        density: density_per_m2,
        tx_power_dbm: 47.0,
        intercept_nlos_db: 2.7,
        intercept_los_db: 30.8,
        exponent_nlos: 4.28,
        exponent_los: 2.42,
        shadow_sigma_nlos_db: 8.0,
        shadow_sigma_los_db: 4.0,
    }
}

pub fn pico_tier(density_per_m2: f64) -> TierParams {
    TierParams {
        density: density_per_m2,
        tx_power_dbm: 33.0,
        intercept_nlos_db: 32.9,
        intercept_los_db: 41.4,
        exponent_nlos: 3.75,
        exponent_los: 2.09,
        shadow_sigma_nlos_db: 8.0,
        shadow_sigma_los_db: 4.0,
    }
}

pub const KAPPA: f64 = 0.008;

pub fn single_macro(n: usize) -> NetworkConfig {
    NetworkConfig::new(vec![macro_tier(2e-6)], KAPPA, n)
}

pub fn shipped_config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
}

/// One-sample Kolmogorov–Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Two-sample KS statistic.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic KS critical value at the 1% level: `c(0.01) / sqrt(n_eff)`.
pub fn ks_critical_1pct(n_eff: f64) -> f64 {
    1.627_6 / n_eff.sqrt()
}

/// Dvoretzky–Kiefer–Wolfowitz band half-width at confidence `1 - alpha`.
pub fn dkw_epsilon(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

/// Sample mean and its standard error.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
