//! Point-process sampling and the law of the ordered nearest distances.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use std::f64::consts::PI;
use std::io::Write;

use crate::error::{Error, Result};
use crate::model::Tier;
use crate::propagation::{prob_los, prob_nlos};
use crate::quad::adaptive_gk_real;

/// The `n` nearest BS distances of one tier, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub tier_index: usize,
    pub distances: Vec<f64>,
}

impl CandidateSet {
    pub fn n(&self) -> usize {
        self.distances.len()
    }

    /// Radius beyond which the far field starts.
    pub fn boundary(&self) -> f64 {
        *self.distances.last().expect("candidate set is never empty")
    }
}

/// BS positions of one tier in polar coordinates around the user.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Realization {
    pub radii: Vec<f64>,
    pub angles: Vec<f64>,
    pub window_radius: f64,
}

impl Realization {
    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }
}

fn check_ppp_inputs(density: f64, window_radius: f64) -> Result<()> {
    if !(density > 0.0 && density.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "density must be finite and > 0 (got {density})"
        )));
    }
    if !(window_radius > 0.0 && window_radius.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "window radius must be finite and > 0 (got {window_radius})"
        )));
    }
    Ok(())
}

/// Poisson count for a disk of radius `window_radius`.
pub fn sample_count<R: Rng + ?Sized>(
    density: f64,
    window_radius: f64,
    rng: &mut R,
) -> Result<usize> {
    check_ppp_inputs(density, window_radius)?;
    let mean = density * PI * window_radius * window_radius;
    let poisson = Poisson::new(mean).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let count: f64 = poisson.sample(rng);
    Ok(count as usize)
}

/// Radius of a uniform point on the disk; zero is redrawn.
pub fn sample_disk_radius<R: Rng + ?Sized>(window_radius: f64, rng: &mut R) -> f64 {
    loop {
        let r = window_radius * rng.random::<f64>().sqrt();
        if r > 0.0 {
            return r;
        }
    }
}

/// One tier's PPP restricted to the disk of radius `window_radius`.
pub fn sample_ppp<R: Rng + ?Sized>(
    density: f64,
    window_radius: f64,
    rng: &mut R,
) -> Result<Realization> {
    let count = sample_count(density, window_radius, rng)?;
    let mut radii = Vec::with_capacity(count);
    let mut angles = Vec::with_capacity(count);
    for _ in 0..count {
        radii.push(sample_disk_radius(window_radius, rng));
        angles.push(2.0 * PI * rng.random::<f64>());
    }
    Ok(Realization {
        radii,
        angles,
        window_radius,
    })
}

/// The `n` smallest radii, ascending.
pub fn nearest_n(real: &Realization, n: usize, tier_index: usize) -> Result<CandidateSet> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    if real.len() < n {
        return Err(Error::InsufficientPoints {
            needed: n,
            found: real.len(),
        });
    }
    let mut r = real.radii.clone();
    if n < r.len() {
        r.select_nth_unstable_by(n - 1, f64::total_cmp);
        r.truncate(n);
    }
    r.sort_by(f64::total_cmp);
    Ok(CandidateSet {
        tier_index,
        distances: r,
    })
}

/// Joint density of the ascending distances to the `n` nearest points.
pub fn joint_distance_pdf(distances: &[f64], density: f64) -> f64 {
    if distances.is_empty() || distances[0] <= 0.0 {
        return 0.0;
    }
    if distances.windows(2).any(|w| w[1] < w[0]) {
        return 0.0;
    }
    let rn = *distances.last().unwrap();
    let log = distances.len() as f64 * (2.0 * PI * density).ln()
        + distances.iter().map(|r| r.ln()).sum::<f64>()
        - PI * density * rn * rn;
    log.exp()
}

/// Exact draw of the ordered distances: `πλ r_i²` are the arrival times of
/// a unit-rate Poisson process.
pub fn sample_joint_distances<R: Rng + ?Sized>(
    density: f64,
    n: usize,
    tier_index: usize,
    rng: &mut R,
) -> CandidateSet {
    let mut arrival = 0.0;
    let mut distances = Vec::with_capacity(n);
    while distances.len() < n {
        let e: f64 = Exp1.sample(rng);
        arrival += e;
        if arrival > 0.0 {
            distances.push((arrival / (PI * density)).sqrt());
        }
    }
    CandidateSet {
        tier_index,
        distances,
    }
}

/// Mean received power at distance `v`, averaged over blockage and
/// shadowing.
pub fn mean_power(tier: &Tier, v: f64, kappa: f64) -> f64 {
    let p = &tier.params;
    let l = &tier.linear;
    prob_nlos(v, kappa) * l.b_nlos * tier.nlos_shadow_mean() * v.powf(-p.exponent_nlos)
        + prob_los(v, kappa) * l.b_los * tier.los_shadow_mean() * v.powf(-p.exponent_los)
}

/// `∫_a^b mean_power(v) v dv`, the mean shot noise of an annulus per unit
/// `2πλ`.
fn annulus_mean(tier: &Tier, kappa: f64, a: f64, b: f64) -> Option<f64> {
    adaptive_gk_real(
        |tau| {
            let v = tau.exp();
            mean_power(tier, v, kappa) * v * v
        },
        a.ln(),
        b.ln(),
        0.0,
        1e-10,
    )
}

/// Upper bound on `∫_R^∞ mean_power(v) v dv`; infinite when it diverges.
pub fn tail_mean_bound(tier: &Tier, kappa: f64, radius: f64) -> f64 {
    let p = &tier.params;
    let l = &tier.linear;
    let mut total = 0.0;
    if kappa > 0.0 {
        total += if p.exponent_nlos > 2.0 {
            l.b_nlos * tier.nlos_shadow_mean() * radius.powf(2.0 - p.exponent_nlos)
                / (p.exponent_nlos - 2.0)
        } else {
            f64::INFINITY
        };
        // e^{-κv} makes the LOS tail effectively finite within 60/κ.
        let los = adaptive_gk_real(
            |v| (-kappa * v).exp() * v.powf(1.0 - p.exponent_los),
            radius,
            radius + 60.0 / kappa,
            0.0,
            1e-10,
        )
        .unwrap_or(f64::INFINITY);
        total += l.b_los * tier.los_shadow_mean() * los;
    } else {
        total += if p.exponent_los > 2.0 {
            l.b_los * tier.los_shadow_mean() * radius.powf(2.0 - p.exponent_los)
                / (p.exponent_los - 2.0)
        } else {
            f64::INFINITY
        };
    }
    total
}

/// `P(N < n)` for `N ~ Poisson(mean)`.
pub fn poisson_cdf_below(n: usize, mean: f64) -> f64 {
    let mut term = (-mean).exp();
    let mut acc = 0.0;
    for k in 0..n {
        acc += term;
        term *= mean / (k + 1) as f64;
    }
    acc
}

/// Simulation window for one tier.
///
/// The neglected mean interference beyond the window is at most
/// `tail_ratio` times the mean interference from the annulus between the
/// typical nearest distance `1/(2√λ)` and the window edge, and the window
/// holds fewer than `n` points with probability below `1e-9`.
pub fn window_radius(tier: &Tier, kappa: f64, n: usize, tail_ratio: f64) -> Result<f64> {
    let density = tier.density();
    let r_ref = 0.5 / density.sqrt();
    let mut radius = 4.0 * r_ref;
    let cap = 1e4 * r_ref;
    while radius <= cap {
        let enough = poisson_cdf_below(n, density * PI * radius * radius) < 1e-9;
        if enough {
            let tail = tail_mean_bound(tier, kappa, radius);
            if tail.is_finite() {
                let inside = annulus_mean(tier, kappa, r_ref, radius).unwrap_or(0.0);
                if tail <= tail_ratio * inside {
                    return Ok(radius);
                }
            }
        }
        radius *= 1.1;
    }
    Err(Error::InvalidParameter(format!(
        "no window up to {cap:.3e} m bounds the interference tail to {tail_ratio:e}; \
         the path-loss exponents are too small"
    )))
}

/// Writes `tier,radius_m,angle_rad` rows for debugging.
pub fn write_realizations_csv<W: Write>(
    out: &mut W,
    tiers: &[(usize, &Realization)],
) -> Result<()> {
    writeln!(out, "tier,radius_m,angle_rad")?;
    for (k, real) in tiers {
        for (r, a) in real.radii.iter().zip(&real.angles) {
            writeln!(out, "{k},{r:.17e},{a:.17e}")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TierParams;
    use crate::quad::{composite, gauss_legendre, uniform_edges};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn macro_tier(density: f64) -> Tier {
        Tier::new(TierParams {
            density,
            tx_power_dbm: 47.0,
            intercept_nlos_db: 2.7,
            intercept_los_db: 30.8,
            exponent_nlos: 4.28,
            exponent_los: 2.42,
            shadow_sigma_nlos_db: 8.0,
            shadow_sigma_los_db: 4.0,
        })
    }

    #[test]
    fn ppp_count_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (lambda, radius) = (1e-5, 5000.0);
        let draws = 10_000;
        let total: usize = (0..draws)
            .map(|_| sample_count(lambda, radius, &mut rng).unwrap())
            .sum();
        let mean = lambda * PI * radius * radius;
        let se = (mean / draws as f64).sqrt();
        assert!((total as f64 / draws as f64 - mean).abs() < 3.0 * se);
    }

    #[test]
    fn ppp_radii_inside_window_and_empty_is_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let real = sample_ppp(1e-4, 300.0, &mut rng).unwrap();
        assert!(real.radii.iter().all(|&r| r > 0.0 && r <= 300.0));
        assert_eq!(real.radii.len(), real.angles.len());
        let empties = (0..200)
            .filter(|_| sample_ppp(1e-9, 10.0, &mut rng).unwrap().is_empty())
            .count();
        assert_eq!(empties, 200);
        assert!(sample_ppp(f64::NAN, 1.0, &mut rng).is_err());
        assert!(sample_ppp(1.0, -1.0, &mut rng).is_err());
    }

    #[test]
    fn mean_nearest_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let lambda = 1e-5;
        let draws = 20_000;
        let r1: Vec<f64> = (0..draws)
            .map(|_| {
                let real = sample_ppp(lambda, 1500.0, &mut rng).unwrap();
                nearest_n(&real, 1, 0).unwrap().distances[0]
            })
            .collect();
        let mean = r1.iter().sum::<f64>() / draws as f64;
        // Var[R1] = (4 - π)/(4πλ).
        let se = ((4.0 - PI) / (4.0 * PI * lambda) / draws as f64).sqrt();
        assert!((mean - 0.5 / lambda.sqrt()).abs() < 3.0 * se, "{mean}");
    }

    #[test]
    fn nearest_n_sorts_and_reports_shortfall() {
        let real = Realization {
            radii: vec![3.0, 1.0, 2.0],
            angles: vec![0.0; 3],
            window_radius: 5.0,
        };
        assert_eq!(nearest_n(&real, 2, 0).unwrap().distances, vec![1.0, 2.0]);
        assert_eq!(
            nearest_n(&real, 3, 0).unwrap().distances,
            vec![1.0, 2.0, 3.0]
        );
        assert_eq!(
            nearest_n(&real, 4, 0),
            Err(Error::InsufficientPoints {
                needed: 4,
                found: 3
            })
        );
    }

    #[test]
    fn joint_pdf_normalization() {
        let lambda: f64 = 1e-4;
        // n = 1 is a Rayleigh density.
        let upper = 12.0 / lambda.sqrt();
        let nodes = composite(&uniform_edges(0.0, upper, 200), &gauss_legendre(10));
        let one: f64 = nodes
            .iter()
            .map(|&(r, w)| w * joint_distance_pdf(&[r], lambda))
            .sum();
        assert!((one - 1.0).abs() < 1e-10);

        // n = 2 on the ordered simplex r1 ≤ r2.
        let rule = gauss_legendre(10);
        let outer = composite(&uniform_edges(0.0, upper, 120), &rule);
        let mut two = 0.0;
        for &(r2, w2) in &outer {
            let inner = composite(&uniform_edges(0.0, r2, 4), &rule);
            let s: f64 = inner
                .iter()
                .map(|&(r1, w1)| w1 * joint_distance_pdf(&[r1, r2], lambda))
                .sum();
            two += w2 * s;
        }
        assert!((two - 1.0).abs() < 1e-6, "{two}");
        assert_eq!(joint_distance_pdf(&[2.0, 1.0], lambda), 0.0);
    }

    #[test]
    fn arrival_time_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (lambda, n, draws) = (3e-6, 5, 50_000);
        let s: f64 = (0..draws)
            .map(|_| {
                let c = sample_joint_distances(lambda, n, 0, &mut rng);
                PI * lambda * c.boundary().powi(2)
            })
            .sum();
        let se = (n as f64 / draws as f64).sqrt();
        assert!((s / draws as f64 - n as f64).abs() < 3.0 * se);
    }

    #[test]
    fn window_bounds_tail() {
        let t = macro_tier(2e-6);
        let r = window_radius(&t, 0.008, 5, 1e-4).unwrap();
        let r_ref = 0.5 / 2e-6f64.sqrt();
        let inside = annulus_mean(&t, 0.008, r_ref, r).unwrap();
        assert!(tail_mean_bound(&t, 0.008, r) <= 1e-4 * inside);
        assert!(poisson_cdf_below(5, 2e-6 * PI * r * r) < 1e-9);

        let mut flat = t;
        flat.params.exponent_nlos = 1.9;
        assert!(window_radius(&flat, 0.008, 5, 1e-4).is_err());
    }

    #[test]
    fn tail_bound_dominates_quadrature() {
        let t = macro_tier(2e-6);
        for &radius in &[500.0, 2000.0, 8000.0] {
            let exact = annulus_mean(&t, 0.008, radius, radius * 1e4).unwrap();
            assert!(tail_mean_bound(&t, 0.008, radius) >= exact);
        }
    }

    #[test]
    fn csv_dump_shape() {
        let real = Realization {
            radii: vec![1.0, 2.0],
            angles: vec![0.5, 1.5],
            window_radius: 3.0,
        };
        let mut buf = Vec::new();
        write_realizations_csv(&mut buf, &[(1, &real)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("tier,radius_m,angle_rad\n1,1.0"));
    }

    proptest! {
        #[test]
        fn sampled_distances_ascending(seed in any::<u64>(), n in 1usize..12) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = sample_joint_distances(1e-5, n, 0, &mut rng);
            prop_assert_eq!(c.n(), n);
            prop_assert!(c.distances.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(c.distances[0] > 0.0);
        }

        #[test]
        fn joint_pdf_zero_on_descending_pairs(a in 1.0f64..1e4, d in 1e-6f64..1e3) {
            prop_assert_eq!(joint_distance_pdf(&[a + d, a], 1e-5), 0.0);
            prop_assert!(joint_distance_pdf(&[a, a + d], 1e-5) > 0.0 || a + d > 1e3);
        }
    }
}
