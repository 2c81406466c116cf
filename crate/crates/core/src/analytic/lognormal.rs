//! Laplace transform of a lognormal variable, `ψ_σ(q) = E[exp(-q e^{σZ})]`,
//! its complement `1 - ψ`, and its partial form.
//!
//! `ψ` is analytic on `C \ (-∞, 0]`. Off the right half-plane the Gaussian
//! integral is evaluated on the shifted line `y = x + iη`, where the
//! integrand decays again; this is the analytic continuation, not an
//! approximation.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::quad::adaptive_gk;
use crate::special::one_minus_exp_neg;

/// Gaussian integrals are cut at this many standard deviations.
pub const SPAN: f64 = 12.0;
/// Residual argument kept after rotating the contour.
const RESIDUAL_ARG: f64 = 1.0;

/// Imaginary shift that brings `arg(q e^{iη})` within [`RESIDUAL_ARG`].
pub fn rotation(q: Complex64) -> f64 {
    let a = q.arg();
    if a.abs() <= 1.2 {
        0.0
    } else {
        -(a - a.signum() * RESIDUAL_ARG)
    }
}

/// `N(x + iη; 0, σ)`.
fn shifted_gaussian(x: f64, eta: f64, sigma: f64) -> Complex64 {
    let norm = 1.0 / (sigma * (2.0 * PI).sqrt());
    let k = 0.5 / (sigma * sigma);
    if eta == 0.0 {
        return Complex64::new(norm * (-k * x * x).exp(), 0.0);
    }
    let z = Complex64::new(x, eta);
    (-(z * z) * k).exp() * norm
}

/// `E[e^{nσZ}]`.
pub fn moment(n: f64, sigma: f64) -> f64 {
    (0.5 * n * n * sigma * sigma).exp()
}

fn series_ok(q: Complex64, sigma: f64) -> bool {
    let qn = q.norm();
    qn * qn * moment(3.0, sigma) / (6.0 * moment(1.0, sigma)) < 1e-14
}

fn series(q: Complex64, sigma: f64) -> Complex64 {
    q * moment(1.0, sigma) - q * q * (0.5 * moment(2.0, sigma))
        + q * q * q * (moment(3.0, sigma) / 6.0)
}

/// `1 - ψ_σ(q)`, accurate for small `|q|`.
pub fn lognormal_lt_complement(q: Complex64, sigma: f64) -> Complex64 {
    if q == Complex64::new(0.0, 0.0) {
        return Complex64::new(0.0, 0.0);
    }
    if sigma == 0.0 {
        return one_minus_exp_neg(q);
    }
    if series_ok(q, sigma) {
        return series(q, sigma);
    }
    let eta = rotation(q);
    let qr = q * Complex64::new(0.0, eta).exp();
    let f = |x: f64| shifted_gaussian(x, eta, sigma) * one_minus_exp_neg(qr * x.exp());
    // Split where |q e^x| = 1 so the transition region starts a panel.
    let knee = (-qr.norm().ln()).clamp(-SPAN * sigma, SPAN * sigma);
    let lo = -SPAN * sigma;
    let hi = SPAN * sigma;
    let a = adaptive_gk(f, lo, knee, 1e-17, 1e-12).unwrap_or(Complex64::new(f64::NAN, 0.0));
    let b = adaptive_gk(f, knee, hi, 1e-17, 1e-12).unwrap_or(Complex64::new(f64::NAN, 0.0));
    a + b
}

/// `ψ_σ(q)`.
pub fn lognormal_lt(q: Complex64, sigma: f64) -> Complex64 {
    if sigma == 0.0 {
        return (-q).exp();
    }
    Complex64::new(1.0, 0.0) - lognormal_lt_complement(q, sigma)
}

/// `∫_{-∞}^{b} N(v; 0, σ) exp(-q e^v) dv`.
pub fn partial_lognormal_lt(q: Complex64, sigma: f64, b: f64) -> Complex64 {
    if sigma == 0.0 {
        return if b >= 0.0 {
            (-q).exp()
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
    if b > SPAN * sigma {
        return lognormal_lt(q, sigma);
    }
    let eta = rotation(q);
    let qr = q * Complex64::new(0.0, eta).exp();
    let lo = b.min(0.0) - SPAN * sigma;
    let horizontal = |x: f64| shifted_gaussian(x, eta, sigma) * (-(qr * x.exp())).exp();
    let knee = (-qr.norm().ln()).clamp(lo, b);
    let mut total = adaptive_gk(horizontal, lo, knee, 1e-300, 1e-12)
        .unwrap_or(Complex64::new(f64::NAN, 0.0))
        + adaptive_gk(horizontal, knee, b, 1e-300, 1e-12).unwrap_or(Complex64::new(f64::NAN, 0.0));
    if eta != 0.0 {
        // Closing segment from b + iη back to b.
        let i = Complex64::new(0.0, 1.0);
        let vertical = |tau: f64| {
            let y = Complex64::new(b, tau);
            let g = (-(y * y) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * PI).sqrt());
            -(g * (-(q * y.exp())).exp()) * i
        };
        let (a0, a1) = if eta < 0.0 { (eta, 0.0) } else { (0.0, eta) };
        let seg =
            adaptive_gk(vertical, a0, a1, 1e-300, 1e-12).unwrap_or(Complex64::new(f64::NAN, 0.0));
        // Orientation: the path runs τ: η → 0.
        total += if eta < 0.0 { -seg } else { seg };
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{adaptive_gk_real, composite, gauss_legendre, uniform_edges};

    // Plain real-line quadrature, valid for Re q > 0.
    fn brute(q: Complex64, sigma: f64, b: f64) -> Complex64 {
        let nodes = composite(
            &uniform_edges(-14.0 * sigma, b.min(14.0 * sigma), 4000),
            &gauss_legendre(12),
        );
        nodes
            .iter()
            .map(|&(v, w)| {
                w * (-0.5 * v * v / (sigma * sigma)).exp() / (sigma * (2.0 * PI).sqrt())
                    * (-(q * v.exp())).exp()
            })
            .sum()
    }

    #[test]
    fn matches_brute_force_in_right_half_plane() {
        for &sigma in &[0.4, 0.92, 1.84, 2.3] {
            for &(re, im) in &[
                (1e-3, 0.0),
                (0.7, 0.0),
                (3.0, 20.0),
                (8.44, 69.1),
                (40.0, -5.0),
            ] {
                let q = Complex64::new(re, im);
                let got = lognormal_lt(q, sigma);
                let want = brute(q, sigma, 1e9);
                assert!(
                    (got - want).norm() < 1e-11,
                    "σ={sigma} q={q}: {got} vs {want}"
                );
                for &b in &[-1.5 * sigma, 0.0, 0.8 * sigma] {
                    let g = partial_lognormal_lt(q, sigma, b);
                    let w = brute(q, sigma, b);
                    assert!((g - w).norm() < 1e-11, "b={b}: {g} vs {w}");
                }
            }
        }
    }

    #[test]
    fn complement_small_argument() {
        let sigma = 1.84;
        let q = Complex64::new(1e-9, 2e-9);
        let c = lognormal_lt_complement(q, sigma);
        let lead = q * moment(1.0, sigma);
        assert!((c - lead).norm() < 1e-6 * lead.norm());
        // Just above the series switch the quadrature takes over smoothly.
        let q = Complex64::new(2e-4, 0.0);
        let c = lognormal_lt_complement(q, sigma);
        let direct = adaptive_gk_real(
            |v| {
                (-0.5 * v * v / (sigma * sigma)).exp() / (sigma * (2.0 * PI).sqrt())
                    * -(-(q.re * v.exp())).exp_m1()
            },
            -14.0 * sigma,
            14.0 * sigma,
            1e-20,
            1e-13,
        )
        .unwrap();
        assert!(
            (c.re - direct).abs() < 1e-11 * direct,
            "{} vs {direct}",
            c.re
        );
    }

    #[test]
    fn rotated_contour_is_a_continuation() {
        // Two different admissible shifts must agree.
        let sigma = 1.2;
        let q = Complex64::from_polar(3.0, 2.4);
        let direct = lognormal_lt(q, sigma);
        let eta = -(2.4 - 0.6);
        let qr = q * Complex64::new(0.0, eta).exp();
        let alt = adaptive_gk(
            |x| shifted_gaussian(x, eta, sigma) * (-(qr * x.exp())).exp(),
            -15.0 * sigma,
            15.0 * sigma,
            1e-300,
            1e-13,
        )
        .unwrap();
        assert!((direct - alt).norm() < 1e-10, "{direct} vs {alt}");

        // Across the real axis the continuation is conjugate-symmetric.
        let conj = lognormal_lt(q.conj(), sigma);
        assert!((conj - direct.conj()).norm() < 1e-12);
    }

    #[test]
    fn partial_continuation_agrees_with_moment_expansion() {
        // For a strongly truncated component the partial transform is an
        // entire function of q; its Taylor series converges everywhere.
        let sigma = 0.9;
        let b = -0.5;
        let q = Complex64::from_polar(0.8, 2.9);
        let mut taylor = Complex64::new(0.0, 0.0);
        let mut coef = Complex64::new(1.0, 0.0);
        for n in 0..25 {
            let nf = n as f64;
            // ∫_{-∞}^{b} N(v) e^{n v} dv = m_n Φ((b - nσ²)/σ).
            let m = moment(nf, sigma) * crate::special::norm_cdf((b - nf * sigma * sigma) / sigma);
            taylor += coef * m;
            coef *= -q / (nf + 1.0);
        }
        let got = partial_lognormal_lt(q, sigma, b);
        assert!((got - taylor).norm() < 1e-10, "{got} vs {taylor}");
    }

    #[test]
    fn degenerate_sigma() {
        let q = Complex64::new(0.3, 0.2);
        assert_eq!(lognormal_lt(q, 0.0), (-q).exp());
        assert_eq!(partial_lognormal_lt(q, 0.0, -0.1), Complex64::new(0.0, 0.0));
    }
}
