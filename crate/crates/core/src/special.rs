//! Scalar special functions used by the propagation and transform code.

use num_complex::Complex64;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Standard normal CDF, computed through `erfc` so the lower tail keeps
/// full relative precision.
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

pub fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Density of `N(mean, sd^2)` at `y`.
pub fn gaussian_pdf(y: f64, mean: f64, sd: f64) -> f64 {
    norm_pdf((y - mean) / sd) / sd
}

/// `exp(z) - 1` without cancellation for small `|z|`.
pub fn expm1_c(z: Complex64) -> Complex64 {
    let (x, y) = (z.re, z.im);
    let em1 = libm::expm1(x);
    // Half-angle forms: cos y = 1 - 2 sin²(y/2), sin y = 2 sin(y/2) cos(y/2).
    let (sh, ch) = (0.5 * y).sin_cos();
    let vers = 2.0 * sh * sh;
    Complex64::new(em1 * (1.0 - vers) - vers, (em1 + 1.0) * 2.0 * sh * ch)
}

/// `1 - exp(-z)`.
pub fn one_minus_exp_neg(z: Complex64) -> Complex64 {
    -expm1_c(-z)
}
