//! Per-conditioning transform pipeline evaluated without tables.
//!
//! These routines follow the derivation step by step: truncated power
//! transforms, their product over the peers, the far-field PGFL, numerical
//! inversion, and the de-conditioning over the serving power. They are slow
//! and serve as the reference for the tabulated engine.

use num_complex::Complex64;
use std::f64::consts::{PI, SQRT_2};

use super::lognormal::{
    lognormal_lt, lognormal_lt_complement, moment, partial_lognormal_lt, rotation, SPAN,
};
use crate::error::{Error, Result};
use crate::geometry::CandidateSet;
use crate::laplace::Inverter;
use crate::model::{QuadControls, Tier};
use crate::propagation::{components, power_cdf_given_r};
use crate::quad::{adaptive_gk, composite, gauss_hermite_cached, gauss_legendre, uniform_edges};
use crate::special::one_minus_exp_neg;
use errorfunctions::ComplexErrorFunctions;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `E[e^{-sP} | P ≤ t, r]`.
pub fn lt_truncated_power(
    s: Complex64,
    t: f64,
    r: f64,
    tier: &Tier,
    kappa: f64,
) -> Result<Complex64> {
    let mass = power_cdf_given_r(t, r, tier, kappa)?;
    if !(mass > 0.0) {
        return Err(Error::ZeroMass { t });
    }
    Ok(partial_power_lt(s, t, r, tier, kappa) / mass)
}

/// `∫_0^t e^{-sx} f_P(x | r) dx`, not normalized.
pub fn partial_power_lt(s: Complex64, t: f64, r: f64, tier: &Tier, kappa: f64) -> Complex64 {
    let lt = t.ln();
    components(tier, r, kappa)
        .iter()
        .filter(|c| c.weight > 0.0)
        .map(|c| c.weight * partial_lognormal_lt(s * c.mu.exp(), c.sigma, lt - c.mu))
        .sum()
}

fn check_index(m: usize, n: usize) -> Result<()> {
    if m == 0 || m > n {
        return Err(Error::InvalidParameter(format!(
            "association index {m} outside 1..={n}"
        )));
    }
    Ok(())
}

/// Transform of the interference from the other `n - 1` candidates, each
/// conditioned on staying below `t`. `m` is 1-based.
pub fn lt_near_interference(
    s: Complex64,
    m: usize,
    t: f64,
    distances: &CandidateSet,
    tier: &Tier,
    kappa: f64,
) -> Result<Complex64> {
    check_index(m, distances.n())?;
    let mut acc = ONE;
    for (j, &r) in distances.distances.iter().enumerate() {
        if j + 1 != m {
            acc *= lt_truncated_power(s, t, r, tier, kappa)?;
        }
    }
    Ok(acc)
}

/// Node count used by [`phi_kernel`] for a given transform argument.
pub fn hermite_nodes_for(s: Complex64, v: f64, tier: &Tier, base: usize) -> usize {
    let scale = tier.linear.b_nlos * v.powf(-tier.params.exponent_nlos);
    let need = 16.0 + 8.0 * s.im.abs() * scale;
    if need > base as f64 {
        2 * base
    } else {
        base
    }
}

/// Largest Gauss–Hermite rule [`phi_kernel`] escalates to.
pub const MAX_HERMITE_NODES: usize = 512;

/// `φ(v, s) = E[exp(-s B_N v^{-α_N} e^{βξ_N})]` by Gauss–Hermite quadrature.
///
/// Starts from `base_nodes` (doubled for strongly oscillating arguments) and
/// keeps doubling until two successive rules agree to `1e-12` relative. If
/// [`MAX_HERMITE_NODES`] is reached first, the contour-shifted adaptive
/// integral takes over.
pub fn phi_kernel(v: f64, s: Complex64, tier: &Tier, base_nodes: usize) -> Complex64 {
    let scale = tier.linear.b_nlos * v.powf(-tier.params.exponent_nlos);
    let sigma = tier.linear.sigma_s_nlos;
    if sigma == 0.0 {
        return (-(s * scale)).exp();
    }
    let q = s * scale;
    let gh = |n: usize| {
        let rule = gauss_hermite_cached(n);
        let mut acc = ZERO;
        for (z, w) in rule.nodes.iter().zip(&rule.weights) {
            acc += w * (-(q * (SQRT_2 * sigma * z).exp())).exp();
        }
        acc / PI.sqrt()
    };
    let mut n = hermite_nodes_for(s, v, tier, base_nodes).min(MAX_HERMITE_NODES);
    let mut prev = gh(n);
    while 2 * n <= MAX_HERMITE_NODES {
        n *= 2;
        let cur = gh(n);
        if (cur - prev).norm() <= 1e-12 * cur.norm() {
            return cur;
        }
        prev = cur;
    }
    lognormal_lt(q, sigma)
}

/// Outer radius beyond which the far-field exponent changes by less than
/// `tolerance`, from `|1 - φ| ≤ |s| B_N E[e^{βξ}] v^{-α_N}`.
pub fn far_tail_radius(s: Complex64, r_n: f64, tier: &Tier, tolerance: f64) -> Result<f64> {
    let a = tier.params.exponent_nlos;
    if !(a > 2.0) {
        return Err(Error::TailNotConverged {
            bound: f64::INFINITY,
            tolerance,
            radius: f64::INFINITY,
        });
    }
    let c = 2.0
        * PI
        * tier.density()
        * s.norm()
        * tier.linear.b_nlos
        * moment(1.0, tier.linear.sigma_s_nlos)
        / (a - 2.0);
    Ok((c / tolerance).powf(1.0 / (a - 2.0)).max(r_n))
}

pub fn far_tail_bound(s: Complex64, radius: f64, tier: &Tier) -> f64 {
    let a = tier.params.exponent_nlos;
    2.0 * PI
        * tier.density()
        * s.norm()
        * tier.linear.b_nlos
        * moment(1.0, tier.linear.sigma_s_nlos)
        * radius.powf(2.0 - a)
        / (a - 2.0)
}

/// PGFL transform of the all-NLOS interference from beyond `r_n`.
pub fn lt_far_interference(
    s: Complex64,
    r_n: f64,
    tier: &Tier,
    quad: &QuadControls,
) -> Result<Complex64> {
    if s == ZERO {
        return Ok(ONE);
    }
    let radius = match quad.tail_radius_m {
        Some(r) => {
            if tier.params.exponent_nlos <= 2.0 {
                return Err(Error::TailNotConverged {
                    bound: f64::INFINITY,
                    tolerance: quad.tail_tolerance,
                    radius: r,
                });
            }
            let bound = far_tail_bound(s, r, tier);
            if bound > quad.tail_tolerance {
                return Err(Error::TailNotConverged {
                    bound,
                    tolerance: quad.tail_tolerance,
                    radius: r,
                });
            }
            r
        }
        None => far_tail_radius(s, r_n, tier, quad.tail_tolerance)?,
    };
    if radius <= r_n {
        return Ok(ONE);
    }
    let a = tier.params.exponent_nlos;
    let q = s * tier.linear.b_nlos;
    let sigma = tier.linear.sigma_s_nlos;
    let (lo, hi) = (r_n.ln(), radius.ln());
    // A window much narrower than the shadowing spread makes the erf kernel
    // a difference of nearly equal tails; the nested form is cheap there.
    let integral = if sigma == 0.0 || a * (hi - lo) < sigma {
        far_integral_nested(q, a, sigma, lo, hi)
    } else {
        far_integral(q, a, sigma, lo, hi)
    }
    .ok_or_else(|| Error::QuadratureNotConverged("far-field radial integral".into()))?;
    Ok((-2.0 * PI * tier.density() * integral).exp())
}

/// `∫_{lo}^{hi} e^{2τ} [1 - ψ_σ(q e^{-aτ})] dτ`, nesting the lognormal
/// average inside the radial integral.
fn far_integral_nested(q: Complex64, a: f64, sigma: f64, lo: f64, hi: f64) -> Option<Complex64> {
    let f = |tau: f64| lognormal_lt_complement(q * (-a * tau).exp(), sigma) * (2.0 * tau).exp();
    let edges = uniform_edges(lo, hi, ((hi - lo) / 0.5).ceil().max(1.0) as usize);
    let mut integral = ZERO;
    for w in edges.windows(2) {
        integral += adaptive_gk(f, w[0], w[1], 1e-300, 1e-11)?;
    }
    Some(integral)
}

/// The same integral with the order swapped. With `u = x - aτ` the radial
/// integral of the Gaussian density has a closed form, leaving
/// `∫ (1 - exp(-q e^u)) K(u) du`. The `u` line is shifted by `iη` as in
/// the lognormal transform, so `q` may lie anywhere off the negative axis.
fn far_integral(q: Complex64, a: f64, sigma: f64, lo: f64, hi: f64) -> Option<Complex64> {
    let eta = rotation(q);
    let qr = q * Complex64::new(0.0, eta).exp();
    let c = 2.0 / a;
    let shift = c * sigma * sigma;
    let log_front = 0.5 * c * c * sigma * sigma - (2.0 * a).ln();
    let s2 = sigma * SQRT_2;
    // K(z) = ∫_{lo}^{hi} e^{2τ} N(z + aτ; 0, σ) dτ
    //      = e^{-cz + c²σ²/2} / (2a) · [erfc(w_lo) - erfc(w_hi)].
    let kernel = |z: Complex64| -> Complex64 {
        let w_lo = (z + a * lo - shift) / s2;
        let w_hi = (z + a * hi - shift) / s2;
        let e = -c * z + log_front;
        // erfc(w) = erfcx(w) e^{-w²}; pick the tail that avoids cancellation.
        let tail = |w: Complex64| (e - w * w).exp() * w.erfcx();
        if w_lo.re >= 0.0 {
            tail(w_lo) - tail(w_hi)
        } else if w_hi.re <= 0.0 {
            tail(-w_hi) - tail(-w_lo)
        } else {
            e.exp() * (2.0 - w_hi.erfc() - (-w_lo).erfc())
        }
    };
    let g = |u: f64| one_minus_exp_neg(qr * u.exp()) * kernel(Complex64::new(u, eta));
    let span = SPAN * sigma;
    let (u_lo, u_hi) = (shift - a * hi - span, shift - a * lo + span);
    let mut cuts = vec![u_lo, u_hi];
    for p in [-qr.norm().ln(), shift - a * lo] {
        if p > u_lo && p < u_hi {
            cuts.push(p);
        }
    }
    cuts.sort_by(f64::total_cmp);
    let mut integral = ZERO;
    for w in cuts.windows(2) {
        integral += adaptive_gk(g, w[0], w[1], 1e-300, 1e-12)?;
    }
    Some(integral)
}

/// Conditioning of the interference seen by candidate `m` when its power
/// equals `t`.
#[derive(Debug, Clone)]
pub struct InterferenceLaw<'a> {
    pub m: usize,
    pub t: f64,
    pub distances: &'a CandidateSet,
    pub tier: &'a Tier,
    pub kappa: f64,
    pub quad: &'a QuadControls,
}

impl InterferenceLaw<'_> {
    /// `L_{I_m}(s) = L_near(s) L_far(s)`.
    pub fn lt(&self, s: Complex64) -> Result<Complex64> {
        let near = lt_near_interference(s, self.m, self.t, self.distances, self.tier, self.kappa)?;
        let far = lt_far_interference(s, self.distances.boundary(), self.tier, self.quad)?;
        Ok(near * far)
    }

    fn values(&self, inv: &Inverter, x: f64, integrate: bool) -> Result<Vec<Complex64>> {
        inv.arguments(x)
            .map(|s| self.lt(s).map(|v| if integrate { v / s } else { v }))
            .collect()
    }

    /// Density at `x` by inversion.
    pub fn pdf(&self, inv: &Inverter, x: f64) -> Result<f64> {
        let v = self.values(inv, x, false)?;
        check_cancellation(inv, x, &v)?;
        Ok(inv.combine(x, &v))
    }

    /// CDF at `x` by inversion of `L(s)/s`.
    pub fn cdf(&self, inv: &Inverter, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Ok(0.0);
        }
        let v = self.values(inv, x, true)?;
        check_cancellation(inv, x, &v)?;
        let f = inv.combine(x, &v);
        if !f.is_finite() || !(-1e-4..=1.0 + 1e-4).contains(&f) {
            return Err(Error::InversionUnstable(format!(
                "{:?} order {} gave interference CDF {f:e} at x = {x:e}",
                inv.method, inv.order
            )));
        }
        Ok(f.clamp(0.0, 1.0))
    }
}

/// Rejects inversions whose terms cancel by more than twelve digits.
fn check_cancellation(inv: &Inverter, x: f64, values: &[Complex64]) -> Result<()> {
    let c = inv.cancellation(x, values) * x;
    if !c.is_finite() || c > 1e12 {
        return Err(Error::InversionUnstable(format!(
            "{:?} order {}: term magnitudes reach {c:e} at x = {x:e}",
            inv.method, inv.order
        )));
    }
    Ok(())
}

/// Conditional interference law; its `pdf`/`cdf` methods invert the
/// transform on demand.
pub fn interference_pdf<'a>(
    m: usize,
    t: f64,
    distances: &'a CandidateSet,
    tier: &'a Tier,
    kappa: f64,
    quad: &'a QuadControls,
) -> Result<InterferenceLaw<'a>> {
    check_index(m, distances.n())?;
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "serving power must be > 0 (got {t})"
        )));
    }
    Ok(InterferenceLaw {
        m,
        t,
        distances,
        tier,
        kappa,
        quad,
    })
}

/// `P(I_m ≤ t/γ | P_m = t, P_j ≤ t, distances)`.
#[allow(clippy::too_many_arguments)]
pub fn conditional_coverage(
    m: usize,
    t: f64,
    distances: &CandidateSet,
    gamma: f64,
    tier: &Tier,
    kappa: f64,
    quad: &QuadControls,
    inv: &Inverter,
) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma must be > 0 (got {gamma})"
        )));
    }
    interference_pdf(m, t, distances, tier, kappa, quad)?.cdf(inv, t / gamma)
}

/// Conditional coverage times `∏_{j≠m} P(P_j ≤ t | r_j)`.
#[allow(clippy::too_many_arguments)]
pub fn decondition_peers(
    m: usize,
    t: f64,
    distances: &CandidateSet,
    gamma: f64,
    tier: &Tier,
    kappa: f64,
    quad: &QuadControls,
    inv: &Inverter,
) -> Result<f64> {
    check_index(m, distances.n())?;
    let mut peers = 1.0;
    for (j, &r) in distances.distances.iter().enumerate() {
        if j + 1 != m {
            peers *= power_cdf_given_r(t, r, tier, kappa)?;
        }
    }
    if peers == 0.0 {
        return Ok(0.0);
    }
    Ok(peers * conditional_coverage(m, t, distances, gamma, tier, kappa, quad, inv)?)
}

/// Log-power nodes and weights for integrating against the density of the
/// serving power `P_m`.
pub fn serving_power_nodes(
    tier: &Tier,
    r: f64,
    kappa: f64,
    quad: &QuadControls,
) -> Vec<(f64, f64)> {
    let rule = gauss_legendre(quad.power_panel_nodes);
    let mut out = Vec::new();
    for c in components(tier, r, kappa).iter().filter(|c| c.weight > 0.0) {
        if c.sigma == 0.0 {
            out.push((c.mu, c.weight));
            continue;
        }
        let span = quad.power_sigma_span * c.sigma;
        let edges = uniform_edges(c.mu - span, c.mu + span, quad.power_panels);
        for (y, w) in composite(&edges, &rule) {
            out.push((
                y,
                w * c.weight * crate::special::gaussian_pdf(y, c.mu, c.sigma),
            ));
        }
    }
    out
}

/// `P(BS m serves ∧ SIR_m ≥ γ | distances)`, integrating over `P_m = t`.
#[allow(clippy::too_many_arguments)]
pub fn decondition_power(
    m: usize,
    distances: &CandidateSet,
    gamma: f64,
    tier: &Tier,
    kappa: f64,
    quad: &QuadControls,
    inv: &Inverter,
) -> Result<f64> {
    check_index(m, distances.n())?;
    let r = distances.distances[m - 1];
    let mut acc = 0.0;
    for (y, w) in serving_power_nodes(tier, r, kappa, quad) {
        acc += w * decondition_peers(m, y.exp(), distances, gamma, tier, kappa, quad, inv)?;
    }
    if !acc.is_finite() {
        return Err(Error::QuadratureNotConverged(format!(
            "serving-power integral for m = {m} is not finite"
        )));
    }
    Ok(acc)
}
