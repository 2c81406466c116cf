//! Numerical inversion of Laplace transforms.
//!
//! Both algorithms reduce to `f(t) ≈ (1/t) Σ_k Re(ω_k · L(β_k / t))` with
//! precomputed nodes `β_k` and weights `ω_k`.

use num_complex::Complex64;
use std::f64::consts::{LN_10, PI};

use crate::error::{Error, Result};
use crate::model::InversionMethod;

/// Precomputed inversion rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Inverter {
    pub method: InversionMethod,
    pub order: usize,
    pub nodes: Vec<Complex64>,
    pub weights: Vec<Complex64>,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl Inverter {
    pub fn new(method: InversionMethod, order: usize) -> Self {
        match method {
            InversionMethod::Euler => Self::euler(order),
            InversionMethod::Talbot => Self::talbot(order),
        }
    }

    /// Euler summation with `2M + 1` transform evaluations.
    pub fn euler(m: usize) -> Self {
        assert!(m >= 1, "Euler order must be >= 1");
        let mut xi = vec![0.0; 2 * m + 1];
        xi[0] = 0.5;
        for x in xi.iter_mut().take(m + 1).skip(1) {
            *x = 1.0;
        }
        let tail = 2f64.powi(-(m as i32));
        xi[2 * m] = tail;
        for k in 1..m {
            xi[2 * m - k] = xi[2 * m - k + 1] + tail * binomial(m, k);
        }
        let scale = 10f64.powf(m as f64 / 3.0);
        let shift = m as f64 * LN_10 / 3.0;
        let nodes = (0..=2 * m)
            .map(|k| Complex64::new(shift, PI * k as f64))
            .collect();
        let weights = xi
            .iter()
            .enumerate()
            .map(|(k, &x)| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                Complex64::new(scale * sign * x, 0.0)
            })
            .collect();
        Inverter {
            method: InversionMethod::Euler,
            order: m,
            nodes,
            weights,
        }
    }

    /// Fixed Talbot contour with `M` transform evaluations.
    pub fn talbot(m: usize) -> Self {
        assert!(m >= 2, "Talbot order must be >= 2");
        let mf = m as f64;
        let mut nodes = Vec::with_capacity(m);
        let mut weights = Vec::with_capacity(m);
        let b0 = 2.0 * mf / 5.0;
        nodes.push(Complex64::new(b0, 0.0));
        weights.push(Complex64::new(0.4 * 0.5 * b0.exp(), 0.0));
        for k in 1..m {
            let th = k as f64 * PI / mf;
            let cot = th.cos() / th.sin();
            let beta = Complex64::new(2.0 * k as f64 * PI / 5.0 * cot, 2.0 * k as f64 * PI / 5.0);
            let eta = Complex64::new(1.0, th * (1.0 + cot * cot) - cot) * beta.exp();
            nodes.push(beta);
            weights.push(0.4 * eta);
        }
        Inverter {
            method: InversionMethod::Talbot,
            order: m,
            nodes,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Transform arguments used for the value at `t`.
    pub fn arguments(&self, t: f64) -> impl Iterator<Item = Complex64> + '_ {
        self.nodes.iter().map(move |b| b / t)
    }

    /// Combines transform values taken at [`arguments`](Self::arguments).
    pub fn combine(&self, t: f64, values: &[Complex64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        self.weights
            .iter()
            .zip(values)
            .map(|(w, v)| (w * v).re)
            .sum::<f64>()
            / t
    }

    /// Sum of term magnitudes relative to `1/t`; large values mean heavy
    /// cancellation.
    pub fn cancellation(&self, t: f64, values: &[Complex64]) -> f64 {
        self.weights
            .iter()
            .zip(values)
            .map(|(w, v)| (w * v).norm())
            .sum::<f64>()
            / t
    }

    /// `f(t)` from its transform `lt`.
    pub fn invert<F: FnMut(Complex64) -> Complex64>(&self, mut lt: F, t: f64) -> f64 {
        let values: Vec<Complex64> = self.arguments(t).map(&mut lt).collect();
        self.combine(t, &values)
    }

    /// CDF at `x` of the density whose transform is `lt`: inverts `L(s)/s`.
    pub fn cdf<F: FnMut(Complex64) -> Complex64>(&self, mut lt: F, x: f64) -> f64 {
        self.invert(|s| lt(s) / s, x)
    }

    /// [`cdf`](Self::cdf) with a range check on the result.
    pub fn cdf_checked<F: FnMut(Complex64) -> Complex64>(
        &self,
        lt: F,
        x: f64,
        tol: f64,
    ) -> Result<f64> {
        let v = self.cdf(lt, x);
        if !v.is_finite() || v < -tol || v > 1.0 + tol {
            return Err(Error::InversionUnstable(format!(
                "{:?} order {} returned CDF {v:e} at x = {x:e}",
                self.method, self.order
            )));
        }
        Ok(v.clamp(0.0, 1.0))
    }
}

/// Maximum absolute errors on the known transform pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfTestReport {
    pub exponential: f64,
    pub gamma2: f64,
    pub point_mass: f64,
}

impl SelfTestReport {
    pub fn worst(&self) -> f64 {
        self.exponential.max(self.gamma2).max(self.point_mass)
    }
}

/// Recovers `e^{-x}`, `x e^{-x}` and the step CDF of a point mass at 1 on
/// `(0, 10]` and reports the maximum absolute errors.
pub fn self_test_report(inv: &Inverter) -> SelfTestReport {
    let grid: Vec<f64> = (1..=1000).map(|i| i as f64 * 0.01).collect();
    let one = Complex64::new(1.0, 0.0);
    let mut r = SelfTestReport {
        exponential: 0.0,
        gamma2: 0.0,
        point_mass: 0.0,
    };
    for &t in &grid {
        let e = inv.invert(|s| one / (one + s), t);
        r.exponential = r.exponential.max((e - (-t).exp()).abs());
        let g = inv.invert(|s| one / ((one + s) * (one + s)), t);
        r.gamma2 = r.gamma2.max((g - t * (-t).exp()).abs());
    }
    // The CDF of a point mass at 1 is a step. Euler rings after the jump
    // and the Talbot contour overflows on `e^{-s}` before it, so each
    // method is checked on the side its contour resolves.
    for &t in &grid {
        let err = match inv.method {
            InversionMethod::Euler if t <= 0.5 => inv.cdf(|s| (-s).exp(), t).abs(),
            InversionMethod::Talbot if t >= 1.5 => (inv.cdf(|s| (-s).exp(), t) - 1.0).abs(),
            _ => continue,
        };
        r.point_mass = r.point_mass.max(err);
    }
    r
}

/// Gated check run before coverage evaluations.
pub fn self_test(inv: &Inverter, tol: f64) -> Result<SelfTestReport> {
    let r = self_test_report(inv);
    if !(r.worst() <= tol) {
        return Err(Error::InversionUnstable(format!(
            "{:?} order {} self-test: exponential {:.2e}, gamma(2) {:.2e}, point mass {:.2e}",
            inv.method, inv.order, r.exponential, r.gamma2, r.point_mass
        )));
    }
    Ok(r)
}
