//! Table-driven evaluation of the per-association coverage terms.
//!
//! With Euler inversion the CDF of the interference at `x` needs the
//! transform only at `β_k / x` for a fixed set of nodes `β_k`. Every factor
//! of that transform depends on the serving power `t`, the threshold `γ`
//! and a candidate's log-mean `μ` only through a single real log-argument,
//! so each lognormal factor is tabulated once per shadowing spread and the
//! inner loop reduces to short stencil sums.

use num_complex::Complex64;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use super::direct::serving_power_nodes;
use super::lognormal::moment;
use crate::error::{Error, Result};
use crate::laplace::Inverter;
use crate::model::{InversionMethod, QuadControls, Tier};
use crate::propagation::{components, mixture_cdf_log, Component};
use crate::quad::{composite, cumulative_integral, gauss_legendre, graded_edges, GridTable};
use crate::special::{norm_cdf, one_minus_exp_neg};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
/// Gaussian windows are cut at this many standard deviations.
const WINDOW: f64 = 9.0;
/// `|exp(-z)| ≤ e^{-45}` is treated as zero.
const SATURATION: f64 = 45.0;
/// Serving-power nodes whose weight is below this are dropped.
const NODE_FLOOR: f64 = 1e-15;
/// Values of the joint CDF below this end the threshold sweep for a node.
const NEGLIGIBLE: f64 = 1e-10;
/// Largest tolerated excursion of an inverted CDF outside `[0, 1]`.
pub const EXCURSION_LIMIT: f64 = 1e-3;

fn grid_step(sigma: f64) -> f64 {
    (sigma / 80.0).min(0.01)
}

fn min_real(betas: &[Complex64]) -> f64 {
    betas.iter().map(|b| b.re).fold(f64::INFINITY, f64::min)
}

fn max_norm(betas: &[Complex64]) -> f64 {
    betas.iter().map(|b| b.norm()).fold(0.0, f64::max)
}

/// `Σ_i W_i N(w_i - x; σ) g_i`, vectorized over the columns of `g`.
struct Smoother {
    sigma: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    values: Vec<Complex64>,
    width: usize,
}

impl Smoother {
    fn new(edges: &[f64], sigma: f64, width: usize, g: impl Fn(f64, usize) -> Complex64) -> Self {
        let rule = gauss_legendre(8);
        let pts = composite(edges, &rule);
        let mut values = Vec::with_capacity(pts.len() * width);
        for &(w, _) in &pts {
            values.extend((0..width).map(|k| g(w, k)));
        }
        Smoother {
            sigma,
            nodes: pts.iter().map(|p| p.0).collect(),
            weights: pts.iter().map(|p| p.1).collect(),
            values,
            width,
        }
    }

    fn accumulate(&self, x: f64, out: &mut [Complex64]) {
        let s = self.sigma;
        let lo = self.nodes.partition_point(|&w| w < x - WINDOW * s);
        let hi = self.nodes.partition_point(|&w| w <= x + WINDOW * s);
        let norm = 1.0 / (s * (2.0 * PI).sqrt());
        for i in lo..hi {
            let z = (self.nodes[i] - x) / s;
            let c = self.weights[i] * norm * (-0.5 * z * z).exp();
            let row = &self.values[i * self.width..(i + 1) * self.width];
            for (o, v) in out.iter_mut().zip(row) {
                *o += v * c;
            }
        }
    }
}

/// `Ω_k(L) = 1 - ψ_σ(β_k e^L)` for every inversion node.
#[derive(Debug)]
pub struct OmegaTable {
    pub sigma: f64,
    betas: Vec<Complex64>,
    grid: Option<GridTable>,
    m1: f64,
    m2: f64,
}

impl OmegaTable {
    pub fn new(sigma: f64, betas: &[Complex64]) -> Self {
        let (m1, m2) = (moment(1.0, sigma), moment(2.0, sigma));
        if sigma == 0.0 {
            return OmegaTable {
                sigma,
                betas: betas.to_vec(),
                grid: None,
                m1,
                m2,
            };
        }
        let k = betas.len();
        let bmax = max_norm(betas);
        // Above w_cut every exp(-β_k e^w) is below e^{-45}.
        let w_cut = (SATURATION / min_real(betas)).ln();
        let lo = (1e-7 / bmax).ln() - 3.0 * sigma * sigma;
        let hi = w_cut + WINDOW * sigma;
        let h = grid_step(sigma);
        let points = ((hi - lo) / h).ceil() as usize + 1;
        // Panels resolve both the Gaussian and the oscillation of e^{-β e^w}.
        let edges = graded_edges(lo - WINDOW * sigma, w_cut, |w| {
            (0.5 * sigma).min(2.0 / (bmax * w.exp()))
        });
        let sm = Smoother::new(&edges, sigma, k, |w, j| {
            one_minus_exp_neg(betas[j] * w.exp())
        });
        let mut grid = GridTable::new(lo, h, points, k);
        for i in 0..points {
            let l = grid.x_at(i);
            let row = grid.row_mut(i);
            sm.accumulate(l, row);
            let tail = norm_cdf((l - w_cut) / sigma);
            for v in row.iter_mut() {
                *v += tail;
            }
        }
        OmegaTable {
            sigma,
            betas: betas.to_vec(),
            grid: Some(grid),
            m1,
            m2,
        }
    }

    /// Two-term small-argument expansion.
    fn series(&self, l: f64, k: usize) -> Complex64 {
        let q = self.betas[k] * l.exp();
        q * self.m1 - q * q * (0.5 * self.m2)
    }

    /// `out[k] += scale · Ω_k(l)`.
    pub fn add(&self, l: f64, scale: f64, out: &mut [Complex64]) {
        match &self.grid {
            None => {
                let e = l.min(700.0).exp();
                for (o, b) in out.iter_mut().zip(&self.betas) {
                    *o += one_minus_exp_neg(b * e) * scale;
                }
            }
            Some(g) => {
                if l < g.x0 {
                    for (k, o) in out.iter_mut().enumerate() {
                        *o += self.series(l, k) * scale;
                    }
                } else if let Some(st) = g.stencil(l) {
                    g.accumulate(&st, scale, out);
                } else {
                    for o in out.iter_mut() {
                        *o += scale;
                    }
                }
            }
        }
    }

    pub fn value(&self, l: f64, k: usize) -> Complex64 {
        let mut out = vec![ZERO; self.betas.len()];
        self.add(l, 1.0, &mut out);
        out[k]
    }
}

/// `γ(a, z)` for `0 < a < 1` and `Re z > 0`.
fn lower_incomplete_gamma(a: f64, z: Complex64) -> Complex64 {
    let full = Complex64::new(libm::tgamma(a), 0.0);
    if z.norm() < 3.0 {
        let mut term = ONE / a;
        let mut sum = term;
        for n in 1..200 {
            term *= z / (a + n as f64);
            sum += term;
            if term.norm() < 1e-17 * sum.norm() {
                break;
            }
        }
        return sum * (a * z.ln() - z).exp();
    }
    // Modified Lentz on the continued fraction of Γ(a, z).
    let tiny = 1e-300;
    let mut b = z + 1.0 - a;
    let mut c = Complex64::new(1.0 / tiny, 0.0);
    let mut d = ONE / b;
    let mut h = d;
    for i in 1..1000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = d * an + b;
        if d.norm() < tiny {
            d = Complex64::new(tiny, 0.0);
        }
        c = b + an / c;
        if c.norm() < tiny {
            c = Complex64::new(tiny, 0.0);
        }
        d = ONE / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    full - h * (a * z.ln() - z).exp()
}

/// `α · G(x) = z^δ ∫_0^z (1 - e^{-w}) w^{-δ-1} dw` at `z = β x`, unshadowed.
fn far_kernel_unshadowed(z: Complex64, delta: f64) -> Complex64 {
    if z.norm() < 3.0 {
        // Σ (-1)^{n+1} z^n / (n! (n - δ))
        let mut pow = ONE;
        let mut sum = ZERO;
        for n in 1..80 {
            pow *= -z / n as f64;
            let term = -pow / (n as f64 - delta);
            sum += term;
            if term.norm() < 1e-17 * sum.norm() {
                break;
            }
        }
        return sum;
    }
    ((z.ln() * delta).exp() * lower_incomplete_gamma(1.0 - delta, z) - one_minus_exp_neg(z)) / delta
}

/// Far-field exponent `G_k(x) = ∫_{r_n}^∞ Ω_k(ln(x r_n^α v^{-α})) v dv / r_n²`.
#[derive(Debug)]
pub struct FarField {
    alpha: f64,
    delta: f64,
    shadow: Arc<OmegaTable>,
    cum: Option<GridTable>,
    c_top: Vec<Complex64>,
    l_top: f64,
}

impl FarField {
    pub fn new(shadow: Arc<OmegaTable>, alpha: f64) -> Result<Self> {
        if !(alpha > 2.0) {
            return Err(Error::TailNotConverged {
                bound: f64::INFINITY,
                tolerance: 0.0,
                radius: f64::INFINITY,
            });
        }
        let delta = 2.0 / alpha;
        let Some(grid) = &shadow.grid else {
            return Ok(FarField {
                alpha,
                delta,
                shadow,
                cum: None,
                c_top: Vec::new(),
                l_top: 0.0,
            });
        };
        let k = grid.width;
        let mut cum = GridTable::new(grid.x0, grid.step, grid.points, k);
        let (m1, m2) = (shadow.m1, shadow.m2);
        let lo = grid.x0;
        for col in 0..k {
            let g: Vec<Complex64> = (0..grid.points)
                .map(|i| grid.row(i)[col] * (-delta * grid.x_at(i)).exp())
                .collect();
            let b = shadow.betas[col];
            let start = b * (m1 * (lo * (1.0 - delta)).exp() / (1.0 - delta))
                - b * b * (m2 * (lo * (2.0 - delta)).exp() / (2.0 * (2.0 - delta)));
            for (i, c) in cumulative_integral(&g, grid.step).into_iter().enumerate() {
                cum.row_mut(i)[col] = start + c;
            }
        }
        let c_top = cum.row(cum.points - 1).to_vec();
        let l_top = cum.x_max();
        Ok(FarField {
            alpha,
            delta,
            shadow,
            cum: Some(cum),
            c_top,
            l_top,
        })
    }

    /// `out[k] = scale · G_k(e^l)`.
    pub fn set(&self, l: f64, scale: f64, out: &mut [Complex64]) {
        let (alpha, delta) = (self.alpha, self.delta);
        let betas = &self.shadow.betas;
        let Some(cum) = &self.cum else {
            let x = l.min(700.0).exp();
            for (o, b) in out.iter_mut().zip(betas) {
                *o = far_kernel_unshadowed(b * x, delta) * (scale / alpha);
            }
            return;
        };
        let x = l.exp();
        if l < cum.x0 {
            let (m1, m2) = (self.shadow.m1, self.shadow.m2);
            for (o, b) in out.iter_mut().zip(betas) {
                *o = (b * (m1 * x / (alpha - 2.0))
                    - b * b * (m2 * x * x / (2.0 * (2.0 * alpha - 2.0))))
                    * scale;
            }
            return;
        }
        let f = (delta * l).exp() / alpha * scale;
        out.iter_mut().for_each(|o| *o = ZERO);
        if let Some(st) = cum.stencil(l) {
            cum.accumulate(&st, f, out);
        } else {
            let extra = ((-delta * self.l_top).exp() - (-delta * l).exp()) / delta;
            for (o, c) in out.iter_mut().zip(&self.c_top) {
                *o = (c + extra) * f;
            }
        }
    }
}

/// `J_k(b) = ∫_{-∞}^0 N(u + b; σ) exp(-β_k γ e^u) du`: the partial transform
/// of one shadowing component truncated at the serving power.
#[derive(Debug)]
pub struct TruncatedTable {
    sigma: f64,
    gamma: f64,
    shadow: Arc<OmegaTable>,
    grid: Option<GridTable>,
}

impl TruncatedTable {
    pub fn new(shadow: Arc<OmegaTable>, gamma: f64) -> Self {
        let sigma = shadow.sigma;
        if sigma == 0.0 {
            return TruncatedTable {
                sigma,
                gamma,
                shadow,
                grid: None,
            };
        }
        let betas = &shadow.betas;
        let k = betas.len();
        let bmax = max_norm(betas) * gamma;
        let edges = graded_edges(-2.0 * WINDOW * sigma, 0.0, |u| {
            (0.5 * sigma).min(2.0 / (bmax * u.exp()))
        });
        let sm = Smoother::new(&edges, sigma, k, |u, j| {
            (-(betas[j] * (gamma * u.exp()))).exp()
        });
        let h = grid_step(sigma);
        let points = ((2.0 * WINDOW * sigma) / h).ceil() as usize + 1;
        let h = 2.0 * WINDOW * sigma / (points - 1) as f64;
        let mut grid = GridTable::new(-WINDOW * sigma, h, points, k);
        for i in 0..points {
            let b = grid.x_at(i);
            sm.accumulate(-b, grid.row_mut(i));
        }
        TruncatedTable {
            sigma,
            gamma,
            shadow,
            grid: Some(grid),
        }
    }

    /// `out[k] += scale · J_k(b)`.
    pub fn add(&self, b: f64, scale: f64, out: &mut [Complex64]) {
        match &self.grid {
            None => {
                if b >= 0.0 {
                    let q = self.gamma * (-b).exp();
                    for (o, beta) in out.iter_mut().zip(&self.shadow.betas) {
                        *o += (-(beta * q)).exp() * scale;
                    }
                }
            }
            Some(g) => {
                if b < g.x0 {
                    return;
                }
                if let Some(st) = g.stencil(b) {
                    g.accumulate(&st, scale, out);
                } else {
                    // Truncation no longer bites: the full transform.
                    for o in out.iter_mut() {
                        *o += scale;
                    }
                    self.shadow.add(self.gamma.ln() - b, -scale, out);
                }
            }
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

type TableKey = (u64, usize);

fn omega_cache() -> &'static Mutex<HashMap<TableKey, Arc<OmegaTable>>> {
    static CACHE: OnceLock<Mutex<HashMap<TableKey, Arc<OmegaTable>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Shared [`OmegaTable`] for a spread and Euler order.
pub fn omega_table(sigma: f64, inverter: &Inverter) -> Arc<OmegaTable> {
    let key = (sigma.to_bits(), inverter.order);
    if let Some(t) = omega_cache().lock().unwrap().get(&key) {
        return t.clone();
    }
    let t = Arc::new(OmegaTable::new(sigma, &inverter.nodes));
    omega_cache()
        .lock()
        .unwrap()
        .entry(key)
        .or_insert(t)
        .clone()
}

/// One SIR threshold with its precomputed truncated tables.
#[derive(Debug)]
pub struct Threshold {
    pub gamma: f64,
    ln_gamma: f64,
    /// `[NLOS, LOS]` tables, present for `γ < 1`.
    truncated: Option<[TruncatedTable; 2]>,
}

/// Worst inversion behavior seen while evaluating terms.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EngineDiagnostics {
    /// Largest distance of a raw inverted value outside `[0, 1]`.
    pub max_excursion: f64,
    pub evaluations: u64,
}

impl EngineDiagnostics {
    pub fn merge(&mut self, other: &EngineDiagnostics) {
        self.max_excursion = self.max_excursion.max(other.max_excursion);
        self.evaluations += other.evaluations;
    }
}

struct Scratch {
    prod: Vec<Complex64>,
    near: Vec<Complex64>,
}

/// Coverage terms of one tier, vectorized over thresholds.
#[derive(Debug)]
pub struct TierEngine {
    tier: Tier,
    kappa: f64,
    n: usize,
    quad: QuadControls,
    inverter: Inverter,
    /// `ω_k / β_k`.
    coef: Vec<Complex64>,
    /// `[NLOS, LOS]`.
    shadow: [Arc<OmegaTable>; 2],
    far: FarField,
}

impl TierEngine {
    pub fn new(tier: &Tier, kappa: f64, n: usize, quad: &QuadControls) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("n_candidates must be >= 1".into()));
        }
        let inverter = Inverter::euler(quad.euler_terms);
        let coef = inverter
            .weights
            .iter()
            .zip(&inverter.nodes)
            .map(|(w, b)| w / b)
            .collect();
        let shadow = [
            omega_table(tier.linear.sigma_s_nlos, &inverter),
            omega_table(tier.linear.sigma_s_los, &inverter),
        ];
        let far = FarField::new(shadow[0].clone(), tier.params.exponent_nlos)?;
        Ok(TierEngine {
            tier: *tier,
            kappa,
            n,
            quad: quad.clone(),
            inverter,
            coef,
            shadow,
            far,
        })
    }

    pub fn inverter(&self) -> &Inverter {
        &self.inverter
    }

    pub fn method(&self) -> InversionMethod {
        self.inverter.method
    }

    /// Prepares linear thresholds, which must be ascending.
    pub fn thresholds(&self, gammas: &[f64]) -> Vec<Threshold> {
        gammas
            .iter()
            .map(|&gamma| Threshold {
                gamma,
                ln_gamma: gamma.ln(),
                truncated: (gamma < 1.0).then(|| {
                    [
                        TruncatedTable::new(self.shadow[0].clone(), gamma),
                        TruncatedTable::new(self.shadow[1].clone(), gamma),
                    ]
                }),
            })
            .collect()
    }

    fn check_distances(&self, d: &[f64]) -> Result<()> {
        if d.len() != self.n {
            return Err(Error::InvalidParameter(format!(
                "expected {} distances, got {}",
                self.n,
                d.len()
            )));
        }
        if d.iter().any(|&r| !(r > 0.0 && r.is_finite())) || d.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidParameter(
                "distances must be positive, finite and ascending".into(),
            ));
        }
        Ok(())
    }

    /// Raw inverted `P(I_m ≤ t/γ, P_j ≤ t ∀ j ≠ m | distances)` at `t = e^y`.
    #[allow(clippy::too_many_arguments)]
    fn raw_joint(
        &self,
        m: usize,
        y: f64,
        comps: &[[Component; 2]],
        far_base: f64,
        far_scale: f64,
        th: &Threshold,
        sc: &mut Scratch,
    ) -> f64 {
        self.far
            .set(th.ln_gamma - y + far_base, far_scale, &mut sc.prod);
        for p in sc.prod.iter_mut() {
            *p = (-*p).exp();
        }
        for (j, cj) in comps.iter().enumerate() {
            if j == m {
                continue;
            }
            sc.near.iter_mut().for_each(|v| *v = ZERO);
            for (c, comp) in cj.iter().enumerate() {
                if comp.weight == 0.0 {
                    continue;
                }
                match &th.truncated {
                    Some(tabs) => tabs[c].add(y - comp.mu, comp.weight, &mut sc.near),
                    None => {
                        // Untruncated: for γ ≥ 1 the event already forces P_j ≤ t.
                        for v in sc.near.iter_mut() {
                            *v += comp.weight;
                        }
                        self.shadow[c].add(th.ln_gamma + comp.mu - y, -comp.weight, &mut sc.near);
                    }
                }
            }
            for (p, v) in sc.prod.iter_mut().zip(&sc.near) {
                *p *= v;
            }
        }
        self.coef
            .iter()
            .zip(&sc.prod)
            .map(|(c, p)| (c * p).re)
            .sum()
    }

    fn far_params(&self, d: &[f64]) -> (f64, f64) {
        let rn = d[self.n - 1];
        let base = self.tier.linear.b_nlos.ln() - self.tier.params.exponent_nlos * rn.ln();
        let scale = 2.0 * PI * self.tier.density() * rn * rn;
        (base, scale)
    }

    fn scratch(&self) -> Scratch {
        let k = self.inverter.len();
        Scratch {
            prod: vec![ZERO; k],
            near: vec![ZERO; k],
        }
    }

    /// `P(I_m ≤ t/γ, P_j ≤ t ∀ j ≠ m | distances)` with `m` 1-based.
    pub fn joint_cdf(&self, m: usize, t: f64, distances: &[f64], gamma: f64) -> Result<f64> {
        self.check_distances(distances)?;
        if m == 0 || m > self.n {
            return Err(Error::InvalidParameter(format!(
                "m = {m} outside 1..={}",
                self.n
            )));
        }
        let comps: Vec<_> = distances
            .iter()
            .map(|&r| components(&self.tier, r, self.kappa))
            .collect();
        let (base, scale) = self.far_params(distances);
        let th = self.thresholds(&[gamma]);
        let mut sc = self.scratch();
        let raw = self.raw_joint(m - 1, t.ln(), &comps, base, scale, &th[0], &mut sc);
        Ok(raw.clamp(0.0, 1.0))
    }

    /// Adds `P(associate with m, SIR_m ≥ γ | distances)` into
    /// `out[g * n + (m - 1)]` for every threshold `g`.
    pub fn accumulate_terms(
        &self,
        distances: &[f64],
        thresholds: &[Threshold],
        out: &mut [f64],
        diag: &mut EngineDiagnostics,
    ) -> Result<()> {
        self.check_distances(distances)?;
        let n = self.n;
        debug_assert_eq!(out.len(), thresholds.len() * n);
        let comps: Vec<_> = distances
            .iter()
            .map(|&r| components(&self.tier, r, self.kappa))
            .collect();
        let (base, scale) = self.far_params(distances);
        let mut sc = self.scratch();
        for m in 0..n {
            for (y, w) in serving_power_nodes(&self.tier, distances[m], self.kappa, &self.quad) {
                if w < NODE_FLOOR {
                    continue;
                }
                let mut peers = 1.0;
                for (j, cj) in comps.iter().enumerate() {
                    if j != m {
                        peers *= mixture_cdf_log(cj, y);
                    }
                }
                if peers < 1e-14 {
                    continue;
                }
                for (g, th) in thresholds.iter().enumerate() {
                    let raw = self.raw_joint(m, y, &comps, base, scale, th, &mut sc);
                    diag.evaluations += 1;
                    if !raw.is_finite() {
                        return Err(Error::InversionUnstable(format!(
                            "non-finite inverted CDF at m = {}, ln t = {y:.3}, γ = {:e}",
                            m + 1,
                            th.gamma
                        )));
                    }
                    let excursion = (-raw).max(raw - 1.0).max(0.0);
                    diag.max_excursion = diag.max_excursion.max(excursion);
                    if excursion > EXCURSION_LIMIT {
                        return Err(Error::InversionUnstable(format!(
                            "inverted CDF {raw:e} at m = {}, ln t = {y:.3}, γ = {:e}",
                            m + 1,
                            th.gamma
                        )));
                    }
                    let v = raw.clamp(0.0, 1.0);
                    out[g * n + m] += w * v;
                    // The joint CDF is nonincreasing in γ.
                    if v < NEGLIGIBLE {
                        break;
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::direct::{self, lt_far_interference};
    use crate::analytic::lognormal::lognormal_lt_complement;
    use crate::geometry::CandidateSet;
    use crate::model::{NetworkConfig, TierParams};

    fn tier_params(sigma_n: f64, sigma_l: f64) -> TierParams {
        TierParams {
            density: 2e-6,
            tx_power_dbm: 47.0,
            intercept_nlos_db: 2.7,
            intercept_los_db: 30.8,
            exponent_nlos: 4.28,
            exponent_los: 2.42,
            shadow_sigma_nlos_db: sigma_n,
            shadow_sigma_los_db: sigma_l,
        }
    }

    #[test]
    fn omega_table_matches_direct_transform() {
        let inv = Inverter::euler(11);
        for &sigma in &[0.92, 1.84] {
            let tab = omega_table(sigma, &inv);
            let mut worst: f64 = 0.0;
            for i in 0..200 {
                let l = -25.0 + 0.17 * i as f64;
                for k in [0, 5, 13, 22] {
                    let want = lognormal_lt_complement(inv.nodes[k] * l.exp(), sigma);
                    worst = worst.max((tab.value(l, k) - want).norm());
                }
            }
            assert!(worst < 1e-8, "σ = {sigma}: {worst:e}");
        }
    }

    #[test]
    fn incomplete_gamma_branches_agree() {
        let a = 0.53;
        for z in [
            Complex64::new(2.9, 0.4),
            Complex64::new(3.1, 0.4),
            Complex64::new(2.0, 2.2),
        ] {
            // The series is valid everywhere; compare it with the fraction.
            let mut term = ONE / a;
            let mut sum = term;
            for n in 1..400 {
                term *= z / (a + n as f64);
                sum += term;
            }
            let series = sum * (a * z.ln() - z).exp();
            assert!((lower_incomplete_gamma(a, z) - series).norm() < 1e-12);
        }
    }

    #[test]
    fn far_field_matches_direct_route() {
        let inv = Inverter::euler(11);
        let quad = QuadControls::default();
        for &(sn, sl) in &[(8.0, 4.0), (0.0, 0.0)] {
            let tier = Tier::new(tier_params(sn, sl));
            let tab = omega_table(tier.linear.sigma_s_nlos, &inv);
            let far = FarField::new(tab, tier.params.exponent_nlos).unwrap();
            let rn: f64 = 700.0;
            let mut out = vec![ZERO; inv.len()];
            for &x in &[1e-14f64, 1e-11, 3e-10, 1e-8] {
                let base = tier.linear.b_nlos.ln() - tier.params.exponent_nlos * rn.ln();
                let scale = 2.0 * PI * tier.density() * rn * rn;
                far.set(-x.ln() + base, scale, &mut out);
                for k in [0, 7, 22] {
                    let s = inv.nodes[k] / x;
                    let want = lt_far_interference(s, rn, &tier, &quad).unwrap();
                    let got = (-out[k]).exp();
                    assert!(
                        (got - want).norm() < 1e-8,
                        "σ={sn} x={x:e} k={k}: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn joint_cdf_matches_direct_route() {
        let quad = QuadControls::default();
        let inv = Inverter::euler(quad.euler_terms);
        let tier = Tier::new(tier_params(8.0, 4.0));
        let kappa = 0.008;
        let d = vec![150.0, 420.0, 600.0];
        let set = CandidateSet {
            tier_index: 0,
            distances: d.clone(),
        };
        let engine = TierEngine::new(&tier, kappa, 3, &quad).unwrap();
        for &gamma in &[0.01, 0.3, 1.5, 4.0] {
            for &m in &[1usize, 2, 3] {
                for &lt in &[-23.0, -20.0, -17.5] {
                    let t = f64::exp(lt);
                    let got = engine.joint_cdf(m, t, &d, gamma).unwrap();
                    let want =
                        direct::decondition_peers(m, t, &set, gamma, &tier, kappa, &quad, &inv)
                            .unwrap();
                    assert!(
                        (got - want).abs() < 1e-7,
                        "γ={gamma} m={m} ln t={lt}: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn routes_meet_at_unit_threshold() {
        // Below γ = 1 the peers are truncated at t and their density jumps
        // there; the inverted CDF at t/γ ≈ t then carries a kink error.
        let quad = QuadControls::default();
        let tier = Tier::new(tier_params(8.0, 4.0));
        let d = [150.0, 420.0, 600.0];
        let engine = TierEngine::new(&tier, 0.008, 3, &quad).unwrap();
        for m in 1..=3 {
            for lt in [-20.0f64, -17.5] {
                let above = engine.joint_cdf(m, lt.exp(), &d, 1.0).unwrap();
                let below = engine.joint_cdf(m, lt.exp(), &d, 1.0 - 1e-9).unwrap();
                assert!((above - below).abs() < 5e-4, "m={m}: {above} vs {below}");
            }
        }
    }

    #[test]
    fn degenerate_shadowing_is_supported() {
        let quad = QuadControls {
            power_panels: 1,
            ..QuadControls::default()
        };
        let tier = Tier::new(tier_params(0.0, 0.0));
        let engine = TierEngine::new(&tier, 1.0, 2, &quad).unwrap();
        let th = engine.thresholds(&[0.1, 1e3]);
        let mut out = vec![0.0; 4];
        let mut diag = EngineDiagnostics::default();
        engine
            .accumulate_terms(&[100.0, 300.0], &th, &mut out, &mut diag)
            .unwrap();
        // With certain NLOS and no shadowing only the nearest BS can win.
        assert_eq!(out[1], 0.0);
        assert_eq!(out[3], 0.0);
        assert!(out[0] > 0.99 && out[2] < 0.01, "{out:?}");
    }

    #[test]
    fn terms_sum_to_one_for_vanishing_threshold() {
        let cfg = NetworkConfig::new(vec![tier_params(8.0, 4.0)], 0.008, 3);
        let tier = cfg.tier(0);
        let engine = TierEngine::new(&tier, 0.008, 3, &cfg.quad).unwrap();
        let th = engine.thresholds(&[1e-7]);
        let mut out = vec![0.0; 3];
        let mut diag = EngineDiagnostics::default();
        engine
            .accumulate_terms(&[90.0, 300.0, 310.0], &th, &mut out, &mut diag)
            .unwrap();
        let total: f64 = out.iter().sum();
        assert!((total - 1.0).abs() < 1e-5, "{out:?}");
        assert!(diag.max_excursion < 1e-5);
    }
}
