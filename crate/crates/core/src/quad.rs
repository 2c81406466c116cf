//! Quadrature rules, panel builders, and uniform-grid interpolation tables.

use num_complex::Complex64;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

/// A fixed quadrature rule: nodes and weights.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Gauss–Legendre rule on `[-1, 1]`, nodes by Newton iteration on the
/// three-term recurrence.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j - 1) as f64 * z * p2 - (j - 1) as f64 * p3) / j as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * pp * pp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    Rule { nodes, weights }
}

/// Gauss–Hermite rule for the weight `exp(-x^2)` on the real line.
///
/// Nodes start from the Golub–Welsch eigenvalues and are polished by Newton
/// steps on the normalized Hermite functions `h_k(x) e^{-x²/2}`, which stay
/// bounded for any `n`.
pub fn gauss_hermite(n: usize) -> Rule {
    assert!(n >= 1);
    let off: Vec<f64> = (1..n).map(|k| (0.5 * k as f64).sqrt()).collect();
    let jacobi = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j {
            off[i]
        } else if j + 1 == i {
            off[j]
        } else {
            0.0
        }
    });
    let mut nodes: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    nodes.sort_by(f64::total_cmp);
    let nf = n as f64;
    let weights = nodes
        .iter_mut()
        .map(|z| {
            for _ in 0..4 {
                let (p1, p2) = hermite_functions(*z, n);
                let step = p1 / ((2.0 * nf).sqrt() * p2 - *z * p1);
                *z -= step;
                if step.abs() < 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            let (_, p2) = hermite_functions(*z, n);
            // p2 carries e^{-z²/2}; the weight 2/h_n'(z)² needs it removed.
            let pp = (2.0 * nf).sqrt() * p2;
            2.0 * (-*z * *z).exp() / (pp * pp)
        })
        .collect();
    Rule { nodes, weights }
}

/// Memoized [`gauss_hermite`]; building large rules costs an eigensolve.
pub fn gauss_hermite_cached(n: usize) -> Arc<Rule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Rule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().unwrap().get(&n) {
        return Arc::clone(r);
    }
    let rule = Arc::new(gauss_hermite(n));
    cache.lock().unwrap().insert(n, Arc::clone(&rule));
    rule
}

/// `(ĥ_n(z), ĥ_{n-1}(z))` with `ĥ_k = h_k e^{-z²/2}` orthonormal.
fn hermite_functions(z: f64, n: usize) -> (f64, f64) {
    let (mut p1, mut p2) = (PI.powf(-0.25) * (-0.5 * z * z).exp(), 0.0);
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
    }
    (p1, p2)
}

/// Composite rule over consecutive panels `[edges[i], edges[i+1]]`.
pub fn composite(edges: &[f64], rule: &Rule) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(edges.len().saturating_sub(1) * rule.len());
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (x, wt) in rule.nodes.iter().zip(&rule.weights) {
            out.push((mid + half * x, half * wt));
        }
    }
    out
}

/// Panel edges on `[a, b]` whose widths never exceed `max_width(x)` evaluated
/// at the panel's upper end. Built from `b` downward so that a rate that
/// grows with `x` is resolved near the top.
pub fn graded_edges(a: f64, b: f64, mut max_width: impl FnMut(f64) -> f64) -> Vec<f64> {
    let mut edges = vec![b];
    let mut x = b;
    while x > a {
        let w = max_width(x).max(1e-6 * (b - a).max(1e-300));
        x = (x - w).max(a);
        edges.push(x);
        if edges.len() > 1_000_000 {
            break;
        }
    }
    edges.reverse();
    edges
}

/// Uniform panel edges on `[a, b]`.
pub fn uniform_edges(a: f64, b: f64, panels: usize) -> Vec<f64> {
    (0..=panels)
        .map(|i| a + (b - a) * i as f64 / panels as f64)
        .collect()
}

const GK15_XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK15_WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GK15_WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Kronrod estimate, its error, and the Kronrod estimate of `∫|f|`.
fn gk15<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * GK15_WGK[7];
    let mut gauss = fc * GK15_WG[3];
    let mut l1 = fc.norm() * GK15_WGK[7];
    for j in 0..7 {
        let dx = h * GK15_XGK[j];
        let (fl, fr) = (f(c - dx), f(c + dx));
        let s = fl + fr;
        kron += s * GK15_WGK[j];
        l1 += (fl.norm() + fr.norm()) * GK15_WGK[j];
        if j % 2 == 1 {
            gauss += s * GK15_WG[j / 2];
        }
    }
    (kron * h, ((kron - gauss) * h).norm(), l1 * h.abs())
}

/// Adaptive Gauss–Kronrod (7/15) integration of a complex-valued function on
/// a finite interval. The relative tolerance applies to `∫|f|`, so
/// cancelling integrands still terminate. Returns `None` if the subdivision
/// budget runs out.
pub fn adaptive_gk<F: FnMut(f64) -> Complex64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Option<Complex64> {
    let first = gk15(&mut f, a, b);
    let mut scale = first.2;
    let mut stack = vec![(a, b, first)];
    let mut total = Complex64::new(0.0, 0.0);
    let mut evaluations = 0usize;
    while let Some((lo, hi, (val, err, l1))) = stack.pop() {
        let width_share = (hi - lo) / (b - a);
        let tol = (abs_tol.max(rel_tol * scale)) * width_share.max(1e-12);
        // Panel errors within a tenth of the relative tolerance of their own
        // magnitude sum to within the global target; this also stops steep
        // integrands whose rounding exceeds the width-share allowance.
        let floor = (0.1 * rel_tol).max(50.0 * f64::EPSILON) * l1;
        if err <= tol.max(floor) || (hi - lo) < 1e-13 * (b - a).abs() {
            total += val;
            continue;
        }
        evaluations += 1;
        if evaluations > 200_000 {
            return None;
        }
        let mid = 0.5 * (lo + hi);
        let left = gk15(&mut f, lo, mid);
        let right = gk15(&mut f, mid, hi);
        // Refine the magnitude estimate as the panels resolve the integrand.
        scale = scale.max(scale + left.2 + right.2 - l1);
        stack.push((lo, mid, left));
        stack.push((mid, hi, right));
    }
    Some(total)
}

/// Real-valued convenience wrapper around [`adaptive_gk`].
pub fn adaptive_gk_real<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Option<f64> {
    adaptive_gk(|x| Complex64::new(f(x), 0.0), a, b, abs_tol, rel_tol).map(|z| z.re)
}

/// A complex table sampled on a uniform grid, `width` values per grid point,
/// interpolated with 4-point Lagrange cubics.
#[derive(Debug, Clone)]
pub struct GridTable {
    pub x0: f64,
    pub step: f64,
    pub points: usize,
    pub width: usize,
    pub values: Vec<Complex64>,
}

/// Interpolation stencil: index of the first of four points and weights.
#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    pub first: usize,
    pub weights: [f64; 4],
}

impl GridTable {
    pub fn new(x0: f64, step: f64, points: usize, width: usize) -> Self {
        assert!(points >= 4);
        GridTable {
            x0,
            step,
            points,
            width,
            values: vec![Complex64::new(0.0, 0.0); points * width],
        }
    }

    pub fn x_at(&self, i: usize) -> f64 {
        self.x0 + self.step * i as f64
    }

    pub fn x_max(&self) -> f64 {
        self.x_at(self.points - 1)
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.values[i * self.width..(i + 1) * self.width]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [Complex64] {
        &mut self.values[i * self.width..(i + 1) * self.width]
    }

    /// Stencil for `x`, or `None` when `x` lies outside the grid.
    pub fn stencil(&self, x: f64) -> Option<Stencil> {
        let p = (x - self.x0) / self.step;
        if !(p >= 0.0 && p <= (self.points - 1) as f64) {
            return None;
        }
        let i = (p.floor() as usize).clamp(1, self.points - 3);
        let f = p - i as f64;
        let weights = [
            -f * (f - 1.0) * (f - 2.0) / 6.0,
            (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0,
            -(f + 1.0) * f * (f - 2.0) / 2.0,
            (f + 1.0) * f * (f - 1.0) / 6.0,
        ];
        Some(Stencil {
            first: i - 1,
            weights,
        })
    }

    /// `out[k] += scale * interpolated column k`.
    #[inline]
    pub fn accumulate(&self, st: &Stencil, scale: f64, out: &mut [Complex64]) {
        let w = self.width;
        let base = st.first * w;
        let v = &self.values[base..base + 4 * w];
        let (a, b, c, d) = (
            st.weights[0] * scale,
            st.weights[1] * scale,
            st.weights[2] * scale,
            st.weights[3] * scale,
        );
        for k in 0..w {
            out[k] += v[k] * a + v[w + k] * b + v[2 * w + k] * c + v[3 * w + k] * d;
        }
    }

    pub fn interpolate(&self, x: f64, column: usize) -> Option<Complex64> {
        let st = self.stencil(x)?;
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, wt) in st.weights.iter().enumerate() {
            acc += self.values[(st.first + j) * self.width + column] * *wt;
        }
        Some(acc)
    }
}

/// Running integral `C_i = ∫_{x_0}^{x_i} g` of grid samples, fourth order.
pub fn cumulative_integral(g: &[Complex64], step: f64) -> Vec<Complex64> {
    let n = g.len();
    assert!(n >= 4);
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    let h = step / 24.0;
    for i in 0..n - 1 {
        let cell = if i == 0 {
            (g[0] * 9.0 + g[1] * 19.0 - g[2] * 5.0 + g[3]) * h
        } else if i == n - 2 {
            (g[n - 4] - g[n - 3] * 5.0 + g[n - 2] * 19.0 + g[n - 1] * 9.0) * h
        } else {
            (-g[i - 1] + g[i] * 13.0 + g[i + 1] * 13.0 - g[i + 2]) * h
        };
        out[i + 1] = out[i] + cell;
    }
    out
}
