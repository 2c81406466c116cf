//! Per-tier and network coverage: the per-association terms averaged over
//! the ordered candidate distances.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::direct::{decondition_power, interference_pdf};
use super::engine::{EngineDiagnostics, TierEngine};
use crate::error::{Error, Result};
use crate::geometry::{sample_joint_distances, CandidateSet};
use crate::laplace::{self, Inverter};
use crate::model::{
    DistanceIntegration, InversionMethod, NetworkConfig, QuadControls, SweepSpec, Tier,
};
use crate::quad::{composite, gauss_legendre, uniform_edges};

/// Largest error tolerated by the inversion self-test before any run.
pub const SELF_TEST_TOLERANCE: f64 = 1e-6;

/// Coverage terms of one tier over a threshold sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct TierCoverageTable {
    pub tier: usize,
    pub gamma_db: Vec<f64>,
    /// `terms[g][m - 1] = P(associate with m, SIR_m ≥ γ_g)`.
    pub terms: Vec<Vec<f64>>,
    pub term_se: Vec<Vec<f64>>,
    pub pc: Vec<f64>,
    pub pc_se: Vec<f64>,
    /// Number of distance points averaged over.
    pub samples: usize,
    pub diagnostics: EngineDiagnostics,
}

impl TierCoverageTable {
    pub fn n(&self) -> usize {
        self.terms.first().map_or(0, Vec::len)
    }
}

/// Coverage of the whole network, `1 - ∏_k (1 - P_c^(k))`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkCoverage {
    pub gamma_db: Vec<f64>,
    pub pc: Vec<f64>,
    /// Delta-method standard error from the per-tier errors.
    pub pc_se: Vec<f64>,
    pub tiers: Vec<TierCoverageTable>,
}

/// Weighted points of the outer expectation over distances.
#[derive(Debug, Clone)]
pub struct DistanceRule {
    pub points: Vec<(Vec<f64>, f64)>,
    /// True when the points are random draws, so a sampling error exists.
    pub sampled: bool,
}

/// Exact draws of the ordered-distance law, or a product rule for n ≤ 2.
pub fn distance_rule(config: &NetworkConfig, tier_index: usize) -> Result<DistanceRule> {
    let tier = config.tier(tier_index);
    let n = config.n_candidates;
    let quad = &config.quad;
    match quad.distance_integration {
        DistanceIntegration::MonteCarlo => {
            let count = quad.distance_samples;
            if count < 2 {
                return Err(Error::InvalidParameter(
                    "distance_samples must be >= 2".into(),
                ));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(quad.distance_seed);
            rng.set_stream(tier_index as u64);
            let w = 1.0 / count as f64;
            let points = (0..count)
                .map(|_| {
                    (
                        sample_joint_distances(tier.density(), n, tier_index, &mut rng).distances,
                        w,
                    )
                })
                .collect();
            Ok(DistanceRule {
                points,
                sampled: true,
            })
        }
        DistanceIntegration::Tensor => {
            if n > 2 {
                return Err(Error::InvalidParameter(format!(
                    "tensor distance integration supports n <= 2 (got {n})"
                )));
            }
            let rule = gauss_legendre(8);
            let panels = quad.tensor_nodes.div_ceil(8).max(1);
            // Arrival times a_i = πλ r_i²; a_n has density a^{n-1} e^{-a}/(n-1)!.
            let outer = composite(&uniform_edges(0.0, 40.0, panels), &rule);
            let inner = composite(&uniform_edges(0.0, 1.0, panels), &rule);
            let to_r = |a: f64| (a / (std::f64::consts::PI * tier.density())).sqrt();
            let mut points = Vec::new();
            for &(a2, w2) in &outer {
                if n == 1 {
                    points.push((vec![to_r(a2)], w2 * (-a2).exp()));
                    continue;
                }
                for &(u, w1) in &inner {
                    points.push((vec![to_r(u * a2), to_r(a2)], w1 * w2 * a2 * (-a2).exp()));
                }
            }
            Ok(DistanceRule {
                points,
                sampled: false,
            })
        }
    }
}

/// Terms at one distance tuple through the transform evaluated directly.
fn direct_terms(
    tier: &Tier,
    kappa: f64,
    quad: &QuadControls,
    inv: &Inverter,
    distances: &[f64],
    gammas: &[f64],
) -> Result<Vec<f64>> {
    let set = CandidateSet {
        tier_index: 0,
        distances: distances.to_vec(),
    };
    let n = distances.len();
    let mut out = vec![0.0; gammas.len() * n];
    for (g, &gamma) in gammas.iter().enumerate() {
        for m in 1..=n {
            out[g * n + m - 1] = decondition_power(m, &set, gamma, tier, kappa, quad, inv)?;
        }
    }
    Ok(out)
}

fn check_analytic(config: &NetworkConfig) -> Result<()> {
    config.validate()?;
    let problems = config.analytic_problems();
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    Ok(())
}

/// Coverage terms of tier `tier_index` (0-based) over the sweep.
pub fn per_tier_coverage(
    config: &NetworkConfig,
    tier_index: usize,
    sweep: &SweepSpec,
) -> Result<TierCoverageTable> {
    check_analytic(config)?;
    if tier_index >= config.k() {
        return Err(Error::InvalidParameter(format!(
            "tier index {tier_index} outside 0..{}",
            config.k()
        )));
    }
    let quad = &config.quad;
    let tier = config.tier(tier_index);
    let kappa = config.kappa_for(tier_index);
    let n = config.n_candidates;
    let gammas = sweep.linear();
    let g_count = gammas.len();

    let rule = distance_rule(config, tier_index)?;
    let per_point: Vec<Result<(Vec<f64>, EngineDiagnostics)>> = match quad.inversion {
        InversionMethod::Euler => {
            let engine = TierEngine::new(&tier, kappa, n, quad)?;
            laplace::self_test(engine.inverter(), SELF_TEST_TOLERANCE)?;
            let thresholds = engine.thresholds(&gammas);
            rule.points
                .par_iter()
                .map(|(d, _)| {
                    let mut out = vec![0.0; g_count * n];
                    let mut diag = EngineDiagnostics::default();
                    engine.accumulate_terms(d, &thresholds, &mut out, &mut diag)?;
                    Ok((out, diag))
                })
                .collect()
        }
        InversionMethod::Talbot => {
            let inv = Inverter::talbot(quad.talbot_nodes);
            laplace::self_test(&inv, SELF_TEST_TOLERANCE)?;
            rule.points
                .par_iter()
                .map(|(d, _)| {
                    Ok((
                        direct_terms(&tier, kappa, quad, &inv, d, &gammas)?,
                        EngineDiagnostics::default(),
                    ))
                })
                .collect()
        }
    };

    let mut values = Vec::with_capacity(per_point.len());
    let mut diagnostics = EngineDiagnostics::default();
    for r in per_point {
        let (v, d) = r?;
        diagnostics.merge(&d);
        values.push(v);
    }

    let weights: Vec<f64> = rule.points.iter().map(|p| p.1).collect();
    let moments = |f: &dyn Fn(&[f64]) -> f64| -> (f64, f64) {
        let mean: f64 = values.iter().zip(&weights).map(|(v, w)| w * f(v)).sum();
        if !rule.sampled {
            return (mean, 0.0);
        }
        let count = values.len() as f64;
        let ss: f64 = values.iter().map(|v| (f(v) - mean).powi(2)).sum();
        (mean, (ss / (count * (count - 1.0))).sqrt())
    };

    let mut terms = vec![vec![0.0; n]; g_count];
    let mut term_se = vec![vec![0.0; n]; g_count];
    let mut pc = vec![0.0; g_count];
    let mut pc_se = vec![0.0; g_count];
    for g in 0..g_count {
        for m in 0..n {
            let (mean, se) = moments(&|v: &[f64]| v[g * n + m]);
            terms[g][m] = mean;
            term_se[g][m] = se;
        }
        let (mean, se) = moments(&|v: &[f64]| v[g * n..(g + 1) * n].iter().sum());
        pc[g] = mean;
        pc_se[g] = se;
    }
    Ok(TierCoverageTable {
        tier: tier_index,
        gamma_db: sweep.db().to_vec(),
        terms,
        term_se,
        pc,
        pc_se,
        samples: values.len(),
        diagnostics,
    })
}

/// Combines independent per-tier coverages (orthogonal bands).
pub fn combine_tiers(tiers: Vec<TierCoverageTable>) -> NetworkCoverage {
    let gamma_db = tiers
        .first()
        .map(|t| t.gamma_db.clone())
        .unwrap_or_default();
    let mut pc = Vec::with_capacity(gamma_db.len());
    let mut pc_se = Vec::with_capacity(gamma_db.len());
    for g in 0..gamma_db.len() {
        let miss: f64 = tiers.iter().map(|t| 1.0 - t.pc[g]).product();
        // ∂P/∂p_k = ∏_{j≠k} (1 - p_j)
        let var: f64 = tiers
            .iter()
            .enumerate()
            .map(|(k, t)| {
                let others: f64 = tiers
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != k)
                    .map(|(_, u)| 1.0 - u.pc[g])
                    .product();
                (others * t.pc_se[g]).powi(2)
            })
            .sum();
        pc.push(1.0 - miss);
        pc_se.push(var.sqrt());
    }
    NetworkCoverage {
        gamma_db,
        pc,
        pc_se,
        tiers,
    }
}

/// Coverage of every tier and of the network.
pub fn network_coverage(config: &NetworkConfig, sweep: &SweepSpec) -> Result<NetworkCoverage> {
    let tiers = (0..config.k())
        .map(|k| per_tier_coverage(config, k, sweep))
        .collect::<Result<Vec<_>>>()?;
    Ok(combine_tiers(tiers))
}

/// One point of the Talbot-versus-Euler agreement check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgreementPoint {
    pub x: f64,
    pub euler: f64,
    pub talbot: f64,
}

impl AgreementPoint {
    pub fn gap(&self) -> f64 {
        (self.euler - self.talbot).abs()
    }
}

/// Smallest kink-free argument: the truncated near field puts kinks in the
/// CDF at multiples of `t`, and Talbot cannot resolve the region below `t`.
const KINK_MARGIN: f64 = 3.0;

/// Inverts the conditional interference CDF of candidate `m` (1-based) with
/// both algorithms at `points` arguments spread geometrically between the
/// 2% and 98% quantiles, never below `3 t`.
#[allow(clippy::too_many_arguments)]
pub fn inversion_agreement(
    m: usize,
    t: f64,
    distances: &CandidateSet,
    tier: &Tier,
    kappa: f64,
    quad: &QuadControls,
    points: usize,
) -> Result<Vec<AgreementPoint>> {
    let law = interference_pdf(m, t, distances, tier, kappa, quad)?;
    let euler = Inverter::euler(quad.euler_terms);
    let talbot = Inverter::talbot(quad.talbot_nodes);
    let floor = KINK_MARGIN * t;
    // Quantiles only place the points: scan the CDF with a low-order
    // inversion on a coarse log grid and interpolate.
    let coarse = Inverter::euler(6);
    let mut grid = vec![(floor.ln(), law.cdf(&coarse, floor)?)];
    while grid.last().map_or(0.0, |g| g.1) < 0.98 {
        let u = grid.last().map_or(0.0, |g| g.0) + 0.5;
        if u - floor.ln() > 60.0 {
            return Err(Error::InversionUnstable("CDF never reaches 0.98".into()));
        }
        grid.push((u, law.cdf(&coarse, u.exp())?));
    }
    let quantile = |p: f64| -> f64 {
        match grid.windows(2).find(|w| w[1].1 >= p) {
            Some(w) if w[0].1 < p => {
                let f = (p - w[0].1) / (w[1].1 - w[0].1);
                (w[0].0 + f * (w[1].0 - w[0].0)).exp()
            }
            _ => floor,
        }
    };
    let (a, b) = (quantile(0.02), quantile(0.98).max(floor * 1.01));
    let step = if points > 1 {
        (b / a).ln() / (points - 1) as f64
    } else {
        0.0
    };
    (0..points)
        .map(|i| {
            let x = a * (step * i as f64).exp();
            Ok(AgreementPoint {
                x,
                euler: law.cdf(&euler, x)?,
                talbot: law.cdf(&talbot, x)?,
            })
        })
        .collect()
}
