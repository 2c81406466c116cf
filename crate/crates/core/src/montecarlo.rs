//! Ground-truth simulator: PPP base stations, per-link blockage and
//! shadowing, max-SIR association within each tier's candidate set.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::analytic::lognormal::moment;
use crate::error::{Error, Result};
use crate::geometry::{sample_ppp, window_radius};
use crate::model::{NetworkConfig, SweepSpec, Tier};
use crate::propagation::draw_received_power;

/// Realizations per independent random substream.
pub const BLOCK: usize = 1000;
/// Substreams reserved per block; tier `k` of block `b` uses `b * 64 + k`.
const STREAMS_PER_BLOCK: u64 = 64;
const MAX_RESAMPLES: usize = 1000;
/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Outcome of one tier in one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct TierDraw {
    /// Candidate powers, nearest first.
    pub powers: Vec<f64>,
    /// `P_i / (Σ_all P - P_i)`; infinite without interferers.
    pub sir: Vec<f64>,
    /// 0-based index of the largest SIR, lowest index on ties.
    pub winner: usize,
    /// 0-based index of the largest power, lowest index on ties.
    pub power_argmax: usize,
    /// Two candidates share the largest power.
    pub tie: bool,
    /// Power summed over every base station of the tier in the window.
    pub total_power: f64,
    /// Window draws discarded for holding fewer than `n` points.
    pub resamples: usize,
}

impl TierDraw {
    pub fn best_sir(&self) -> f64 {
        self.sir[self.winner]
    }
}

/// Simulation window per tier: the configured radius or one derived from
/// the tail criterion.
pub fn window_radii(config: &NetworkConfig) -> Result<Vec<f64>> {
    (0..config.k())
        .map(|k| match config.mc.window_radius_m {
            Some(r) => Ok(r),
            None => window_radius(
                &config.tier(k),
                config.kappa_for(k),
                config.n_candidates,
                config.mc.window_tail_ratio,
            ),
        })
        .collect()
}

/// Power of a link forced to NLOS. Consumes the same draws as
/// [`draw_received_power`] so both settings share random numbers.
fn draw_nlos_power<R: Rng + ?Sized>(tier: &Tier, r: f64, rng: &mut R) -> f64 {
    let _: f64 = rng.random();
    let z: f64 = rng.sample(StandardNormal);
    let l = &tier.linear;
    (l.b_nlos.ln() - tier.params.exponent_nlos * r.ln() + l.sigma_s_nlos * z).exp()
}

fn first_argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Candidate powers plus the summed power of everyone else to the SIR
/// record of one tier.
fn assemble(powers: Vec<f64>, rest: f64, resamples: usize) -> TierDraw {
    // Summing the others avoids cancellation when one power dominates.
    let sir: Vec<f64> = (0..powers.len())
        .map(|i| {
            let others: f64 = powers
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, p)| p)
                .sum();
            let interference = rest + others;
            if interference > 0.0 {
                powers[i] / interference
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let winner = first_argmax(&sir);
    let power_argmax = first_argmax(&powers);
    let top = powers[power_argmax];
    let tie = powers.iter().filter(|&&p| p == top).count() > 1;
    TierDraw {
        total_power: rest + powers.iter().sum::<f64>(),
        powers,
        sir,
        winner,
        power_argmax,
        tie,
        resamples,
    }
}

/// One tier: PPP in the window, every link drawn, max-SIR association.
pub fn simulate_tier<R: Rng + ?Sized>(
    tier: &Tier,
    kappa: f64,
    n: usize,
    radius: f64,
    farfield_all_nlos: bool,
    rng: &mut R,
) -> Result<TierDraw> {
    let mut resamples = 0;
    let real = loop {
        let real = sample_ppp(tier.density(), radius, rng)?;
        if real.len() >= n {
            break real;
        }
        resamples += 1;
        if resamples > MAX_RESAMPLES {
            return Err(Error::InsufficientPoints {
                needed: n,
                found: real.len(),
            });
        }
    };
    let mut order: Vec<usize> = (0..real.len()).collect();
    if n < order.len() {
        order.select_nth_unstable_by(n - 1, |&a, &b| real.radii[a].total_cmp(&real.radii[b]));
    }
    order.truncate(n);
    order.sort_by(|&a, &b| real.radii[a].total_cmp(&real.radii[b]));
    let mut slot = vec![usize::MAX; real.len()];
    for (rank, &i) in order.iter().enumerate() {
        slot[i] = rank;
    }
    let mut powers = vec![0.0; n];
    let mut rest = 0.0;
    for (i, &r) in real.radii.iter().enumerate() {
        if slot[i] != usize::MAX {
            powers[slot[i]] = draw_received_power(tier, r, kappa, rng).0;
        } else if farfield_all_nlos {
            rest += draw_nlos_power(tier, r, rng);
        } else {
            rest += draw_received_power(tier, r, kappa, rng).0;
        }
    }
    Ok(assemble(powers, rest, resamples))
}

fn tier_rng(seed: u64, block: usize, tier: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block as u64 * STREAMS_PER_BLOCK + tier as u64);
    rng
}

/// Every tier of one realization. Tier `k` draws from `rngs[k]`.
pub fn simulate_realization<R: Rng>(
    config: &NetworkConfig,
    radii: &[f64],
    rngs: &mut [R],
) -> Result<Vec<TierDraw>> {
    (0..config.k())
        .map(|k| {
            simulate_tier(
                &config.tier(k),
                config.kappa_for(k),
                config.n_candidates,
                radii[k],
                config.mc.farfield_all_nlos,
                &mut rngs[k],
            )
        })
        .collect()
}

/// Binomial proportion with its standard error and Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proportion {
    pub hits: u64,
    pub trials: u64,
}

impl Proportion {
    pub fn estimate(&self) -> f64 {
        if self.trials == 0 {
            return f64::NAN;
        }
        self.hits as f64 / self.trials as f64
    }

    pub fn se(&self) -> f64 {
        let p = self.estimate();
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    /// Wilson score interval at normal quantile `z`.
    pub fn wilson(&self, z: f64) -> (f64, f64) {
        let n = self.trials as f64;
        let p = self.estimate();
        let z2 = z * z;
        let denom = 1.0 + z2 / n;
        let center = (p + z2 / (2.0 * n)) / denom;
        let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
        // The bounds touch 0 and 1 exactly at the extremes.
        let lo = if self.hits == 0 {
            0.0
        } else {
            (center - half).max(0.0)
        };
        let hi = if self.hits == self.trials {
            1.0
        } else {
            (center + half).min(1.0)
        };
        (lo, hi)
    }

    pub fn half_width(&self, z: f64) -> f64 {
        let (lo, hi) = self.wilson(z);
        0.5 * (hi - lo)
    }
}

/// Per-tier Monte Carlo estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct TierEstimate {
    pub tier: usize,
    /// `joint[g][m] = #{winner = m, SIR ≥ γ_g}`.
    pub joint: Vec<Vec<Proportion>>,
    pub covered: Vec<Proportion>,
    /// Winner frequencies, summing to one.
    pub assoc: Vec<Proportion>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkEstimate {
    pub covered: Vec<Proportion>,
    /// `assoc[k][m]`: the overall best candidate is `m` of tier `k`.
    pub assoc: Vec<Vec<Proportion>>,
}

/// Empirical coverage over a threshold sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageResult {
    pub gamma_db: Vec<f64>,
    pub realizations: u64,
    pub per_tier: Vec<TierEstimate>,
    pub network: NetworkEstimate,
    /// Realizations where the SIR argmax differs from the power argmax.
    pub argmax_mismatches: u64,
    /// Realizations with a tie for the largest candidate power.
    pub ties: u64,
    pub resamples: u64,
    pub window_radii: Vec<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Default)]
struct Tally {
    joint: Vec<Vec<Vec<u64>>>,
    network: Vec<u64>,
    assoc: Vec<Vec<u64>>,
    network_assoc: Vec<Vec<u64>>,
    argmax_mismatches: u64,
    ties: u64,
    resamples: u64,
    realizations: u64,
}

impl Tally {
    fn new(k: usize, g: usize, n: usize) -> Self {
        Tally {
            joint: vec![vec![vec![0; n]; g]; k],
            network: vec![0; g],
            assoc: vec![vec![0; n]; k],
            network_assoc: vec![vec![0; n]; k],
            ..Default::default()
        }
    }

    fn record(&mut self, draws: &[TierDraw], gammas: &[f64]) {
        self.realizations += 1;
        let mut best_tier = 0;
        for (k, d) in draws.iter().enumerate() {
            let best = d.best_sir();
            // Thresholds are ascending: covered for every γ ≤ best.
            let covered = gammas.partition_point(|&g| g <= best);
            for g in 0..covered {
                self.joint[k][g][d.winner] += 1;
            }
            self.assoc[k][d.winner] += 1;
            if d.winner != d.power_argmax {
                self.argmax_mismatches += 1;
            }
            self.ties += d.tie as u64;
            self.resamples += d.resamples as u64;
            if best > draws[best_tier].best_sir() {
                best_tier = k;
            }
        }
        let best = draws[best_tier].best_sir();
        for c in self
            .network
            .iter_mut()
            .take(gammas.partition_point(|&g| g <= best))
        {
            *c += 1;
        }
        self.network_assoc[best_tier][draws[best_tier].winner] += 1;
    }

    fn merge(&mut self, o: &Tally) {
        let add = |a: &mut [u64], b: &[u64]| a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        for (a, b) in self.joint.iter_mut().zip(&o.joint) {
            for (x, y) in a.iter_mut().zip(b) {
                add(x, y);
            }
        }
        add(&mut self.network, &o.network);
        for (a, b) in self.assoc.iter_mut().zip(&o.assoc) {
            add(a, b);
        }
        for (a, b) in self.network_assoc.iter_mut().zip(&o.network_assoc) {
            add(a, b);
        }
        self.argmax_mismatches += o.argmax_mismatches;
        self.ties += o.ties;
        self.resamples += o.resamples;
        self.realizations += o.realizations;
    }
}

/// Replays the first `count` realizations of `estimate_coverage` (same
/// seed, same streams) and keeps every tier draw.
pub fn debug_realizations(config: &NetworkConfig, count: usize) -> Result<Vec<Vec<TierDraw>>> {
    config.validate()?;
    let count = count.min(BLOCK).min(config.mc.realizations);
    let radii = window_radii(config)?;
    let mut rngs: Vec<ChaCha8Rng> = (0..config.k())
        .map(|t| tier_rng(config.mc.seed, 0, t))
        .collect();
    (0..count)
        .map(|_| simulate_realization(config, &radii, &mut rngs))
        .collect()
}

/// Writes one row per candidate of every dumped realization.
pub fn write_debug_csv<W: std::io::Write>(
    out: &mut W,
    dump: &[Vec<TierDraw>],
) -> std::io::Result<()> {
    writeln!(
        out,
        "realization,tier,candidate,power_w,sir_db,serving,total_power_w,resamples"
    )?;
    for (i, draws) in dump.iter().enumerate() {
        for (k, d) in draws.iter().enumerate() {
            for (m, (p, s)) in d.powers.iter().zip(&d.sir).enumerate() {
                writeln!(
                    out,
                    "{},{},{},{p:.9e},{:.6},{},{:.9e},{}",
                    i + 1,
                    k + 1,
                    m + 1,
                    10.0 * s.log10(),
                    (m == d.winner) as u8,
                    d.total_power,
                    d.resamples
                )?;
            }
        }
    }
    Ok(())
}

/// Coverage of every tier and of the network over the sweep.
pub fn estimate_coverage(config: &NetworkConfig, sweep: &SweepSpec) -> Result<CoverageResult> {
    config.validate()?;
    let total = config.mc.realizations;
    if total == 0 {
        return Err(Error::InvalidParameter("realizations must be >= 1".into()));
    }
    let mut warnings = Vec::new();
    if total < 1000 {
        warnings.push(format!("only {total} realizations; intervals will be wide"));
    }
    let radii = window_radii(config)?;
    let gammas = sweep.linear();
    let (k, n) = (config.k(), config.n_candidates);
    let blocks = total.div_ceil(BLOCK);
    let seed = config.mc.seed;
    let tallies: Vec<Result<Tally>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rngs: Vec<ChaCha8Rng> = (0..k).map(|t| tier_rng(seed, b, t)).collect();
            let mut tally = Tally::new(k, gammas.len(), n);
            let count = BLOCK.min(total - b * BLOCK);
            for _ in 0..count {
                let draws = simulate_realization(config, &radii, &mut rngs)?;
                tally.record(&draws, &gammas);
            }
            Ok(tally)
        })
        .collect();
    let mut tally = Tally::new(k, gammas.len(), n);
    for t in tallies {
        tally.merge(&t?);
    }
    if tally.ties > 0 {
        warnings.push(format!(
            "{} realizations had tied candidate powers",
            tally.ties
        ));
    }
    let trials = tally.realizations;
    let prop = |hits: u64| Proportion { hits, trials };
    let per_tier = (0..k)
        .map(|t| TierEstimate {
            tier: t,
            joint: tally.joint[t]
                .iter()
                .map(|row| row.iter().map(|&h| prop(h)).collect())
                .collect(),
            covered: tally.joint[t]
                .iter()
                .map(|row| prop(row.iter().sum()))
                .collect(),
            assoc: tally.assoc[t].iter().map(|&h| prop(h)).collect(),
        })
        .collect();
    let network = NetworkEstimate {
        covered: tally.network.iter().map(|&h| prop(h)).collect(),
        assoc: tally
            .network_assoc
            .iter()
            .map(|row| row.iter().map(|&h| prop(h)).collect())
            .collect(),
    };
    Ok(CoverageResult {
        gamma_db: sweep.db().to_vec(),
        realizations: trials,
        per_tier,
        network,
        argmax_mismatches: tally.argmax_mismatches,
        ties: tally.ties,
        resamples: tally.resamples,
        window_radii: radii,
        warnings,
    })
}

/// Largest coverage change, in standard errors, when every window radius
/// is doubled.
pub fn window_bias(config: &NetworkConfig, sweep: &SweepSpec) -> Result<f64> {
    let base = estimate_coverage(config, sweep)?;
    let radii = base
        .window_radii
        .iter()
        .map(|r| 2.0 * r)
        .collect::<Vec<_>>();
    let mut worst: f64 = 0.0;
    for (k, &r) in radii.iter().enumerate() {
        let mut single = config.clone();
        single.tiers = vec![config.tiers[k]];
        single.kappa_overrides = vec![Some(config.kappa_for(k))];
        single.mc.window_radius_m = Some(r);
        let doubled = estimate_coverage(&single, sweep)?;
        for (a, b) in base.per_tier[k]
            .covered
            .iter()
            .zip(&doubled.per_tier[0].covered)
        {
            let se = a.se().max(b.se()).max(1.0 / a.trials as f64);
            worst = worst.max((a.estimate() - b.estimate()).abs() / se);
        }
    }
    Ok(worst)
}

/// What to measure with the candidate distances held fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditioningSpec {
    pub tier_index: usize,
    /// Candidate distances, ascending; the rest of the tier is a PPP
    /// beyond the last one.
    pub distances: Vec<f64>,
    pub samples: usize,
    /// Arguments of the far-field transform `E[exp(-s I_far)]`.
    pub far_field_s: Vec<f64>,
    pub gamma_db: Vec<f64>,
    /// Candidate (1-based) whose interference CDF is tabulated.
    pub interference_m: usize,
    pub interference_x: Vec<f64>,
    /// Fewest association hits accepted for the conditional CDF.
    pub min_hits: u64,
}

/// Monte Carlo estimate of a transform value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LtEstimate {
    pub s: f64,
    pub mean: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalReport {
    pub samples: u64,
    pub window_radius: f64,
    /// All-NLOS shot noise beyond the last candidate, with the mean of the
    /// part beyond the window folded in.
    pub far_field_lt: Vec<LtEstimate>,
    /// Winner frequencies given the distances.
    pub argmax: Vec<Proportion>,
    /// `joint[g][m]`: winner `m` and `SIR_m ≥ γ_g`.
    pub joint: Vec<Vec<Proportion>>,
    /// `P(I_m ≤ x | winner = m, distances)` on `interference_x`.
    pub interference_cdf: Vec<f64>,
    pub interference_hits: u64,
}

/// Conditional statistics with the candidate distances fixed.
pub fn empirical_conditionals<R: Rng + ?Sized>(
    config: &NetworkConfig,
    spec: &ConditioningSpec,
    rng: &mut R,
) -> Result<ConditionalReport> {
    config.validate()?;
    let k = spec.tier_index;
    if k >= config.k() {
        return Err(Error::InvalidParameter(format!(
            "tier index {k} outside 0..{}",
            config.k()
        )));
    }
    let n = config.n_candidates;
    let d = &spec.distances;
    if d.len() != n || d.iter().any(|&r| !(r > 0.0)) || d.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter(format!(
            "expected {n} positive ascending distances"
        )));
    }
    if !(1..=n).contains(&spec.interference_m) {
        return Err(Error::InvalidParameter(format!(
            "interference_m outside 1..={n}"
        )));
    }
    let tier = config.tier(k);
    let kappa = config.kappa_for(k);
    let radius = window_radii(config)?[k].max(2.0 * d[n - 1]);
    let rn = d[n - 1];
    let density = tier.density();
    let area = PI * (radius * radius - rn * rn);
    let poisson =
        Poisson::new(density * area).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let gammas: Vec<f64> = spec
        .gamma_db
        .iter()
        .map(|&g| crate::model::db_to_linear(g))
        .collect();
    let mut joint = vec![vec![0u64; n]; gammas.len()];
    let mut argmax = vec![0u64; n];
    let mut lt_sum = vec![0.0; spec.far_field_s.len()];
    let mut lt_sq = vec![0.0; spec.far_field_s.len()];
    let mut cdf_hits = vec![0u64; spec.interference_x.len()];
    let mi = spec.interference_m - 1;
    let l = &tier.linear;
    let alpha_n = tier.params.exponent_nlos;
    for _ in 0..spec.samples {
        let powers: Vec<f64> = d
            .iter()
            .map(|&r| draw_received_power(&tier, r, kappa, rng).0)
            .collect();
        let count: f64 = poisson.sample(rng);
        let mut rest = 0.0;
        let mut far_nlos = 0.0;
        for _ in 0..count as usize {
            let r = (rn * rn + rng.random::<f64>() * (radius * radius - rn * rn)).sqrt();
            rest += if config.mc.farfield_all_nlos {
                draw_nlos_power(&tier, r, rng)
            } else {
                draw_received_power(&tier, r, kappa, rng).0
            };
            let z: f64 = rng.sample(StandardNormal);
            far_nlos += (l.b_nlos.ln() - alpha_n * r.ln() + l.sigma_s_nlos * z).exp();
        }
        for (i, &s) in spec.far_field_s.iter().enumerate() {
            let v = (-s * far_nlos).exp();
            lt_sum[i] += v;
            lt_sq[i] += v * v;
        }
        let draw = assemble(powers, rest, 0);
        argmax[draw.winner] += 1;
        let best = draw.best_sir();
        for row in joint
            .iter_mut()
            .take(gammas.partition_point(|&g| g <= best))
        {
            row[draw.winner] += 1;
        }
        if draw.winner == mi {
            let interference = draw.total_power - draw.powers[mi];
            for (h, &x) in cdf_hits.iter_mut().zip(&spec.interference_x) {
                *h += (interference <= x) as u64;
            }
        }
    }
    let trials = spec.samples as u64;
    let hits = argmax[mi];
    if !spec.interference_x.is_empty() && hits < spec.min_hits {
        return Err(Error::InsufficientConditionalSamples {
            hits: hits as usize,
            required: spec.min_hits as usize,
        });
    }
    // Mean all-NLOS interference beyond the window (Campbell).
    let tail =
        2.0 * PI * density * l.b_nlos * moment(1.0, l.sigma_s_nlos) * radius.powf(2.0 - alpha_n)
            / (alpha_n - 2.0);
    let far_field_lt = spec
        .far_field_s
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let mean = lt_sum[i] / trials as f64;
            let var = (lt_sq[i] / trials as f64 - mean * mean).max(0.0);
            let c = (-s * tail).exp();
            LtEstimate {
                s,
                mean: mean * c,
                se: (var / trials as f64).sqrt() * c,
            }
        })
        .collect();
    let prop = |h: u64| Proportion { hits: h, trials };
    Ok(ConditionalReport {
        samples: trials,
        window_radius: radius,
        far_field_lt,
        argmax: argmax.iter().map(|&h| prop(h)).collect(),
        joint: joint
            .iter()
            .map(|row| row.iter().map(|&h| prop(h)).collect())
            .collect(),
        interference_cdf: cdf_hits
            .iter()
            .map(|&c| {
                if hits == 0 {
                    f64::NAN
                } else {
                    c as f64 / hits as f64
                }
            })
            .collect(),
        interference_hits: hits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TierParams;

    fn params(density: f64) -> TierParams {
        TierParams {
            density,
            tx_power_dbm: 47.0,
            intercept_nlos_db: 2.7,
            intercept_los_db: 30.8,
            exponent_nlos: 4.28,
            exponent_los: 2.42,
            shadow_sigma_nlos_db: 8.0,
            shadow_sigma_los_db: 4.0,
        }
    }

    #[test]
    fn lone_station_has_infinite_sir() {
        let d = assemble(vec![1e-9], 0.0, 0);
        assert_eq!(d.sir, vec![f64::INFINITY]);
        assert_eq!(d.winner, 0);
    }

    #[test]
    fn sir_uses_every_other_station() {
        let d = assemble(vec![4.0, 1.0, 2.0], 3.0, 0);
        assert_eq!(d.sir, vec![4.0 / 6.0, 1.0 / 9.0, 2.0 / 8.0]);
        assert_eq!((d.winner, d.power_argmax), (0, 0));
        assert!(!d.tie);
        assert_eq!(d.total_power, 10.0);
        let t = assemble(vec![2.0, 2.0], 0.0, 0);
        assert!(t.tie);
        assert_eq!(t.winner, 0);
    }

    #[test]
    fn wilson_interval_contains_estimate() {
        let p = Proportion {
            hits: 30,
            trials: 100,
        };
        let (lo, hi) = p.wilson(Z95);
        assert!(lo < 0.3 && 0.3 < hi);
        // Reference values from statsmodels.
        assert!(
            (lo - 0.218_948_853).abs() < 1e-8 && (hi - 0.395_848_546).abs() < 1e-8,
            "{lo} {hi}"
        );
        let all = Proportion {
            hits: 10,
            trials: 10,
        };
        assert_eq!(all.wilson(Z95).1, 1.0);
    }

    #[test]
    fn deterministic_path_loss_picks_nearest() {
        let mut p = params(1e-5);
        p.exponent_los = p.exponent_nlos;
        p.intercept_los_db = p.intercept_nlos_db;
        p.shadow_sigma_los_db = 0.0;
        p.shadow_sigma_nlos_db = 0.0;
        let mut cfg = NetworkConfig::new(vec![p], 0.008, 3);
        cfg.mc.realizations = 2000;
        let sweep = SweepSpec::new(vec![0.0]).unwrap();
        let res = estimate_coverage(&cfg, &sweep).unwrap();
        assert_eq!(res.per_tier[0].assoc[0].estimate(), 1.0);
        assert_eq!(res.argmax_mismatches, 0);
    }

    #[test]
    fn sweep_is_monotone_and_reproducible() {
        let mut cfg = NetworkConfig::new(vec![params(2e-6), params(2e-5)], 0.008, 2);
        cfg.mc.realizations = 3000;
        let sweep = SweepSpec::range(-20.0, 40.0, 5.0).unwrap();
        let a = estimate_coverage(&cfg, &sweep).unwrap();
        let b = estimate_coverage(&cfg, &sweep).unwrap();
        assert_eq!(a, b);
        for t in &a.per_tier {
            assert!(t.covered.windows(2).all(|w| w[0].hits >= w[1].hits));
            let total: u64 = t.assoc.iter().map(|p| p.hits).sum();
            assert_eq!(total, a.realizations);
        }
        for (g, net) in a.network.covered.iter().enumerate() {
            assert!(a.per_tier.iter().all(|t| net.hits >= t.covered[g].hits));
        }
    }

    #[test]
    fn single_tier_run_reuses_two_tier_draws() {
        let mut two = NetworkConfig::new(vec![params(2e-6), params(2e-5)], 0.008, 2);
        two.mc.realizations = 1500;
        let mut one = two.clone();
        one.tiers.truncate(1);
        one.kappa_overrides.truncate(1);
        let sweep = SweepSpec::new(vec![-5.0, 5.0]).unwrap();
        let a = estimate_coverage(&two, &sweep).unwrap();
        let b = estimate_coverage(&one, &sweep).unwrap();
        assert_eq!(a.per_tier[0], b.per_tier[0]);
    }

    #[test]
    fn conditional_transform_at_zero_is_one() {
        let cfg = NetworkConfig::new(vec![params(2e-6)], 0.008, 2);
        let spec = ConditioningSpec {
            tier_index: 0,
            distances: vec![200.0, 500.0],
            samples: 300,
            far_field_s: vec![0.0],
            gamma_db: vec![-50.0],
            interference_m: 1,
            interference_x: vec![],
            min_hits: 500,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rep = empirical_conditionals(&cfg, &spec, &mut rng).unwrap();
        assert_eq!(rep.far_field_lt[0].mean, 1.0);
        let total: u64 = rep.argmax.iter().map(|p| p.hits).sum();
        assert_eq!(total, 300);
        let covered: u64 = rep.joint[0].iter().map(|p| p.hits).sum();
        assert_eq!(covered, 300);
    }

    #[test]
    fn too_few_conditional_hits_is_an_error() {
        let cfg = NetworkConfig::new(vec![params(2e-6)], 0.008, 2);
        let spec = ConditioningSpec {
            tier_index: 0,
            distances: vec![200.0, 500.0],
            samples: 100,
            far_field_s: vec![],
            gamma_db: vec![],
            interference_m: 2,
            interference_x: vec![1e-9],
            min_hits: 500,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(matches!(
            empirical_conditionals(&cfg, &spec, &mut rng),
            Err(Error::InsufficientConditionalSamples { .. })
        ));
    }

    #[test]
    fn debug_dump_replays_the_estimator() {
        let mut cfg = NetworkConfig::new(vec![params(2e-6), params(2e-5)], 0.008, 2);
        cfg.mc.realizations = 300;
        let sweep = SweepSpec::new(vec![0.0]).unwrap();
        let est = estimate_coverage(&cfg, &sweep).unwrap();
        let dump = debug_realizations(&cfg, 5000).unwrap();
        assert_eq!(dump.len(), 300);
        for k in 0..2 {
            let hits = dump.iter().filter(|d| d[k].best_sir() >= 1.0).count() as u64;
            assert_eq!(hits, est.per_tier[k].covered[0].hits);
        }
        let mut buf = Vec::new();
        write_debug_csv(&mut buf, &dump[..3]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap().lines().count(),
            1 + 3 * 2 * 2
        );
    }
}
