//! Domain types, unit conversions, and derived per-tier constants.
//!
//! Everything inside the crate works in SI linear units (watts, meters,
//! BS per square meter). Decibel quantities only appear at the config and
//! report boundary.

use serde::{Deserialize, Serialize};
use std::f64::consts::LN_10;

use crate::error::{Error, Result};

/// Scale between decibels and natural log: `β = -ln(10)/10`.
pub const BETA: f64 = -LN_10 / 10.0;

/// Power in dBm to watts.
pub fn dbm_to_watts(p_dbm: f64) -> f64 {
    10f64.powf((p_dbm - 30.0) / 10.0)
}

/// Power in watts to dBm.
pub fn watts_to_dbm(p_watts: f64) -> f64 {
    10.0 * p_watts.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// BS per km² to BS per m².
pub fn per_km2_to_per_m2(d: f64) -> f64 {
    d * 1e-6
}

/// Physical constants of one tier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TierParams {
    /// BS intensity, per m².
    pub density: f64,
    pub tx_power_dbm: f64,
    pub intercept_nlos_db: f64,
    pub intercept_los_db: f64,
    pub exponent_nlos: f64,
    pub exponent_los: f64,
    pub shadow_sigma_nlos_db: f64,
    pub shadow_sigma_los_db: f64,
}

impl TierParams {
    /// Hard violations; an empty list means the tier is usable.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let finite = [
            ("density", self.density),
            ("tx_power_dbm", self.tx_power_dbm),
            ("intercept_nlos_db", self.intercept_nlos_db),
            ("intercept_los_db", self.intercept_los_db),
            ("exponent_nlos", self.exponent_nlos),
            ("exponent_los", self.exponent_los),
            ("shadow_sigma_nlos_db", self.shadow_sigma_nlos_db),
            ("shadow_sigma_los_db", self.shadow_sigma_los_db),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                out.push(format!("{name} must be finite (got {v})"));
            }
        }
        if !(self.density > 0.0) {
            out.push(format!("density must be > 0 (got {})", self.density));
        }
        if !(self.exponent_nlos > 0.0) {
            out.push(format!(
                "exponent_nlos must be > 0 (got {})",
                self.exponent_nlos
            ));
        }
        if !(self.exponent_los > 0.0) {
            out.push(format!(
                "exponent_los must be > 0 (got {})",
                self.exponent_los
            ));
        }
        if !(self.shadow_sigma_nlos_db >= 0.0) {
            out.push(format!(
                "shadow_sigma_nlos_db must be >= 0 (got {})",
                self.shadow_sigma_nlos_db
            ));
        }
        if !(self.shadow_sigma_los_db >= 0.0) {
            out.push(format!(
                "shadow_sigma_los_db must be >= 0 (got {})",
                self.shadow_sigma_los_db
            ));
        }
        out
    }

    /// Soft findings that do not block a run.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.exponent_nlos <= self.exponent_los {
            out.push(format!(
                "exponent_nlos ({}) is not larger than exponent_los ({})",
                self.exponent_nlos, self.exponent_los
            ));
        }
        out
    }
}

/// Linear-scale constants derived from [`TierParams`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedLinearParams {
    /// `P_t · 10^(-A_N/10)`, watts.
    pub b_nlos: f64,
    /// `P_t · 10^(-A_L/10)`, watts.
    pub b_los: f64,
    pub beta: f64,
    /// NLOS shadowing spread on the natural-log scale.
    pub sigma_s_nlos: f64,
    pub sigma_s_los: f64,
}

pub fn derive_linear(t: &TierParams) -> DerivedLinearParams {
    let pt = dbm_to_watts(t.tx_power_dbm);
    DerivedLinearParams {
        b_nlos: pt * 10f64.powf(-t.intercept_nlos_db / 10.0),
        b_los: pt * 10f64.powf(-t.intercept_los_db / 10.0),
        beta: BETA,
        sigma_s_nlos: BETA.abs() * t.shadow_sigma_nlos_db,
        sigma_s_los: BETA.abs() * t.shadow_sigma_los_db,
    }
}

/// A tier with its derived constants cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tier {
    pub params: TierParams,
    pub linear: DerivedLinearParams,
}

impl Tier {
    pub fn new(params: TierParams) -> Self {
        Tier {
            params,
            linear: derive_linear(&params),
        }
    }

    pub fn density(&self) -> f64 {
        self.params.density
    }

    /// `E[exp(βξ_N)] = exp(σ_sN²/2)`.
    pub fn nlos_shadow_mean(&self) -> f64 {
        (0.5 * self.linear.sigma_s_nlos.powi(2)).exp()
    }

    pub fn los_shadow_mean(&self) -> f64 {
        (0.5 * self.linear.sigma_s_los.powi(2)).exp()
    }
}

/// How the outer expectation over the ordered candidate distances is taken.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceIntegration {
    /// Average over exact draws of the ordered-distance law.
    MonteCarlo,
    /// Product Gauss–Legendre rule in the arrival-time coordinates; n ≤ 2.
    Tensor,
}

/// Which inversion algorithm the direct (non-tabulated) transform path uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InversionMethod {
    Euler,
    Talbot,
}

/// Upper bound on `McControls::debug_dump`, one simulation block.
pub const MAX_DEBUG_DUMP: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McControls {
    pub realizations: usize,
    pub seed: u64,
    /// Fixed simulation window radius in meters; derived per tier when absent.
    pub window_radius_m: Option<f64>,
    /// Neglected mean interference beyond the window, relative to the mean
    /// in-window interference.
    pub window_tail_ratio: f64,
    /// Treat every BS beyond the n-th nearest as NLOS, as the analytic
    /// far-field model does.
    pub farfield_all_nlos: bool,
    /// Realizations written to `mc_debug.csv`; 0 disables the dump.
    pub debug_dump: usize,
}

impl Default for McControls {
    fn default() -> Self {
        McControls {
            realizations: 100_000,
            seed: 1,
            window_radius_m: None,
            window_tail_ratio: 1e-4,
            farfield_all_nlos: false,
            debug_dump: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadControls {
    pub hermite_nodes: usize,
    pub talbot_nodes: usize,
    /// Euler-summation order `M`; the inversion uses `2M + 1` transform
    /// evaluations.
    pub euler_terms: usize,
    pub inversion: InversionMethod,
    /// Half-width, in shadowing standard deviations, of the log-power
    /// window used for the serving-power integral.
    pub power_sigma_span: f64,
    pub power_panels: usize,
    pub power_panel_nodes: usize,
    /// Absolute bound on the neglected far-field exponent.
    pub tail_tolerance: f64,
    /// Fixed outer radius for the far-field radial integral; derived from
    /// `tail_tolerance` when absent.
    pub tail_radius_m: Option<f64>,
    pub distance_samples: usize,
    pub distance_seed: u64,
    pub distance_integration: DistanceIntegration,
    /// Gauss–Legendre nodes per coordinate for tensor distance integration.
    pub tensor_nodes: usize,
}

impl Default for QuadControls {
    fn default() -> Self {
        QuadControls {
            hermite_nodes: 64,
            talbot_nodes: 32,
            euler_terms: 11,
            inversion: InversionMethod::Euler,
            power_sigma_span: 8.0,
            power_panels: 12,
            power_panel_nodes: 6,
            tail_tolerance: 1e-10,
            tail_radius_m: None,
            distance_samples: 20_000,
            distance_seed: 7,
            distance_integration: DistanceIntegration::MonteCarlo,
            tensor_nodes: 48,
        }
    }
}

/// Environment, tiers, and numerical controls.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub tiers: Vec<TierParams>,
    /// Blockage rate κ, per meter, shared by all tiers.
    pub blockage_kappa: f64,
    /// Optional per-tier κ overrides; `None` falls back to the shared value.
    pub kappa_overrides: Vec<Option<f64>>,
    pub n_candidates: usize,
    pub mc: McControls,
    pub quad: QuadControls,
}

impl NetworkConfig {
    pub fn new(tiers: Vec<TierParams>, blockage_kappa: f64, n_candidates: usize) -> Self {
        let k = tiers.len();
        NetworkConfig {
            tiers,
            blockage_kappa,
            kappa_overrides: vec![None; k],
            n_candidates,
            mc: McControls::default(),
            quad: QuadControls::default(),
        }
    }

    pub fn k(&self) -> usize {
        self.tiers.len()
    }

    pub fn kappa_for(&self, tier: usize) -> f64 {
        self.kappa_overrides
            .get(tier)
            .copied()
            .flatten()
            .unwrap_or(self.blockage_kappa)
    }

    pub fn tier(&self, index: usize) -> Tier {
        Tier::new(self.tiers[index])
    }

    /// Every hard violation, not just the first.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.tiers.is_empty() {
            out.push("at least one tier is required".to_string());
        }
        if self.n_candidates < 1 {
            out.push("n_candidates must be >= 1".to_string());
        }
        if !(self.blockage_kappa >= 0.0) || !self.blockage_kappa.is_finite() {
            out.push(format!(
                "blockage_kappa must be finite and >= 0 (got {})",
                self.blockage_kappa
            ));
        }
        if self.kappa_overrides.len() > self.tiers.len() {
            out.push("more kappa overrides than tiers".to_string());
        }
        for (i, k) in self.kappa_overrides.iter().enumerate() {
            if let Some(v) = k {
                if !(*v >= 0.0) || !v.is_finite() {
                    out.push(format!("tier {i}: kappa override must be finite and >= 0"));
                }
            }
        }
        for (i, t) in self.tiers.iter().enumerate() {
            for p in t.problems() {
                out.push(format!("tier {i}: {p}"));
            }
        }
        if self.mc.realizations == 0 {
            out.push("montecarlo.realizations must be >= 1".to_string());
        }
        if !(self.mc.window_tail_ratio > 0.0 && self.mc.window_tail_ratio < 1.0) {
            out.push("montecarlo.window_tail_ratio must lie in (0, 1)".to_string());
        }
        if self.mc.debug_dump > MAX_DEBUG_DUMP {
            out.push(format!("montecarlo.debug_dump must be <= {MAX_DEBUG_DUMP}"));
        }
        if let Some(r) = self.mc.window_radius_m {
            if !(r > 0.0) || !r.is_finite() {
                out.push("montecarlo.window_radius_m must be > 0".to_string());
            }
        }
        let q = &self.quad;
        if q.hermite_nodes < 2 || q.hermite_nodes > 512 {
            out.push("quadrature.hermite_nodes must lie in [2, 512]".to_string());
        }
        if q.talbot_nodes < 4 {
            out.push("quadrature.talbot_nodes must be >= 4".to_string());
        }
        if q.euler_terms < 2 || q.euler_terms > 30 {
            out.push("quadrature.euler_terms must lie in [2, 30]".to_string());
        }
        if !(q.power_sigma_span > 0.0) || q.power_panels == 0 || q.power_panel_nodes == 0 {
            out.push("quadrature power-integral controls must be positive".to_string());
        }
        if !(q.tail_tolerance > 0.0) {
            out.push("quadrature.tail_tolerance must be > 0".to_string());
        }
        if q.distance_samples == 0 {
            out.push("quadrature.distance_samples must be >= 1".to_string());
        }
        if q.distance_integration == DistanceIntegration::Tensor && self.n_candidates > 2 {
            out.push("tensor distance integration supports n_candidates <= 2".to_string());
        }
        out
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (i, t) in self.tiers.iter().enumerate() {
            for w in t.warnings() {
                out.push(format!("tier {i}: {w}"));
            }
        }
        if self.mc.realizations < 1000 {
            out.push(format!(
                "montecarlo.realizations = {} is below 1000; intervals will be wide",
                self.mc.realizations
            ));
        }
        out
    }

    /// Checks the analytic engine adds on top of [`problems`](Self::problems).
    pub fn analytic_problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (i, t) in self.tiers.iter().enumerate() {
            if !(t.exponent_nlos > 2.0) {
                out.push(format!(
                    "tier {i}: exponent_nlos = {} must exceed 2 for the far-field interference integral to converge",
                    t.exponent_nlos
                ));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(p))
        }
    }
}

/// SIR thresholds of a sweep, stored in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    thresholds_db: Vec<f64>,
}

impl SweepSpec {
    pub fn new(thresholds_db: Vec<f64>) -> Result<Self> {
        if thresholds_db.is_empty() {
            return Err(Error::InvalidParameter("sweep must not be empty".into()));
        }
        if thresholds_db.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidParameter(
                "sweep thresholds must be finite".into(),
            ));
        }
        if thresholds_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "sweep thresholds must be strictly increasing".into(),
            ));
        }
        Ok(SweepSpec { thresholds_db })
    }

    /// Inclusive range `start..=stop` in steps of `step` dB.
    pub fn range(start_db: f64, stop_db: f64, step_db: f64) -> Result<Self> {
        if !(step_db > 0.0) {
            return Err(Error::InvalidParameter("sweep step must be > 0".into()));
        }
        let count = ((stop_db - start_db) / step_db + 1e-9).floor() as i64 + 1;
        if count < 1 {
            return Err(Error::InvalidParameter("sweep range is empty".into()));
        }
        Self::new((0..count).map(|i| start_db + step_db * i as f64).collect())
    }

    pub fn db(&self) -> &[f64] {
        &self.thresholds_db
    }

    pub fn linear(&self) -> Vec<f64> {
        self.thresholds_db
            .iter()
            .map(|&g| db_to_linear(g))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.thresholds_db.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds_db.is_empty()
    }
}
