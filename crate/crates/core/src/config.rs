//! TOML configuration files.
//!
//! ```toml
//! schema_version = 1
//! n_candidates = 5
//! blockage_kappa_per_m = 0.008
//!
//! [run]                      # optional defaults, overridable on the command line
//! mode = "both"              # analytic | montecarlo | both
//! sweep = "gamma:-20:40:2"   # see SweepAxis::parse
//!
//! [montecarlo]               # McControls fields
//! [quadrature]               # QuadControls fields
//!
//! [[tier]]
//! name = "macro"
//! density_per_km2 = 2.0      # or density_per_m2
//! tx_power_dbm = 47.0
//! intercept_nlos_db = 2.7
//! intercept_los_db = 30.8
//! exponent_nlos = 4.28
//! exponent_los = 2.42
//! shadow_sigma_nlos_db = 8.0
//! shadow_sigma_los_db = 4.0
//! blockage_kappa_per_m = 0.01   # optional per-tier override
//! ```
//!
//! Loading reports every problem found, not only the first.

use serde::Deserialize;
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{
    per_km2_to_per_m2, McControls, NetworkConfig, QuadControls, SweepSpec, TierParams,
};

/// The only schema this build reads.
pub const SCHEMA_VERSION: u32 = 1;

/// Which engines a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Analytic,
    MonteCarlo,
    Both,
}

impl Mode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(Mode::Analytic),
            "montecarlo" => Ok(Mode::MonteCarlo),
            "both" => Ok(Mode::Both),
            other => Err(Error::Config(vec![format!(
                "mode must be analytic, montecarlo or both (got {other:?})"
            )])),
        }
    }

    pub fn analytic(self) -> bool {
        matches!(self, Mode::Analytic | Mode::Both)
    }

    pub fn montecarlo(self) -> bool {
        matches!(self, Mode::MonteCarlo | Mode::Both)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Analytic => "analytic",
            Mode::MonteCarlo => "montecarlo",
            Mode::Both => "both",
        })
    }
}

/// What a run varies.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    Gamma(SweepSpec),
    /// Density of one tier (0-based index) at a fixed threshold.
    TierDensity {
        tier: usize,
        densities_per_km2: Vec<f64>,
        gamma_db: f64,
    },
}

impl SweepAxis {
    /// Parses the textual sweep forms:
    ///
    /// * `gamma:<start>:<stop>:<step>` inclusive range in dB
    /// * `gamma:<g1>,<g2>,...` explicit list in dB
    /// * `density:<tier>:<d1>,<d2>,...[@<gamma_db>]` with a 1-based tier,
    ///   densities in BS/km², threshold defaulting to 0 dB
    pub fn parse(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::Config(vec![format!("sweep {s:?}: {why}")]);
        let (axis, rest) = s
            .split_once(':')
            .ok_or_else(|| bad("expected <axis>:<values>"))?;
        let num = |t: &str| -> Result<f64> {
            t.trim()
                .parse::<f64>()
                .map_err(|_| bad(&format!("{t:?} is not a number")))
        };
        let list = |t: &str| -> Result<Vec<f64>> {
            if t.trim().is_empty() {
                return Err(bad("value list is empty"));
            }
            t.split(',').map(num).collect()
        };
        let lift = |e: Error| match e {
            Error::InvalidParameter(m) => bad(&m),
            other => other,
        };
        match axis {
            "gamma" => {
                let parts: Vec<&str> = rest.split(':').collect();
                let spec = match parts.as_slice() {
                    [a, b, c] => SweepSpec::range(num(a)?, num(b)?, num(c)?),
                    [values] => SweepSpec::new(list(values)?),
                    _ => return Err(bad("expected gamma:<start>:<stop>:<step> or gamma:<list>")),
                };
                Ok(SweepAxis::Gamma(spec.map_err(lift)?))
            }
            "density" => {
                let (tier, values) = rest
                    .split_once(':')
                    .ok_or_else(|| bad("expected density:<tier>:<list>"))?;
                let tier: usize = tier
                    .trim()
                    .parse()
                    .map_err(|_| bad("tier must be a positive integer"))?;
                if tier == 0 {
                    return Err(bad("tiers are numbered from 1"));
                }
                let (values, gamma_db) = match values.split_once('@') {
                    Some((v, g)) => (v, num(g)?),
                    None => (values, 0.0),
                };
                let densities_per_km2 = list(values)?;
                if densities_per_km2
                    .iter()
                    .any(|d| !(*d > 0.0) || !d.is_finite())
                {
                    return Err(bad("densities must be finite and > 0"));
                }
                if densities_per_km2.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(bad("densities must be strictly increasing"));
                }
                if !gamma_db.is_finite() {
                    return Err(bad("threshold must be finite"));
                }
                Ok(SweepAxis::TierDensity {
                    tier: tier - 1,
                    densities_per_km2,
                    gamma_db,
                })
            }
            other => Err(bad(&format!(
                "unknown axis {other:?}; use gamma or density"
            ))),
        }
    }

    /// Cross-field check against a configuration.
    pub fn problems(&self, config: &NetworkConfig) -> Vec<String> {
        match self {
            SweepAxis::TierDensity { tier, .. } if *tier >= config.k() => vec![format!(
                "density sweep names tier {} but the configuration has {} tier(s)",
                tier + 1,
                config.k()
            )],
            _ => Vec::new(),
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        match self {
            SweepAxis::Gamma(s) => write!(f, "gamma:{}", join(s.db())),
            SweepAxis::TierDensity {
                tier,
                densities_per_km2,
                gamma_db,
            } => write!(
                f,
                "density:{}:{}@{}",
                tier + 1,
                join(densities_per_km2),
                gamma_db
            ),
        }
    }
}

/// Run defaults stored in the file; command-line flags take precedence.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunDefaults {
    pub mode: Option<Mode>,
    pub sweep: Option<SweepAxis>,
    pub out: Option<String>,
}

/// A configuration that passed every schema and cross-field check.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub network: NetworkConfig,
    pub tier_names: Vec<String>,
    pub run: RunDefaults,
    pub warnings: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    schema_version: Option<i64>,
    n_candidates: Option<i64>,
    blockage_kappa_per_m: Option<f64>,
    #[serde(default)]
    run: RawRun,
    #[serde(default)]
    montecarlo: McControls,
    #[serde(default)]
    quadrature: QuadControls,
    #[serde(default, rename = "tier")]
    tiers: Vec<RawTier>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawRun {
    mode: Option<String>,
    sweep: Option<String>,
    out: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTier {
    name: Option<String>,
    density_per_km2: Option<f64>,
    density_per_m2: Option<f64>,
    tx_power_dbm: Option<f64>,
    intercept_nlos_db: Option<f64>,
    intercept_los_db: Option<f64>,
    exponent_nlos: Option<f64>,
    exponent_los: Option<f64>,
    shadow_sigma_nlos_db: Option<f64>,
    shadow_sigma_los_db: Option<f64>,
    blockage_kappa_per_m: Option<f64>,
}

fn required<T: Copy>(v: Option<T>, what: &str, problems: &mut Vec<String>) -> Option<T> {
    if v.is_none() {
        problems.push(format!("{what} is required"));
    }
    v
}

impl RawTier {
    fn build(&self, label: &str, problems: &mut Vec<String>) -> Option<TierParams> {
        let before = problems.len();
        let density = match (self.density_per_km2, self.density_per_m2) {
            (Some(d), None) => Some(per_km2_to_per_m2(d)),
            (None, Some(d)) => Some(d),
            (Some(_), Some(_)) => {
                problems.push(format!(
                    "{label}: give density_per_km2 or density_per_m2, not both"
                ));
                None
            }
            (None, None) => {
                problems.push(format!(
                    "{label}: density_per_km2 or density_per_m2 is required"
                ));
                None
            }
        };
        let mut field =
            |v: Option<f64>, name: &str| required(v, &format!("{label}: {name}"), problems);
        let tx_power_dbm = field(self.tx_power_dbm, "tx_power_dbm");
        let intercept_nlos_db = field(self.intercept_nlos_db, "intercept_nlos_db");
        let intercept_los_db = field(self.intercept_los_db, "intercept_los_db");
        let exponent_nlos = field(self.exponent_nlos, "exponent_nlos");
        let exponent_los = field(self.exponent_los, "exponent_los");
        let shadow_sigma_nlos_db = field(self.shadow_sigma_nlos_db, "shadow_sigma_nlos_db");
        let shadow_sigma_los_db = field(self.shadow_sigma_los_db, "shadow_sigma_los_db");
        if problems.len() > before {
            return None;
        }
        Some(TierParams {
            density: density?,
            tx_power_dbm: tx_power_dbm?,
            intercept_nlos_db: intercept_nlos_db?,
            intercept_los_db: intercept_los_db?,
            exponent_nlos: exponent_nlos?,
            exponent_los: exponent_los?,
            shadow_sigma_nlos_db: shadow_sigma_nlos_db?,
            shadow_sigma_los_db: shadow_sigma_los_db?,
        })
    }
}

/// Parses and validates configuration text.
pub fn parse_config(text: &str) -> Result<LoadedConfig> {
    let raw: RawFile = toml::from_str(text)
        .map_err(|e| Error::Config(vec![e.to_string().trim_end().to_string()]))?;
    let mut problems = Vec::new();

    match raw.schema_version {
        None => problems.push("schema_version is required".to_string()),
        Some(v) if v != SCHEMA_VERSION as i64 => problems.push(format!(
            "schema_version {v} is not supported (expected {SCHEMA_VERSION})"
        )),
        _ => {}
    }
    let n = required(raw.n_candidates, "n_candidates", &mut problems);
    if let Some(n) = n {
        if n < 1 {
            problems.push(format!("n_candidates must be >= 1 (got {n})"));
        }
    }
    let kappa = required(
        raw.blockage_kappa_per_m,
        "blockage_kappa_per_m",
        &mut problems,
    );
    if raw.tiers.is_empty() {
        problems.push("at least one [[tier]] block is required".to_string());
    }

    let mut tiers = Vec::new();
    let mut names = Vec::new();
    let mut overrides = Vec::new();
    for (i, t) in raw.tiers.iter().enumerate() {
        let label = format!("tier {}", i + 1);
        names.push(t.name.clone().unwrap_or_else(|| label.clone()));
        overrides.push(t.blockage_kappa_per_m);
        if let Some(p) = t.build(&label, &mut problems) {
            tiers.push(p);
        }
    }

    let mut run = RunDefaults {
        out: raw.run.out.clone(),
        ..Default::default()
    };
    let absorb = |r: Result<()>, problems: &mut Vec<String>| {
        if let Err(e) = r {
            match e {
                Error::Config(p) => problems.extend(p),
                other => problems.push(other.to_string()),
            }
        }
    };
    if let Some(m) = &raw.run.mode {
        absorb(Mode::parse(m).map(|m| run.mode = Some(m)), &mut problems);
    }
    if let Some(s) = &raw.run.sweep {
        absorb(
            SweepAxis::parse(s).map(|s| run.sweep = Some(s)),
            &mut problems,
        );
    }

    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    let mut network = NetworkConfig::new(tiers, kappa.unwrap_or(0.0), n.unwrap_or(1) as usize);
    network.kappa_overrides = overrides;
    network.mc = raw.montecarlo;
    network.quad = raw.quadrature;
    // Negative model values are caught here with their tier labels.
    let mut problems: Vec<String> = network
        .problems()
        .into_iter()
        .map(|p| relabel_tiers(&p))
        .collect();
    if let Some(s) = &run.sweep {
        problems.extend(s.problems(&network));
    }
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    let warnings = network
        .warnings()
        .into_iter()
        .map(|w| relabel_tiers(&w))
        .collect();
    Ok(LoadedConfig {
        network,
        tier_names: names,
        run,
        warnings,
    })
}

/// Model messages number tiers from 0; files number them from 1.
fn relabel_tiers(msg: &str) -> String {
    match msg.strip_prefix("tier ").and_then(|r| r.split_once(':')) {
        Some((idx, rest)) => match idx.parse::<usize>() {
            Ok(i) => format!("tier {}:{rest}", i + 1),
            Err(_) => msg.to_string(),
        },
        None => msg.to_string(),
    }
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<LoadedConfig> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

/// Mode-dependent checks: the analytic engine needs a convergent far field.
pub fn mode_problems(config: &NetworkConfig, mode: Mode) -> Vec<String> {
    if mode.analytic() {
        config
            .analytic_problems()
            .into_iter()
            .map(|p| relabel_tiers(&p))
            .collect()
    } else {
        Vec::new()
    }
}
