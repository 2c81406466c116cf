//! CSV tables and the run manifest.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so equal
//! results produce byte-identical files. Tiers and candidate ranks are
//! numbered from 1. Nothing time-dependent goes into a CSV.

use std::io::{self, Write};

use crate::analytic::NetworkCoverage;
use crate::montecarlo::{CoverageResult, Proportion, Z95};

pub const ANALYTIC_TIER_HEADER: &str = "gamma_db,tier,m,term,term_se,pc_tier,pc_tier_se";
pub const NETWORK_HEADER: &str = "gamma_db,pc_network,pc_se";
pub const MC_TIER_HEADER: &str =
    "gamma_db,tier,m,term,term_se,pc_tier,pc_tier_se,pc_tier_ci_low,pc_tier_ci_high";
pub const MC_NETWORK_HEADER: &str = "gamma_db,pc_network,pc_se,ci_low,ci_high";
pub const ASSOC_HEADER: &str = "tier,m,frequency";
pub const COMPARISON_HEADER: &str =
    "gamma_db,scope,analytic,analytic_se,montecarlo,montecarlo_se,delta";

pub fn write_analytic_tiers<W: Write>(w: &mut W, net: &NetworkCoverage) -> io::Result<()> {
    writeln!(w, "{ANALYTIC_TIER_HEADER}")?;
    for (g, gamma) in net.gamma_db.iter().enumerate() {
        for t in &net.tiers {
            for m in 0..t.n() {
                writeln!(
                    w,
                    "{gamma},{},{},{},{},{},{}",
                    t.tier + 1,
                    m + 1,
                    t.terms[g][m],
                    t.term_se[g][m],
                    t.pc[g],
                    t.pc_se[g]
                )?;
            }
        }
    }
    Ok(())
}

pub fn write_analytic_network<W: Write>(w: &mut W, net: &NetworkCoverage) -> io::Result<()> {
    writeln!(w, "{NETWORK_HEADER}")?;
    for (g, gamma) in net.gamma_db.iter().enumerate() {
        writeln!(w, "{gamma},{},{}", net.pc[g], net.pc_se[g])?;
    }
    Ok(())
}

pub fn write_mc_tiers<W: Write>(w: &mut W, mc: &CoverageResult) -> io::Result<()> {
    writeln!(w, "{MC_TIER_HEADER}")?;
    for (g, gamma) in mc.gamma_db.iter().enumerate() {
        for t in &mc.per_tier {
            let pc = &t.covered[g];
            let (lo, hi) = pc.wilson(Z95);
            for (m, joint) in t.joint[g].iter().enumerate() {
                writeln!(
                    w,
                    "{gamma},{},{},{},{},{},{},{lo},{hi}",
                    t.tier + 1,
                    m + 1,
                    joint.estimate(),
                    joint.se(),
                    pc.estimate(),
                    pc.se()
                )?;
            }
        }
    }
    Ok(())
}

pub fn write_mc_network<W: Write>(w: &mut W, mc: &CoverageResult) -> io::Result<()> {
    writeln!(w, "{MC_NETWORK_HEADER}")?;
    for (g, gamma) in mc.gamma_db.iter().enumerate() {
        let p = &mc.network.covered[g];
        let (lo, hi) = p.wilson(Z95);
        writeln!(w, "{gamma},{},{},{lo},{hi}", p.estimate(), p.se())?;
    }
    Ok(())
}

/// Winner frequencies: `assoc[k][m]` for tier `k`, candidate `m`.
pub fn write_assoc<W: Write>(w: &mut W, assoc: &[&[Proportion]]) -> io::Result<()> {
    writeln!(w, "{ASSOC_HEADER}")?;
    for (k, row) in assoc.iter().enumerate() {
        for (m, p) in row.iter().enumerate() {
            writeln!(w, "{},{},{}", k + 1, m + 1, p.estimate())?;
        }
    }
    Ok(())
}

/// One analytic-vs-simulation pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub gamma_db: f64,
    /// `network` or `tier<k>`.
    pub scope: String,
    pub analytic: f64,
    pub analytic_se: f64,
    pub montecarlo: f64,
    pub montecarlo_se: f64,
}

impl ComparisonRow {
    pub fn delta(&self) -> f64 {
        self.analytic - self.montecarlo
    }
}

/// Pairs tier and network coverage of the two engines point by point.
pub fn comparison_rows(an: &NetworkCoverage, mc: &CoverageResult) -> Vec<ComparisonRow> {
    let mut rows = Vec::new();
    for (g, &gamma_db) in an.gamma_db.iter().enumerate() {
        for (t, e) in an.tiers.iter().zip(&mc.per_tier) {
            rows.push(ComparisonRow {
                gamma_db,
                scope: format!("tier{}", t.tier + 1),
                analytic: t.pc[g],
                analytic_se: t.pc_se[g],
                montecarlo: e.covered[g].estimate(),
                montecarlo_se: e.covered[g].se(),
            });
        }
        rows.push(ComparisonRow {
            gamma_db,
            scope: "network".into(),
            analytic: an.pc[g],
            analytic_se: an.pc_se[g],
            montecarlo: mc.network.covered[g].estimate(),
            montecarlo_se: mc.network.covered[g].se(),
        });
    }
    rows
}

/// Largest `|delta|` per scope, in first-appearance order. The location is
/// the row's key columns followed by its threshold.
pub fn max_deltas(rows: &[(String, ComparisonRow)]) -> Vec<(String, f64, String)> {
    let mut out: Vec<(String, f64, String)> = Vec::new();
    for (key, r) in rows {
        let d = r.delta().abs();
        let at = || format!("{key}{}", r.gamma_db);
        match out.iter_mut().find(|o| o.0 == r.scope) {
            Some(o) if d > o.1 => {
                o.1 = d;
                o.2 = at();
            }
            Some(_) => {}
            None => out.push((r.scope.clone(), d, at())),
        }
    }
    out
}

/// Writes rows with leading key columns, e.g. a density, before `gamma_db`.
pub fn write_comparison<W: Write>(
    w: &mut W,
    key_header: &str,
    rows: &[(String, ComparisonRow)],
) -> io::Result<()> {
    writeln!(w, "{key_header}{COMPARISON_HEADER}")?;
    for (key, r) in rows {
        writeln!(
            w,
            "{key}{},{},{},{},{},{},{}",
            r.gamma_db,
            r.scope,
            r.analytic,
            r.analytic_se,
            r.montecarlo,
            r.montecarlo_se,
            r.delta()
        )?;
    }
    Ok(())
}

pub fn write_summary<W: Write>(
    w: &mut W,
    key_header: &str,
    maxima: &[(String, f64, String)],
) -> io::Result<()> {
    let at: String = key_header
        .split(',')
        .filter(|h| !h.is_empty())
        .map(|h| format!("at_{h},"))
        .collect();
    writeln!(w, "scope,max_abs_delta,{at}at_gamma_db")?;
    for (scope, d, loc) in maxima {
        writeln!(w, "{scope},{d},{loc}")?;
    }
    Ok(())
}

/// Flat `key=value` record of a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    /// Sets `key`, replacing an earlier value. Line breaks are escaped so
    /// every entry stays on one line.
    pub fn set(&mut self, key: &str, value: impl ToString) {
        let v = value
            .to_string()
            .replace('\\', "\\\\")
            .replace('\n', "\\n")
            .replace('\r', "\\r");
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = v,
            None => self.entries.push((key.to_string(), v)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn write<W: Write>(&self, w: &mut W) -> io::Result<()> {
        for (k, v) in &self.entries {
            writeln!(w, "{k}={v}")?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Self {
        let mut m = Manifest::default();
        for line in text.lines() {
            if let Some((k, v)) = line.split_once('=') {
                m.entries.push((k.to_string(), v.to_string()));
            }
        }
        m
    }
}

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
