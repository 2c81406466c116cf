//! Batch front-end: load a configuration, run the engines over a sweep,
//! write CSV tables and a manifest.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 I/O.

use clap::Parser;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::analytic::{network_coverage, NetworkCoverage};
use crate::config::{load_config, mode_problems, LoadedConfig, Mode, SweepAxis};
use crate::error::{Error, Result};
use crate::model::{per_km2_to_per_m2, NetworkConfig, SweepSpec};
use crate::montecarlo::{self, estimate_coverage, CoverageResult};
use crate::report::{self, ComparisonRow, Manifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_CONVERGENCE: i32 = 3;
pub const EXIT_IO: i32 = 4;

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const CONFIG_COPY: &str = "config.toml";

/// Command-line flags.
#[derive(Debug, Clone, Parser)]
#[command(
    name = "hetnet-coverage",
    version,
    about = "Coverage probability of K-tier networks with LOS/NLOS links"
)]
pub struct Args {
    /// Configuration file (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// analytic, montecarlo or both; overrides [run].mode.
    #[arg(long)]
    pub mode: Option<String>,
    /// gamma:<start>:<stop>:<step>, gamma:<list>, or density:<tier>:<list>[@<gamma_db>].
    #[arg(long, allow_hyphen_values = true)]
    pub sweep: Option<String>,
    /// Output directory; overrides [run].out.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Simulation seed; overrides montecarlo.seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Simulation realizations; overrides montecarlo.realizations.
    #[arg(long)]
    pub realizations: Option<usize>,
    /// Print nothing on success.
    #[arg(long)]
    pub quiet: bool,
}

/// A fully resolved run.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub config_path: PathBuf,
    /// Verbatim configuration text, hashed and copied next to the results.
    pub config_text: String,
    pub loaded: LoadedConfig,
    pub mode: Mode,
    pub sweep: SweepAxis,
    pub out_dir: PathBuf,
    pub quiet: bool,
}

/// Parses and validates a configuration file.
pub fn validate_config(path: &Path) -> Result<LoadedConfig> {
    load_config(path)
}

impl RunSpec {
    /// Merges flags over file defaults and runs every cross-field check.
    pub fn resolve(args: &Args) -> Result<RunSpec> {
        let config_text = fs::read_to_string(&args.config)
            .map_err(|e| Error::Io(format!("{}: {e}", args.config.display())))?;
        let mut loaded = crate::config::parse_config(&config_text)?;
        let mut problems = Vec::new();
        let mode = match &args.mode {
            Some(m) => Mode::parse(m),
            None => Ok(loaded.run.mode.unwrap_or(Mode::Both)),
        };
        let sweep = match &args.sweep {
            Some(s) => SweepAxis::parse(s).map(Some),
            None => Ok(loaded.run.sweep.clone()),
        };
        let mut collect = |e: Error| match e {
            Error::Config(p) => problems.extend(p),
            other => problems.push(other.to_string()),
        };
        let mode = mode.map_err(&mut collect).ok();
        let sweep = match sweep {
            Ok(Some(s)) => Some(s),
            Ok(None) => {
                collect(Error::Config(vec![
                    "no sweep given: pass --sweep or set [run].sweep".into(),
                ]));
                None
            }
            Err(e) => {
                collect(e);
                None
            }
        };
        if let Some(seed) = args.seed {
            loaded.network.mc.seed = seed;
        }
        if let Some(r) = args.realizations {
            loaded.network.mc.realizations = r;
        }
        problems.extend(loaded.network.problems());
        if let Some(m) = mode {
            problems.extend(mode_problems(&loaded.network, m));
        }
        if let Some(s) = &sweep {
            problems.extend(s.problems(&loaded.network));
        }
        if !problems.is_empty() {
            problems.dedup();
            return Err(Error::Config(problems));
        }
        let out_dir = args
            .out
            .clone()
            .or_else(|| loaded.run.out.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));
        Ok(RunSpec {
            config_path: args.config.clone(),
            config_text,
            loaded,
            mode: mode.expect("checked above"),
            sweep: sweep.expect("checked above"),
            out_dir,
            quiet: args.quiet,
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.loaded.network
    }
}

/// Files written and the comparison summary, if both engines ran.
#[derive(Debug, Clone, Default)]
pub struct RunOutcome {
    pub artifacts: Vec<PathBuf>,
    pub summary: Option<String>,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) => EXIT_VALIDATION,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_CONVERGENCE,
    }
}

pub fn error_kind(e: &Error) -> &'static str {
    match exit_code(e) {
        EXIT_VALIDATION => "validation",
        EXIT_IO => "io",
        _ => "convergence",
    }
}

struct Writer<'a> {
    dir: &'a Path,
    artifacts: Vec<PathBuf>,
}

impl Writer<'_> {
    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        self.artifacts.push(path);
        Ok(())
    }
}

fn table(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to memory cannot fail");
    buf
}

/// Stacks per-point tables, prefixing each data line with its key column.
#[derive(Default)]
struct Stacked {
    out: Vec<u8>,
}

impl Stacked {
    fn push(&mut self, key_header: &str, key: &str, tbl: &[u8]) {
        let text = std::str::from_utf8(tbl).expect("tables are ASCII");
        for (i, line) in text.lines().enumerate() {
            if i == 0 {
                if self.out.is_empty() {
                    self.out
                        .extend_from_slice(format!("{key_header},{line}\n").as_bytes());
                }
            } else {
                self.out
                    .extend_from_slice(format!("{key},{line}\n").as_bytes());
            }
        }
    }
}

/// Results of one point of the outer sweep.
struct Point {
    key: Option<String>,
    analytic: Option<NetworkCoverage>,
    mc: Option<CoverageResult>,
}

fn evaluate(
    config: &NetworkConfig,
    sweep: &SweepSpec,
    mode: Mode,
    manifest: &mut Manifest,
    tag: &str,
) -> Result<Point> {
    let analytic = if mode.analytic() {
        let a = network_coverage(config, sweep)?;
        let excursion = a
            .tiers
            .iter()
            .map(|t| t.diagnostics.max_excursion)
            .fold(0.0, f64::max);
        manifest.set(
            &format!("analytic{tag}_distance_points"),
            a.tiers[0].samples,
        );
        manifest.set(&format!("analytic{tag}_max_excursion"), excursion);
        Some(a)
    } else {
        None
    };
    let mc = if mode.montecarlo() {
        let m = estimate_coverage(config, sweep)?;
        manifest.set(&format!("montecarlo{tag}_realizations"), m.realizations);
        manifest.set(
            &format!("montecarlo{tag}_argmax_mismatches"),
            m.argmax_mismatches,
        );
        manifest.set(&format!("montecarlo{tag}_ties"), m.ties);
        manifest.set(&format!("montecarlo{tag}_resamples"), m.resamples);
        let radii: Vec<String> = m.window_radii.iter().map(|r| r.to_string()).collect();
        manifest.set(&format!("montecarlo{tag}_window_radii_m"), radii.join(","));
        Some(m)
    } else {
        None
    };
    Ok(Point {
        key: None,
        analytic,
        mc,
    })
}

fn emit(points: &[Point], key_header: Option<&str>, w: &mut Writer<'_>) -> Result<Option<String>> {
    type Render<T> = fn(&mut Vec<u8>, &T) -> std::io::Result<()>;
    fn stack<T>(
        points: &[Point],
        key_header: Option<&str>,
        get: impl Fn(&Point) -> Option<&T>,
        f: Render<T>,
    ) -> Option<Vec<u8>> {
        let mut s = Stacked::default();
        let mut any = false;
        for p in points {
            let Some(v) = get(p) else { continue };
            any = true;
            let tbl = table(|b| f(b, v));
            match (key_header, &p.key) {
                (Some(h), Some(k)) => s.push(h, k, &tbl),
                _ => s.out.extend_from_slice(&tbl),
            }
        }
        any.then_some(s.out)
    }
    let outputs: [(&str, Option<Vec<u8>>); 5] = [
        (
            "analytic_tier.csv",
            stack(
                points,
                key_header,
                |p| p.analytic.as_ref(),
                report::write_analytic_tiers,
            ),
        ),
        (
            "analytic_network.csv",
            stack(
                points,
                key_header,
                |p| p.analytic.as_ref(),
                report::write_analytic_network,
            ),
        ),
        (
            "mc_tier.csv",
            stack(
                points,
                key_header,
                |p| p.mc.as_ref(),
                report::write_mc_tiers,
            ),
        ),
        (
            "mc_network.csv",
            stack(
                points,
                key_header,
                |p| p.mc.as_ref(),
                report::write_mc_network,
            ),
        ),
        (
            "mc_assoc.csv",
            stack(
                points,
                key_header,
                |p| p.mc.as_ref(),
                |b, m| {
                    let rows: Vec<&[_]> = m.per_tier.iter().map(|t| t.assoc.as_slice()).collect();
                    report::write_assoc(b, &rows)
                },
            ),
        ),
    ];
    for (name, bytes) in outputs {
        if let Some(b) = bytes {
            w.put(name, &b)?;
        }
    }
    if let Some(b) = stack(
        points,
        key_header,
        |p| p.mc.as_ref(),
        |b, m| {
            let rows: Vec<&[_]> = m.network.assoc.iter().map(|t| t.as_slice()).collect();
            report::write_assoc(b, &rows)
        },
    ) {
        w.put("mc_network_assoc.csv", &b)?;
    }

    let mut keyed: Vec<(String, ComparisonRow)> = Vec::new();
    for p in points {
        if let (Some(a), Some(m)) = (&p.analytic, &p.mc) {
            let prefix = p.key.as_ref().map(|k| format!("{k},")).unwrap_or_default();
            keyed.extend(
                report::comparison_rows(a, m)
                    .into_iter()
                    .map(|r| (prefix.clone(), r)),
            );
        }
    }
    if keyed.is_empty() {
        return Ok(None);
    }
    let head = key_header.map(|h| format!("{h},")).unwrap_or_default();
    w.put(
        "comparison.csv",
        &table(|b| report::write_comparison(b, &head, &keyed)),
    )?;
    let summary = table(|b| report::write_summary(b, &head, &report::max_deltas(&keyed)));
    w.put("comparison_summary.csv", &summary)?;
    Ok(Some(String::from_utf8(summary).expect("ASCII")))
}

fn body(spec: &RunSpec, manifest: &mut Manifest, w: &mut Writer<'_>) -> Result<Option<String>> {
    let config = spec.config();
    if spec.mode.montecarlo() && config.mc.debug_dump > 0 {
        let dump = montecarlo::debug_realizations(config, config.mc.debug_dump)?;
        w.put(
            "mc_debug.csv",
            &table(|b| montecarlo::write_debug_csv(b, &dump)),
        )?;
    }
    match &spec.sweep {
        SweepAxis::Gamma(sweep) => {
            let p = evaluate(config, sweep, spec.mode, manifest, "")?;
            emit(&[p], None, w)
        }
        SweepAxis::TierDensity {
            tier,
            densities_per_km2,
            gamma_db,
        } => {
            let sweep = SweepSpec::new(vec![*gamma_db])?;
            let mut points = Vec::new();
            for (i, &d) in densities_per_km2.iter().enumerate() {
                let mut c = config.clone();
                c.tiers[*tier].density = per_km2_to_per_m2(d);
                let mut p = evaluate(&c, &sweep, spec.mode, manifest, &format!("_point{}", i + 1))?;
                p.key = Some(d.to_string());
                points.push(p);
            }
            emit(&points, Some("density_per_km2"), w)
        }
    }
}

/// Runs the engines and writes every artifact. On failure after the output
/// directory exists, a manifest with `status=failed` is still written,
/// together with whatever tables were already complete.
pub fn run(spec: &RunSpec) -> Result<RunOutcome> {
    let start = Instant::now();
    fs::create_dir_all(&spec.out_dir)
        .map_err(|e| Error::Io(format!("{}: {e}", spec.out_dir.display())))?;
    let mut w = Writer {
        dir: &spec.out_dir,
        artifacts: Vec::new(),
    };
    let c = spec.config();
    let mut manifest = Manifest::default();
    manifest.set("status", "running");
    manifest.set("version", env!("CARGO_PKG_VERSION"));
    manifest.set(
        "platform",
        format!("{}-{}", std::env::consts::ARCH, std::env::consts::OS),
    );
    manifest.set("config_path", spec.config_path.display());
    manifest.set(
        "config_sha256",
        report::sha256_hex(spec.config_text.as_bytes()),
    );
    manifest.set("mode", spec.mode);
    manifest.set("sweep", &spec.sweep);
    manifest.set("seed", c.mc.seed);
    manifest.set("realizations", c.mc.realizations);
    manifest.set("distance_seed", c.quad.distance_seed);
    manifest.set("distance_samples", c.quad.distance_samples);
    manifest.set(
        "rerun_args",
        format!(
            "--config {} --mode {} --sweep {} --seed {} --realizations {}",
            spec.out_dir.join(CONFIG_COPY).display(),
            spec.mode,
            spec.sweep,
            c.mc.seed,
            c.mc.realizations
        ),
    );
    for (i, warning) in spec.loaded.warnings.iter().enumerate() {
        manifest.set(&format!("config_warning_{}", i + 1), warning);
    }
    let result = w
        .put(CONFIG_COPY, spec.config_text.as_bytes())
        .and_then(|_| body(spec, &mut manifest, &mut w));
    manifest.set(
        "wall_time_s",
        format!("{:.3}", start.elapsed().as_secs_f64()),
    );
    let names: Vec<String> = w
        .artifacts
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    manifest.set("artifacts", names.join(","));
    let summary = match result {
        Ok(s) => {
            manifest.set("status", "ok");
            s
        }
        Err(e) => {
            manifest.set("status", "failed");
            manifest.set("error_kind", error_kind(&e));
            manifest.set("exit_code", exit_code(&e));
            manifest.set("error_message", &e);
            let _ = write_manifest(&spec.out_dir, &manifest);
            return Err(e);
        }
    };
    write_manifest(&spec.out_dir, &manifest)?;
    w.artifacts.push(spec.out_dir.join(MANIFEST_FILE));
    Ok(RunOutcome {
        artifacts: w.artifacts,
        summary,
    })
}

fn write_manifest(dir: &Path, m: &Manifest) -> Result<()> {
    let path = dir.join(MANIFEST_FILE);
    let mut f =
        fs::File::create(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    m.write(&mut f)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// One-line machine-readable error record for stderr.
pub fn error_record(e: &Error) -> String {
    let msg = e.to_string().replace('\n', "; ");
    format!(
        "status=failed error_kind={} exit_code={} error_message={msg}",
        error_kind(e),
        exit_code(e)
    )
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn main_with(args: &Args) -> i32 {
    let spec = match RunSpec::resolve(args) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{}", error_record(&e));
            // The output directory is known even when the config is not.
            if let Some(dir) = &args.out {
                if fs::create_dir_all(dir).is_ok() {
                    let mut m = Manifest::default();
                    m.set("status", "failed");
                    m.set("config_path", args.config.display());
                    m.set("error_kind", error_kind(&e));
                    m.set("exit_code", exit_code(&e));
                    m.set("error_message", &e);
                    let _ = write_manifest(dir, &m);
                }
            }
            return exit_code(&e);
        }
    };
    if !spec.quiet {
        for warning in &spec.loaded.warnings {
            eprintln!("warning: {warning}");
        }
    }
    match run(&spec) {
        Ok(outcome) => {
            if !spec.quiet {
                let mut out = std::io::stdout().lock();
                for a in &outcome.artifacts {
                    let _ = writeln!(out, "wrote {}", a.display());
                }
                if let Some(s) = &outcome.summary {
                    let _ = write!(out, "comparison_summary.csv:\n{s}");
                }
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("{}", error_record(&e));
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config(vec![])), 2);
        assert_eq!(exit_code(&Error::InvalidParameter("x".into())), 2);
        assert_eq!(exit_code(&Error::Io("x".into())), 4);
        assert_eq!(exit_code(&Error::InversionUnstable("x".into())), 3);
        assert_eq!(exit_code(&Error::QuadratureNotConverged("x".into())), 3);
    }

    #[test]
    fn record_is_one_line() {
        let r = error_record(&Error::Config(vec!["a".into(), "b".into()]));
        assert!(!r.contains('\n'));
        assert!(r.starts_with("status=failed error_kind=validation exit_code=2"));
    }

    #[test]
    fn flags_parse() {
        let a = Args::try_parse_from([
            "hetnet-coverage",
            "--config",
            "c.toml",
            "--sweep",
            "gamma:-20:40:2",
            "--seed",
            "9",
            "--quiet",
        ])
        .unwrap();
        assert_eq!(a.sweep.as_deref(), Some("gamma:-20:40:2"));
        assert_eq!(a.seed, Some(9));
        assert!(a.quiet);
    }
}
