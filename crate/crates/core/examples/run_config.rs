//! Loads a configuration file, reports its validation result, and runs the
//! sweep it names through the same path as the command-line tool.
//!
//! `cargo run --release --example run_config -- configs/fig2.cfg`

use hetnet_coverage::cli::{run, Args, RunSpec};
use std::path::PathBuf;

fn main() {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/fig2.cfg"));
    let out = std::env::temp_dir().join("hetnet-coverage-example");
    let args = Args {
        config: path,
        mode: Some("analytic".into()),
        sweep: Some("gamma:-10,0,10".into()),
        out: Some(out.clone()),
        seed: None,
        realizations: None,
        quiet: true,
    };
    let spec = match RunSpec::resolve(&args) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("invalid configuration: {e}");
            std::process::exit(2);
        }
    };
    for w in &spec.loaded.warnings {
        println!("warning: {w}");
    }
    println!("tiers: {}", spec.loaded.tier_names.join(", "));
    match run(&spec) {
        Ok(outcome) => {
            for a in outcome.artifacts {
                println!("wrote {}", a.display());
            }
        }
        Err(e) => eprintln!("run failed: {e}"),
    }
}
