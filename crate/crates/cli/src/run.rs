use std::fs;
use std::path::{Path, PathBuf};

use endqt_core::scenarios::{run, ScenarioConfig, ScenarioReport};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::{RunArgs, EXIT_FAILURE, EXIT_USAGE};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub config_path: Option<PathBuf>,
    pub config: ScenarioConfig,
    pub config_sha256: String,
    pub tool_version: String,
    pub timestamp: String,
    pub output_dir: PathBuf,
}

pub fn cmd_run(args: &RunArgs) -> u8 {
    let config = match resolve_config(args) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_USAGE;
        }
    };
    let dir = args.out.join(format!("{}-seed{}", config.scenario.name(), config.seed));
    let manifest = RunManifest {
        config_path: args.config.clone(),
        config_sha256: sha256_hex(config.to_toml().as_bytes()),
        config,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: chrono::Utc::now().to_rfc3339(),
        output_dir: dir.clone(),
    };
    if let Err(e) = write_manifest(&dir, &manifest) {
        eprintln!("error: cannot write {}: {e}", dir.display());
        return EXIT_USAGE;
    }
    let report = match run(&manifest.config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    if let Err(e) = write_artifacts(&dir, &report) {
        eprintln!("error: cannot write {}: {e}", dir.display());
        return EXIT_USAGE;
    }
    print_summary(&report, &dir, args.json);
    if report.passed() {
        0
    } else {
        for f in report.failures() {
            eprintln!(
                "expectation failed: {} (expected {}, observed {}, tolerance {})",
                f.name, f.expected, f.observed, f.tolerance
            );
        }
        EXIT_FAILURE
    }
}

/// Config file (or an empty table), then `--set` overrides, then flags.
pub fn resolve_config(args: &RunArgs) -> Result<ScenarioConfig, String> {
    let text = match &args.config {
        Some(p) => fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?,
        None => String::new(),
    };
    let mut overrides = Vec::new();
    for kv in &args.overrides {
        let (k, v) = kv.split_once('=').ok_or_else(|| format!("override `{kv}` is not KEY=VALUE"))?;
        overrides.push((k.trim().to_string(), v.trim().to_string()));
    }
    let mut set = |k: &str, v: String| overrides.push((k.to_string(), v));
    if let Some(s) = args.scenario.as_ref().or(args.scenario_flag.as_ref()) {
        set("scenario", format!("\"{s}\""));
    }
    if let Some(seed) = args.seed {
        set("seed", seed.to_string());
    }
    if let Some(n) = args.trials {
        set("trials", n.to_string());
    }
    if args.isolated || args.open {
        set("lab_open", args.open.to_string());
    }
    if args.d3 || args.no_d3 {
        set("d3_present", args.d3.to_string());
    }
    if let Some(m) = &args.mode {
        set("mode", format!("\"{m}\""));
    }
    let prefix = args.config.as_ref().map(|p| format!("{}: ", p.display())).unwrap_or_default();
    ScenarioConfig::from_toml_with_overrides(&text, &overrides).map_err(|e| format!("{prefix}{e}"))
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn write_manifest(dir: &Path, manifest: &RunManifest) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(manifest)?)
}

/// `chain_t<t>.dot` file name for a snapshot time.
pub fn snapshot_file(t: f64) -> String {
    format!("chain_t{t}.dot")
}

fn write_artifacts(dir: &Path, report: &ScenarioReport) -> std::io::Result<()> {
    fs::write(dir.join("report.json"), report.to_json())?;
    fs::write(dir.join("trials.csv"), report.trials_csv())?;
    for s in &report.snapshots {
        fs::write(dir.join(snapshot_file(s.t)), &s.dot)?;
    }
    Ok(())
}

fn print_summary(report: &ScenarioReport, dir: &Path, as_json: bool) {
    if as_json {
        let summary = json!({
            "scenario": report.scenario,
            "mode": report.mode,
            "seed": report.seed,
            "trials": report.trials,
            "passed": report.passed(),
            "failures": report.failures().iter().map(|e| &e.name).collect::<Vec<_>>(),
            "outcomes": report.outcomes,
            "output_dir": dir,
        });
        println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
        return;
    }
    println!("{} ({}, seed {}, {} trials) -> {}", report.scenario, report.mode, report.seed, report.trials, dir.display());
    for o in &report.outcomes {
        println!("  {:<16} {:>8.5}  analytic {:.5} ± {:.5}", o.outcome, o.frequency, o.analytic, o.radius);
    }
    let failed = report.failures().len();
    println!("  {} of {} expectations pass", report.expectations.len() - failed, report.expectations.len());
}
