use std::f64::consts::FRAC_PI_2;

use clap::ValueEnum;
use endqt_core::scenarios::{run, tables_compatible, Mode, ScenarioConfig, ScenarioKind, ScenarioReport};
use serde::Serialize;

use crate::EXIT_FAILURE;

const TRIALS: u64 = 5000;
const SEED: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mutation {
    /// Flip the sign of the beam-splitter reflection coefficient.
    BsReflectionSign,
}

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub failures: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub passed: bool,
    pub trials: u64,
    pub seed: u64,
    pub mutation: Option<String>,
    pub checks: Vec<Check>,
}

fn variants(mutation: Option<Mutation>) -> Vec<(String, ScenarioConfig)> {
    let base = |k| ScenarioConfig::new(k).with_trials(TRIALS).with_seed(SEED);
    let mut out = Vec::new();
    for (d3, open) in [(false, true), (true, true), (true, false)] {
        let mut c = base(ScenarioKind::Interferometer);
        c.d3_present = d3;
        c.lab_open = open;
        if mutation == Some(Mutation::BsReflectionSign) {
            c.interferometer.reflection_phase = -FRAC_PI_2;
        }
        out.push((format!("interferometer{}{}", if d3 { "/d3" } else { "" }, if open { "" } else { "/isolated" }), c));
    }
    for open in [true, false] {
        let mut c = base(ScenarioKind::WignersFriend);
        c.lab_open = open;
        out.push((format!("wigners-friend{}", if open { "" } else { "/isolated" }), c));
    }
    for mode in Mode::ALL {
        out.push((format!("toy-sdc/{}", mode.name()), base(ScenarioKind::ToySdc).with_mode(mode)));
    }
    out.push(("epr-bell".into(), base(ScenarioKind::EprBell)));
    out
}

pub fn selftest(mutation: Option<Mutation>) -> Summary {
    let mut checks = Vec::new();
    let mut toy: Vec<ScenarioReport> = Vec::new();
    for (name, config) in variants(mutation) {
        match run(&config) {
            Ok(r) => {
                let mut failures: Vec<String> = r.failures().iter().map(|e| e.name.clone()).collect();
                if r.snapshots.iter().any(|s| !s.valid) {
                    failures.push("chain_snapshot_valid".into());
                }
                checks.push(Check { name, passed: failures.is_empty(), failures });
                if config.scenario == ScenarioKind::ToySdc {
                    toy.push(r);
                }
            }
            Err(e) => checks.push(Check { name, passed: false, failures: vec![e.to_string()] }),
        }
    }
    let mut incompatible = Vec::new();
    for i in 0..toy.len() {
        for j in i + 1..toy.len() {
            if !tables_compatible(&toy[i].outcomes, &toy[j].outcomes, toy[i].trials, toy[j].trials) {
                incompatible.push(format!("{} vs {}", toy[i].mode, toy[j].mode));
            }
        }
    }
    checks.push(Check { name: "mode-equivalence".into(), passed: incompatible.is_empty(), failures: incompatible });
    let replay = ScenarioConfig::new(ScenarioKind::EprBell).with_trials(500).with_seed(SEED);
    let same = match (run(&replay), run(&replay)) {
        (Ok(a), Ok(b)) => a.to_json() == b.to_json(),
        _ => false,
    };
    let failures = if same { vec![] } else { vec!["report_bytes_differ".into()] };
    checks.push(Check { name: "reproducibility".into(), passed: same, failures });
    Summary {
        passed: checks.iter().all(|c| c.passed),
        trials: TRIALS,
        seed: SEED,
        mutation: mutation.map(|m| format!("{m:?}")),
        checks,
    }
}

pub fn cmd_selftest(json: bool, mutation: Option<Mutation>) -> u8 {
    let summary = selftest(mutation);
    if json {
        println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    } else {
        for c in &summary.checks {
            if c.passed {
                println!("ok    {}", c.name);
            } else {
                println!("FAIL  {}: {}", c.name, c.failures.join(", "));
            }
        }
        let failed = summary.checks.iter().filter(|c| !c.passed).count();
        println!("{} of {} checks pass", summary.checks.len() - failed, summary.checks.len());
    }
    if summary.passed {
        0
    } else {
        EXIT_FAILURE
    }
}
