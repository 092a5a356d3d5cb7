use std::fs;
use std::path::Path;

use endqt_core::scenarios::ScenarioReport;

use crate::{EXIT_FAILURE, EXIT_USAGE};

pub fn cmd_export_chain(dir: &Path, t: f64) -> u8 {
    let path = dir.join("report.json");
    let report: ScenarioReport = match fs::read_to_string(&path).map_err(|e| e.to_string()).and_then(|s| {
        serde_json::from_str(&s).map_err(|e| e.to_string())
    }) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return EXIT_USAGE;
        }
    };
    match report.snapshots.iter().find(|s| (s.t - t).abs() < 1e-9) {
        Some(s) => {
            print!("{}", s.dot);
            0
        }
        None => {
            let times: Vec<String> = report.snapshots.iter().map(|s| s.t.to_string()).collect();
            eprintln!("error: no chain snapshot at t = {t} (available: {})", times.join(", "));
            EXIT_FAILURE
        }
    }
}
