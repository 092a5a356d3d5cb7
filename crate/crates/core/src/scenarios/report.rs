use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use crate::chains::ChainGraph;
use crate::error::Result;

/// Width of the binomial acceptance band, in standard errors.
pub const SIGMA_BAND: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub outcome: String,
    pub determinate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeFrequency {
    pub outcome: String,
    pub count: u64,
    pub frequency: f64,
    pub analytic: f64,
    /// `3 √(p(1−p)/n)` around the analytic probability.
    pub radius: f64,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub name: String,
    pub expected: f64,
    pub observed: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Expectation {
    /// `|observed − expected| ≤ tolerance`.
    pub fn close(name: &str, expected: f64, observed: f64, tolerance: f64) -> Self {
        let pass = (observed - expected).abs() <= tolerance;
        Self { name: name.to_string(), expected, observed, tolerance, pass }
    }

    /// `observed ≥ bound`.
    pub fn at_least(name: &str, bound: f64, observed: f64) -> Self {
        Self { name: name.to_string(), expected: bound, observed, tolerance: 0.0, pass: observed >= bound }
    }

    /// `observed ≤ bound`.
    pub fn at_most(name: &str, bound: f64, observed: f64) -> Self {
        Self { name: name.to_string(), expected: bound, observed, tolerance: 0.0, pass: observed <= bound }
    }

    pub fn holds(name: &str, ok: bool) -> Self {
        Self::close(name, 1.0, if ok { 1.0 } else { 0.0 }, 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSnapshot {
    pub t: f64,
    pub valid: bool,
    pub dot: String,
}

impl ChainSnapshot {
    pub fn of(graph: &ChainGraph, t: f64) -> Self {
        Self { t, valid: graph.validate_at(t).is_ok(), dot: graph.to_dot(t) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub mode: String,
    pub seed: u64,
    pub trials: u64,
    pub config: ScenarioConfig,
    pub outcomes: Vec<OutcomeFrequency>,
    pub expectations: Vec<Expectation>,
    pub snapshots: Vec<ChainSnapshot>,
    pub details: serde_json::Value,
    pub records: Vec<TrialRecord>,
}

impl ScenarioReport {
    pub fn new(config: &ScenarioConfig) -> Self {
        Self {
            scenario: config.scenario.name().to_string(),
            mode: config.mode.name().to_string(),
            seed: config.seed,
            trials: config.trials,
            config: config.clone(),
            outcomes: Vec::new(),
            expectations: Vec::new(),
            snapshots: Vec::new(),
            details: serde_json::Value::Null,
            records: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.expectations.iter().all(|e| e.pass)
    }

    pub fn failures(&self) -> Vec<&Expectation> {
        self.expectations.iter().filter(|e| !e.pass).collect()
    }

    pub fn expectation(&self, name: &str) -> Option<&Expectation> {
        self.expectations.iter().find(|e| e.name == name)
    }

    pub fn frequency(&self, outcome: &str) -> Option<&OutcomeFrequency> {
        self.outcomes.iter().find(|o| o.outcome == outcome)
    }

    pub fn determinate_count(&self) -> usize {
        self.records.iter().filter(|r| r.determinate).count()
    }

    pub fn expect(&mut self, e: Expectation) {
        self.expectations.push(e);
    }

    /// Tallies the records against an analytic table and adds one
    /// `freq:<outcome>` expectation per cell.
    pub fn set_records(&mut self, records: Vec<TrialRecord>, analytic: &BTreeMap<String, f64>) {
        self.outcomes = tally(&records, analytic);
        for o in &self.outcomes {
            self.expectations.push(Expectation::close(
                &format!("freq:{}", o.outcome),
                o.analytic,
                o.frequency,
                o.radius + 1e-12,
            ));
        }
        self.records = records;
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn trials_csv(&self) -> String {
        let mut out = String::from("trial,outcome,determinate\n");
        for r in &self.records {
            out.push_str(&format!("{},{},{}\n", r.trial, r.outcome, r.determinate));
        }
        out
    }
}

/// Binomial 3σ radius for probability `p` over `n` trials.
pub fn binomial_radius(p: f64, n: u64) -> f64 {
    SIGMA_BAND * (p * (1.0 - p) / n.max(1) as f64).max(0.0).sqrt()
}

/// Frequencies over the union of observed and analytic outcomes.
pub fn tally(records: &[TrialRecord], analytic: &BTreeMap<String, f64>) -> Vec<OutcomeFrequency> {
    let mut counts: BTreeMap<&str, u64> = analytic.keys().map(|k| (k.as_str(), 0)).collect();
    for r in records {
        *counts.entry(r.outcome.as_str()).or_default() += 1;
    }
    let n = records.len() as u64;
    counts
        .into_iter()
        .map(|(outcome, count)| {
            let p = analytic.get(outcome).copied().unwrap_or(0.0);
            let frequency = count as f64 / n.max(1) as f64;
            let radius = binomial_radius(p, n);
            OutcomeFrequency {
                outcome: outcome.to_string(),
                count,
                frequency,
                analytic: p,
                radius,
                within: (frequency - p).abs() <= radius + 1e-12,
            }
        })
        .collect()
}

/// Runs `trials` independent trials in parallel, preserving trial order.
pub fn run_trials<F>(trials: u64, f: F) -> Result<Vec<TrialRecord>>
where
    F: Fn(u64) -> Result<TrialRecord> + Sync + Send,
{
    (0..trials).into_par_iter().map(f).collect()
}

/// Whether two frequency tables agree cell-wise within the pooled 3σ band
/// around the analytic probability.
pub fn tables_compatible(a: &[OutcomeFrequency], b: &[OutcomeFrequency], n_a: u64, n_b: u64) -> bool {
    let lookup = |t: &[OutcomeFrequency], k: &str| t.iter().find(|o| o.outcome == k).map_or((0.0, 0.0), |o| (o.frequency, o.analytic));
    a.iter().chain(b).all(|o| {
        let (fa, p) = lookup(a, &o.outcome);
        let (fb, _) = lookup(b, &o.outcome);
        let sd = (p * (1.0 - p) * (1.0 / n_a.max(1) as f64 + 1.0 / n_b.max(1) as f64)).sqrt();
        (fa - fb).abs() <= SIGMA_BAND * sd + 1e-12
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(trial: u64, outcome: &str) -> TrialRecord {
        TrialRecord { trial, outcome: outcome.into(), determinate: true }
    }

    #[test]
    fn tally_sums_to_one_and_flags_cells() {
        let records: Vec<_> = (0..100).map(|i| rec(i, if i % 4 == 0 { "x" } else { "y" })).collect();
        let analytic = BTreeMap::from([("x".to_string(), 0.25), ("y".to_string(), 0.75), ("z".to_string(), 0.0)]);
        let t = tally(&records, &analytic);
        let total: f64 = t.iter().map(|o| o.frequency).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(t.iter().all(|o| o.within));
        assert_eq!(t[2].radius, 0.0);
    }

    #[test]
    fn degenerate_cell_needs_exact_match() {
        let records = vec![rec(0, "a"), rec(1, "b")];
        let analytic = BTreeMap::from([("a".to_string(), 1.0)]);
        let t = tally(&records, &analytic);
        assert!(!t[0].within && !t[1].within);
    }
}
