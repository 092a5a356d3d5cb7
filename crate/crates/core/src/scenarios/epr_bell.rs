//! Bell scenario through the common-cause process operator, checked
//! against the direct Born rule, with setting/preparation independence.

use std::collections::BTreeMap;

use serde_json::json;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::config::ScenarioConfig;
use super::report::{run_trials, Expectation, ScenarioReport, TrialRecord};
use super::stream;
use crate::error::{Error, Result};
use crate::qcm::{check_qmc, classical_limit, qcm_born, BellModel};
use crate::quantum::linalg::kron;
use crate::quantum::{sample_index, singlet, Observable};
use crate::rng::purpose;

const SIGNS: [&str; 2] = ["-", "+"];
/// Preparation labels: the computational-basis components of the source.
pub const LAMBDAS: [&str; 2] = ["01", "10"];

/// `P(a, b)` for the singlet straight from `tr[(Π_a ⊗ Π_b) ρ]`.
pub fn direct_probabilities(theta_a: f64, theta_b: f64) -> Result<[[f64; 2]; 2]> {
    let rho = singlet("a", "b")?.to_density();
    let oa = Observable::spin("a", theta_a)?;
    let ob = Observable::spin("b", theta_b)?;
    let mut out = [[0.0; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (kron(&oa.projector(i), &ob.projector(j)) * rho.matrix()).trace().re;
        }
    }
    Ok(out)
}

fn correlation(p: &[[f64; 2]; 2]) -> f64 {
    p[0][0] + p[1][1] - p[0][1] - p[1][0]
}

/// CHSH from the direct oracle with the same sign pattern as
/// [`BellModel::chsh`].
pub fn direct_chsh(alice: [f64; 2], bob: [f64; 2]) -> Result<f64> {
    let e = |a: f64, b: f64| direct_probabilities(a, b).map(|p| correlation(&p));
    Ok(e(alice[0], bob[0])? - e(alice[0], bob[1])? + e(alice[1], bob[0])? + e(alice[1], bob[1])?)
}

/// Pearson χ² independence test on a contingency table; returns the
/// statistic, the degrees of freedom and the p-value.
pub fn chi_square_independence(table: &[Vec<u64>]) -> Result<(f64, usize, f64)> {
    let rows: Vec<f64> = table.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let ncols = table.first().map_or(0, |r| r.len());
    let cols: Vec<f64> = (0..ncols).map(|j| table.iter().map(|r| r[j] as f64).sum()).collect();
    let n: f64 = rows.iter().sum();
    let live_rows = rows.iter().filter(|&&r| r > 0.0).count();
    let live_cols = cols.iter().filter(|&&c| c > 0.0).count();
    if live_rows < 2 || live_cols < 2 {
        return Err(Error::InvalidConfig("independence test needs two populated rows and columns".into()));
    }
    let mut stat = 0.0;
    for (i, r) in table.iter().enumerate() {
        for (j, &o) in r.iter().enumerate() {
            let e = rows[i] * cols[j] / n;
            if e > 0.0 {
                stat += (o as f64 - e).powi(2) / e;
            }
        }
    }
    let df = (live_rows - 1) * (live_cols - 1);
    let dist = ChiSquared::new(df as f64).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    Ok((stat, df, dist.sf(stat)))
}

pub fn run_epr_bell(config: &ScenarioConfig) -> Result<ScenarioReport> {
    config.validate()?;
    let mut report = ScenarioReport::new(config);
    let alice = config.bell.alice_angles;
    let bob = config.bell.bob_angles;

    let model = BellModel::new(false)?;
    let qmc = check_qmc(&model.process)?;
    report.expect(Expectation::holds("check_qmc", qmc.is_ok()));

    let mut grid = [[[[0.0; 2]; 2]; 2]; 2];
    let mut max_diff: f64 = 0.0;
    for x in 0..2 {
        for y in 0..2 {
            let q = model.probabilities(alice[x], bob[y])?;
            let d = direct_probabilities(alice[x], bob[y])?;
            for a in 0..2 {
                for b in 0..2 {
                    max_diff = max_diff.max((q[a][b] - d[a][b]).abs());
                }
            }
            grid[x][y] = q;
        }
    }
    report.expect(Expectation::close("qcm_vs_direct", 0.0, max_diff, 1e-8));

    let matched = model.probabilities(alice[0], alice[0])?;
    report.expect(Expectation::close("matched_anticorrelation", 1.0, matched[0][1] + matched[1][0], 1e-9));

    let chsh = model.chsh(alice, bob)?;
    let chsh_direct = direct_chsh(alice, bob)?;
    report.expect(Expectation::close("chsh_qcm_vs_direct", chsh_direct, chsh, 1e-8));
    report.expect(Expectation::at_least("chsh_violation", 2.0 + 1e-9, chsh.abs()));

    let singlet_classical = classical_limit(&model.process);
    report.expect(Expectation::holds("singlet_not_factorizable", singlet_classical.is_err()));

    let decohered = BellModel::new(true)?;
    let classical = classical_limit(&decohered.process)?;
    let src = &decohered.source.elements[0];
    let mut factor_err: f64 = 0.0;
    for x in 0..2 {
        for y in 0..2 {
            let ia = BellModel::spin_instrument(&decohered.alice, alice[x])?;
            let ib = BellModel::spin_instrument(&decohered.bob, bob[y])?;
            for ea in &ia.elements {
                for eb in &ib.elements {
                    let q = qcm_born(&decohered.process, &[src, ea, eb])?;
                    let c = classical.probability(&[src, ea, eb])?;
                    factor_err = factor_err.max((q - c).abs());
                }
            }
        }
    }
    report.expect(Expectation::close("decohered_factorization", 0.0, factor_err, 1e-8));
    let chsh_decohered = decohered.chsh(alice, bob)?;
    report.expect(Expectation::at_most("decohered_chsh_bound", 2.0 + 1e-8, chsh_decohered.abs()));

    // hidden preparation label drawn from the decohered source diagonal
    let source = decohered.process.factor(crate::qcm::SOURCE).expect("source factor");
    let lambda_weights = [source.matrix()[(1, 1)].re, source.matrix()[(2, 2)].re];
    let settings_stream = config.bell.settings_stream;
    let preparation_stream = config.bell.preparation_stream;
    let draws = run_trials(config.trials, |i| {
        let mut s = stream(config, settings_stream, i);
        let setting = sample_index(&[1.0; 4], &mut s)?;
        let lambda = sample_index(&lambda_weights, &mut stream(config, preparation_stream, i))?;
        let (x, y) = (setting / 2, setting % 2);
        let cells: Vec<f64> = grid[x][y].iter().flatten().copied().collect();
        let k = sample_index(&cells, &mut stream(config, purpose::OUTCOMES, i))?;
        let outcome = format!("x{x}y{y}:a{}b{}:{}", SIGNS[k / 2], SIGNS[k % 2], LAMBDAS[lambda]);
        Ok(TrialRecord { trial: i, outcome, determinate: true })
    })?;

    let mut contingency = vec![vec![0u64; 2]; 4];
    let mut records = Vec::with_capacity(draws.len());
    for r in draws {
        let (head, lambda) = r.outcome.rsplit_once(':').expect("outcome carries a label");
        let x = (head.as_bytes()[1] - b'0') as usize;
        let y = (head.as_bytes()[3] - b'0') as usize;
        let l = LAMBDAS.iter().position(|&s| s == lambda).expect("known label");
        contingency[2 * x + y][l] += 1;
        records.push(TrialRecord { outcome: head.to_string(), ..r });
    }
    let independence = chi_square_independence(&contingency);
    match &independence {
        Ok((_, _, p)) => report.expect(Expectation::at_least("setting_independence", 0.01, *p)),
        Err(_) => report.expect(Expectation::holds("setting_independence", config.trials < 8)),
    }

    let mut analytic = BTreeMap::new();
    for x in 0..2 {
        for y in 0..2 {
            for k in 0..4 {
                analytic.insert(format!("x{x}y{y}:a{}b{}", SIGNS[k / 2], SIGNS[k % 2]), 0.25 * grid[x][y][k / 2][k % 2]);
            }
        }
    }
    report.set_records(records, &analytic);

    report.details = json!({
        "probability_grid": grid,
        "qcm_vs_direct_max_diff": max_diff,
        "chsh": chsh,
        "chsh_direct": chsh_direct,
        "chsh_decohered": chsh_decohered,
        "classical_bound": 2.0,
        "decohered_factorization_error": factor_err,
        "singlet_classical_limit": singlet_classical.err().map(|e| e.to_string()),
        "qmc": qmc,
        "contingency": contingency,
        "chi_square": independence.ok().map(|(s, df, p)| json!({ "statistic": s, "df": df, "p_value": p })),
        "lambda_weights": lambda_weights,
        "tags": { "singlet": model.process.tag(crate::qcm::SOURCE), "decohered": decohered.process.tag(crate::qcm::SOURCE) },
    });
    Ok(report)
}
