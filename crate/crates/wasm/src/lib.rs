//! JSON-returning bindings for the browser demo in `www/`. Every export
//! returns a JSON object; failures come back as `{"error": "..."}`.

use endqt_core::differentiation::{
    run_differentiation, Carrier, DifferentiationConfig, PointerCoupling, QuantumProperty,
};
use endqt_core::qcm::BellModel;
use endqt_core::quantum::linalg::{c, CVector};
use endqt_core::quantum::{HilbertSpace, Observable, PureState};
use endqt_core::rng::{purpose, SeedStreams};
use endqt_core::scenarios::{direct_probabilities, simulate_interferometer};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

const BELL_ALICE: [f64; 2] = [0.0, std::f64::consts::FRAC_PI_2];
const BELL_BOB: [f64; 2] = [std::f64::consts::FRAC_PI_4, 3.0 * std::f64::consts::FRAC_PI_4];

fn respond(result: Result<Value, endqt_core::Error>) -> String {
    match result {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

/// Click probabilities of the Mach-Zehnder setup.
#[wasm_bindgen]
pub fn interferometer_probabilities(d3_present: bool, lab_open: bool, reflection_phase: f64) -> String {
    respond(simulate_interferometer(d3_present, lab_open, reflection_phase).map(|run| {
        json!({
            "d3_present": d3_present,
            "lab_open": lab_open,
            "reflection_phase": reflection_phase,
            "clicks": run.clicks,
        })
    }))
}

/// D* and overlap decay for a qubit `cos(θ/2)|0⟩ + sin(θ/2)|1⟩` coupled to
/// a random bath of `bath_qubits` spins up to its orthogonalization time.
#[wasm_bindgen]
pub fn differentiation_trajectory(theta: f64, bath_qubits: u32, seed: u32, steps: u32, chain_connected: bool) -> String {
    respond(trajectory(theta, bath_qubits as usize, seed as u64, steps.max(1) as usize, chain_connected))
}

fn trajectory(theta: f64, qubits: usize, seed: u64, steps: usize, connected: bool) -> endqt_core::Result<Value> {
    let space = HilbertSpace::qubits(&["s"])?;
    let amplitudes = CVector::from_vec(vec![c((theta / 2.0).cos(), 0.0), c((theta / 2.0).sin(), 0.0)]);
    let psi = PureState::new(space, amplitudes)?;
    let pointer = Observable::spin("s", 0.0)?;
    let mut rng = SeedStreams::new(seed).stream(purpose::BATH, 0);
    let coupling = PointerCoupling::random_bath(pointer.clone(), "e", qubits.clamp(1, 8), (0.5, 1.5), &mut rng)?;
    let duration = coupling.orthogonalization_time().unwrap_or(1.0);
    let property = QuantumProperty::new(Carrier::Pure(psi), pointer)?;
    let run = run_differentiation(&property, &coupling, connected, duration, steps, &DifferentiationConfig::default(), &mut rng)?;
    Ok(json!({
        "duration": duration,
        "points": run.points,
        "state_updated": run.state_update.is_some(),
    }))
}

/// Outcome table and correlation for the singlet (or its decohered
/// source) at the given analyzer angles, with CHSH at the standard angles.
#[wasm_bindgen]
pub fn bell_correlations(theta_a: f64, theta_b: f64, decohered: bool) -> String {
    respond((|| {
        let model = BellModel::new(decohered)?;
        let p = model.probabilities(theta_a, theta_b)?;
        let direct = if decohered { None } else { Some(direct_probabilities(theta_a, theta_b)?) };
        Ok(json!({
            "decohered": decohered,
            "probabilities": p,
            "direct_probabilities": direct,
            "correlation": model.correlation(theta_a, theta_b)?,
            "chsh": model.chsh(BELL_ALICE, BELL_BOB)?,
            "classical_bound": 2.0,
        }))
    })())
}
