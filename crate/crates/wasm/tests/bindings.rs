use endqt_wasm::{bell_correlations, differentiation_trajectory, interferometer_probabilities};
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn interferometer_clicks() {
    let v = parse(interferometer_probabilities(false, true, std::f64::consts::FRAC_PI_2));
    assert_eq!(v["clicks"]["D2"], 1.0);
    let v = parse(interferometer_probabilities(true, true, std::f64::consts::FRAC_PI_2));
    for (k, p) in [("D3", 0.5), ("D1", 0.25), ("D2", 0.25)] {
        assert!((v["clicks"][k].as_f64().unwrap() - p).abs() < 1e-9);
    }
}

#[test]
fn trajectory_rises_and_gate_controls_the_update() {
    let v = parse(differentiation_trajectory(std::f64::consts::FRAC_PI_2, 3, 11, 20, true));
    let pts = v["points"].as_array().unwrap();
    assert_eq!(pts.len(), 21);
    let degrees: Vec<f64> = pts.iter().map(|p| p["degree"].as_f64().unwrap()).collect();
    assert!(degrees[0].abs() < 1e-12);
    assert!(degrees.windows(2).all(|w| w[1] >= w[0] - 1e-9));
    assert_eq!(v["state_updated"], true);
    let v = parse(differentiation_trajectory(std::f64::consts::FRAC_PI_2, 3, 11, 20, false));
    assert_eq!(v["state_updated"], false);
}

#[test]
fn bell_tables() {
    let v = parse(bell_correlations(0.0, 0.0, false));
    assert!((v["correlation"].as_f64().unwrap() + 1.0).abs() < 1e-9);
    assert!(v["chsh"].as_f64().unwrap().abs() > 2.8);
    let v = parse(bell_correlations(0.0, 0.0, true));
    assert!(v["chsh"].as_f64().unwrap().abs() <= 2.0 + 1e-8);
}

#[test]
fn errors_come_back_as_json() {
    let v = parse(bell_correlations(f64::NAN, 0.0, false));
    assert!(v["error"].is_string(), "{v}");
}
