use rand::Rng;
use serde::{Deserialize, Serialize};

use super::coupling::PointerCoupling;
use super::measure::{coherence_overlaps, completed_degree, degree_of_differentiation, OverlapMatrix};
use super::property::{Carrier, QuantumProperty, ValueProperty};
use crate::error::{Error, Result};
use crate::quantum::{born_sample, DensityOperator, Evolve, PureState, State, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifferentiationConfig {
    /// The property counts as completely differentiated once `D*` is within
    /// this distance of the degree its pointer populations allow.
    pub completion_tolerance: f64,
}

impl Default for DifferentiationConfig {
    fn default() -> Self {
        Self { completion_tolerance: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub time: f64,
    pub degree: f64,
    pub value: ValueProperty,
    /// Largest defined off-diagonal overlap modulus, when the joint state is pure.
    pub max_overlap: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct DifferentiationRun {
    pub points: Vec<TrajectoryPoint>,
    /// One overlap matrix per point (empty for mixed carriers).
    pub overlaps: Vec<OverlapMatrix>,
    /// Joint state at the last step, before any state update.
    pub final_joint: State,
    /// Post-measurement joint state, present only when a value was determined.
    pub state_update: Option<DensityOperator>,
}

impl DifferentiationRun {
    pub fn degrees(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.degree).collect()
    }

    pub fn terminal_value(&self) -> Option<ValueProperty> {
        self.points.last().map(|p| p.value)
    }

    /// CSV rows `time,degree,value_kind,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,degree,value_kind,value\n");
        for p in &self.points {
            let value = match p.value {
                ValueProperty::Determinate { value } => value.to_string(),
                ValueProperty::Indeterminate { degree } => degree.to_string(),
            };
            out.push_str(&format!("{},{},{},{}\n", p.time, p.degree, p.value.kind(), value));
        }
        out
    }
}

/// Couples the system to a fresh environment (every factor in `|0⟩`) and
/// follows `D*` of the reduced state over `steps + 1` equally spaced times.
///
/// Values are assigned by the chain status of the environment: disconnected
/// runs stay `Indeterminate(0)`; connected runs report `Indeterminate(D*)`
/// until the property is completely differentiated, then a Born-sampled
/// `Determinate` eigenvalue. The quantum dynamics never depends on the flag.
pub fn run_differentiation<R: Rng + ?Sized>(
    system: &QuantumProperty,
    coupling: &PointerCoupling,
    env_chain_connected: bool,
    duration: f64,
    steps: usize,
    config: &DifferentiationConfig,
    rng: &mut R,
) -> Result<DifferentiationRun> {
    if steps == 0 {
        return Err(Error::InvalidConfig("steps must be at least 1".into()));
    }
    let pointer = coupling.pointer();
    if !system.observable().space().same_factors(pointer.space()) {
        return Err(Error::SpaceMismatch("property observable and coupling pointer act on different systems".into()));
    }
    let system_label = coupling.system_label().to_string();
    let env0 = PureState::basis(coupling.environment().clone(), &vec![0; coupling.environment().len()])?;
    let initial: State = match system.carrier() {
        Carrier::Pure(p) => State::Pure(p.tensor(&env0)?),
        Carrier::Joint { state, .. } => State::Pure(state.tensor(&env0)?),
        Carrier::Reduced(r) => State::Mixed(r.tensor(&env0.to_density())?),
    };

    let mut points = Vec::with_capacity(steps + 1);
    let mut overlaps = Vec::new();
    let mut determined: Option<f64> = None;
    let mut state_update = None;
    let mut joint = initial.clone();
    for k in 0..=steps {
        let time = duration * k as f64 / steps as f64;
        let u = coupling.unitary(time)?;
        joint = match &initial {
            State::Pure(p) => State::Pure(p.evolve(&u)?),
            State::Mixed(m) => State::Mixed(m.evolve(&u)?),
        };
        let reduced = match &joint {
            State::Pure(p) => p.reduced(&[system_label.as_str()])?,
            State::Mixed(m) => m.partial_trace(&[system_label.as_str()])?,
        };
        let degree = degree_of_differentiation(&reduced, pointer)?;
        let max_overlap = match &joint {
            State::Pure(p) => {
                let o = coherence_overlaps(p, &system_label, pointer)?;
                let m = o.max_off_diagonal();
                overlaps.push(o);
                m
            }
            State::Mixed(_) => None,
        };
        let value = if !env_chain_connected {
            ValueProperty::Indeterminate { degree: 0.0 }
        } else if let Some(v) = determined {
            ValueProperty::Determinate { value: v }
        } else if degree >= completed_degree(&reduced, pointer)? - config.completion_tolerance {
            let (v, updated) = born_sample(&joint.to_density(), pointer, rng)?;
            determined = Some(v);
            state_update = Some(updated);
            ValueProperty::Determinate { value: v }
        } else {
            ValueProperty::indeterminate(degree)?
        };
        points.push(TrajectoryPoint { time, degree, value, max_overlap });
    }
    Ok(DifferentiationRun { points, overlaps, final_joint: joint, state_update })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::differentiation::coupling::DEFAULT_STRENGTH_RANGE;
    use crate::quantum::linalg::c;
    use crate::quantum::Observable;
    use crate::rng::SeedStreams;

    fn setup(amps: [f64; 2], seed: u64) -> (QuantumProperty, PointerCoupling) {
        let sz = Observable::spin("s", 0.0).unwrap();
        let psi = PureState::normalized(sz.space().clone(), nalgebra::dvector![c(amps[0], 0.0), c(amps[1], 0.0)]).unwrap();
        let prop = QuantumProperty::new(Carrier::Pure(psi), sz.clone()).unwrap();
        let mut rng = SeedStreams::new(seed).stream(crate::rng::purpose::BATH, 0);
        let coupling = PointerCoupling::random_bath(sz, "e", 4, DEFAULT_STRENGTH_RANGE, &mut rng).unwrap();
        (prop, coupling)
    }

    #[test]
    fn eigenstate_is_determinate_immediately() {
        let (_, coupling) = setup([1.0, 0.0], 1);
        let up = coupling.pointer().eigenstate(1);
        let prop = QuantumProperty::new(Carrier::Pure(up), coupling.pointer().clone()).unwrap();
        let mut rng = SeedStreams::new(1).stream(0, 0);
        let t = coupling.orthogonalization_time().unwrap();
        let run = run_differentiation(&prop, &coupling, true, t, 10, &Default::default(), &mut rng).unwrap();
        for p in &run.points {
            assert!(p.degree.abs() < 1e-12);
            assert_eq!(p.value, ValueProperty::Determinate { value: 0.5 });
        }
    }

    #[test]
    fn disconnected_run_has_same_dynamics() {
        let (prop, coupling) = setup([1.0, 1.0], 2);
        let t = coupling.orthogonalization_time().unwrap();
        let mut rng = SeedStreams::new(2).stream(0, 0);
        let on = run_differentiation(&prop, &coupling, true, t, 20, &Default::default(), &mut rng).unwrap();
        let off = run_differentiation(&prop, &coupling, false, t, 20, &Default::default(), &mut rng).unwrap();
        for (a, b) in on.points.iter().zip(&off.points) {
            assert!((a.degree - b.degree).abs() <= 1e-12);
            assert_eq!(b.value, ValueProperty::Indeterminate { degree: 0.0 });
        }
        assert!(off.state_update.is_none());
        assert!(on.state_update.is_some());
        let last = on.points.last().unwrap();
        assert!(last.degree >= 1.0 - 1e-6);
        assert!(last.value.is_determinate());
    }

    #[test]
    fn mixed_carrier_follows_density_route() {
        let (prop, coupling) = setup([0.6, 0.8], 3);
        let reduced = prop.reduced_state().unwrap();
        let mixed = QuantumProperty::new(Carrier::Reduced(reduced), prop.observable().clone()).unwrap();
        let t = coupling.orthogonalization_time().unwrap();
        let mut rng = SeedStreams::new(3).stream(0, 0);
        let a = run_differentiation(&prop, &coupling, false, t, 8, &Default::default(), &mut rng).unwrap();
        let b = run_differentiation(&mixed, &coupling, false, t, 8, &Default::default(), &mut rng).unwrap();
        for (x, y) in a.points.iter().zip(&b.points) {
            assert!((x.degree - y.degree).abs() < 1e-9);
        }
        assert!(b.overlaps.is_empty());
    }

    #[test]
    fn csv_export_has_header_and_rows() {
        let (prop, coupling) = setup([1.0, 1.0], 4);
        let mut rng = SeedStreams::new(4).stream(0, 0);
        let run = run_differentiation(&prop, &coupling, true, 1.0, 3, &Default::default(), &mut rng).unwrap();
        let csv = run.to_csv();
        assert!(csv.starts_with("time,degree,value_kind,value\n0,0,indeterminate,0\n"));
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn zero_steps_rejected() {
        let (prop, coupling) = setup([1.0, 1.0], 5);
        let mut rng = SeedStreams::new(5).stream(0, 0);
        assert!(run_differentiation(&prop, &coupling, true, 1.0, 0, &Default::default(), &mut rng).is_err());
    }
}
