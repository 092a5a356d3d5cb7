use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{DensityOperator, Observable, PureState};

use super::measure::degree_of_differentiation;

/// What a quantum property is carried by.
#[derive(Debug, Clone, PartialEq)]
pub enum Carrier {
    /// State of the system alone.
    Pure(PureState),
    /// State of the system jointly with other factors; `system` names the
    /// factor the observable refers to.
    Joint { state: PureState, system: String },
    /// Reduced state of the system.
    Reduced(DensityOperator),
}

/// A `(state, observable, degree of differentiation)` triple.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumProperty {
    carrier: Carrier,
    observable: Observable,
    degree: f64,
}

impl QuantumProperty {
    /// Builds the triple, computing the degree from the system's reduced state.
    pub fn new(carrier: Carrier, observable: Observable) -> Result<Self> {
        let reduced = match &carrier {
            Carrier::Pure(p) => p.to_density(),
            Carrier::Joint { state, system } => {
                if state.space().len() == 1 {
                    state.to_density()
                } else {
                    state.reduced(&[system.as_str()])?
                }
            }
            Carrier::Reduced(r) => r.clone(),
        };
        if !reduced.space().same_factors(observable.space()) {
            return Err(Error::SpaceMismatch("observable does not act on the carrier's system".into()));
        }
        let degree = degree_of_differentiation(&reduced, &observable)?;
        Ok(Self { carrier, observable, degree })
    }

    pub fn carrier(&self) -> &Carrier {
        &self.carrier
    }

    pub fn observable(&self) -> &Observable {
        &self.observable
    }

    pub fn degree(&self) -> f64 {
        self.degree
    }

    /// Reduced state of the system factor.
    pub fn reduced_state(&self) -> Result<DensityOperator> {
        match &self.carrier {
            Carrier::Pure(p) => Ok(p.to_density()),
            Carrier::Joint { state, system } => state.reduced(&[system.as_str()]),
            Carrier::Reduced(r) => Ok(r.clone()),
        }
    }
}

/// Outcome side of a property: a determinate eigenvalue, or an
/// indeterminate value with a degree of determinacy below one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValueProperty {
    Determinate { value: f64 },
    Indeterminate { degree: f64 },
}

impl ValueProperty {
    pub fn indeterminate(degree: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&degree) {
            return Err(Error::InvalidState(format!("indeterminate degree {degree} outside [0, 1)")));
        }
        Ok(ValueProperty::Indeterminate { degree })
    }

    /// Determinate value; `value` must be an eigenvalue of `observable`.
    pub fn determinate(value: f64, observable: &Observable) -> Result<Self> {
        observable
            .eigen_index(value)
            .map(|_| ValueProperty::Determinate { value })
            .ok_or_else(|| Error::InvalidState(format!("{value} is not an eigenvalue")))
    }

    /// Degree of determinacy `D`.
    pub fn degree(&self) -> f64 {
        match self {
            ValueProperty::Determinate { .. } => 1.0,
            ValueProperty::Indeterminate { degree } => *degree,
        }
    }

    pub fn is_determinate(&self) -> bool {
        matches!(self, ValueProperty::Determinate { .. })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ValueProperty::Determinate { .. } => "determinate",
            ValueProperty::Indeterminate { .. } => "indeterminate",
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            ValueProperty::Determinate { value } => Some(*value),
            ValueProperty::Indeterminate { .. } => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{singlet, Observable};

    #[test]
    fn joint_carrier_degree_is_reduced_entropy() {
        let psi = singlet("s", "e").unwrap();
        let sz = Observable::spin("s", 0.0).unwrap();
        let p = QuantumProperty::new(Carrier::Joint { state: psi, system: "s".into() }, sz).unwrap();
        assert!((p.degree() - 1.0).abs() < 1e-9);
        let direct = degree_of_differentiation(&p.reduced_state().unwrap(), p.observable()).unwrap();
        assert!((p.degree() - direct).abs() < 1e-9);
    }

    #[test]
    fn value_property_bounds() {
        assert!(ValueProperty::indeterminate(1.0).is_err());
        assert!(ValueProperty::indeterminate(0.3).is_ok());
        let sz = Observable::spin("s", 0.0).unwrap();
        assert!(ValueProperty::determinate(0.5, &sz).is_ok());
        assert!(ValueProperty::determinate(1.0, &sz).is_err());
        assert_eq!(ValueProperty::Determinate { value: 0.5 }.degree(), 1.0);
    }
}
