use crate::error::{Error, Result};
use crate::quantum::{Evolve, PureState, State, UnitaryEvolution, STATE_TOL};

/// Undoes `forward` on a retained joint state.
///
/// Fails with `IrreversibleContext` when a factor `forward` acts on is no
/// longer part of the state, or when the state is mixed because part of
/// the environment was traced out.
pub fn reverse(joint: &State, forward: &UnitaryEvolution) -> Result<PureState> {
    if let Some(missing) = forward.space().labels().find(|l| !joint.space().contains(l)) {
        return Err(Error::IrreversibleContext(format!("factor `{missing}` is no longer retained")));
    }
    let pure = match joint {
        State::Pure(p) => p.clone(),
        State::Mixed(m) => m.to_pure(STATE_TOL).ok_or_else(|| {
            Error::IrreversibleContext("retained state is mixed: environment records were traced out".into())
        })?,
    };
    pure.evolve(&forward.dagger())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::linalg::{c, CMatrix};
    use crate::quantum::{singlet, HilbertSpace, Observable, Tensor};

    #[test]
    fn forward_then_reverse_is_identity() {
        let psi = singlet("a", "b").unwrap();
        let env = PureState::basis(HilbertSpace::qubits(&["e"]).unwrap(), &[0]).unwrap();
        let joint = psi.tensor(&env).unwrap();
        let sz = Observable::spin("a", 0.0).unwrap();
        let u = UnitaryEvolution::controlled_shift(&sz, &HilbertSpace::qubits(&["e"]).unwrap()).unwrap();
        let after = joint.evolve(&u).unwrap();
        let back = reverse(&State::Pure(after), &u).unwrap();
        assert!(back.fidelity(&joint).unwrap() > 1.0 - 1e-9);
    }

    #[test]
    fn traced_environment_is_irreversible() {
        let psi = singlet("a", "e").unwrap();
        let space = psi.space().clone();
        let h = CMatrix::from_fn(4, 4, |i, j| if i == j { c(i as f64, 0.0) } else { c(0.0, 0.0) });
        let u = UnitaryEvolution::from_hamiltonian(space, &h, 0.3).unwrap();
        let reduced = psi.reduced(&["a"]).unwrap();
        assert!(matches!(reverse(&State::Mixed(reduced), &u), Err(Error::IrreversibleContext(_))));
        let sub = UnitaryEvolution::identity(HilbertSpace::qubits(&["a"]).unwrap());
        let mixed = State::Mixed(psi.reduced(&["a"]).unwrap());
        assert!(matches!(reverse(&mixed, &sub), Err(Error::IrreversibleContext(_))));
    }
}
