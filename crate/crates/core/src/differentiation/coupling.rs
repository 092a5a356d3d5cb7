use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::quantum::linalg::{self, c, CMatrix};
use crate::quantum::{HilbertSpace, Observable, Subsystem, UnitaryEvolution};

type Family = Arc<dyn Fn(f64) -> Result<UnitaryEvolution> + Send + Sync>;

#[derive(Clone)]
enum CouplingFamily {
    /// `H = Ô_P ⊗ Σ_k g_k σ_y^(k)`: each environment qubit rotates by an
    /// angle proportional to the pointer eigenvalue.
    Bath { strengths: Vec<f64> },
    Custom(Family),
}

/// System–environment interaction in the strong-measurement regime: the
/// system self-Hamiltonian is neglected, so every unitary in the family is
/// diagonal in the pointer eigenbasis on the system factor.
#[derive(Clone)]
pub struct PointerCoupling {
    pointer: Observable,
    environment: HilbertSpace,
    family: CouplingFamily,
}

impl fmt::Debug for PointerCoupling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let family = match &self.family {
            CouplingFamily::Bath { strengths } => format!("Bath {strengths:?}"),
            CouplingFamily::Custom(_) => "Custom".to_string(),
        };
        f.debug_struct("PointerCoupling")
            .field("pointer", &self.pointer.space())
            .field("environment", &self.environment)
            .field("family", &family)
            .finish()
    }
}

/// Default range of per-qubit coupling strengths.
pub const DEFAULT_STRENGTH_RANGE: (f64, f64) = (0.5, 1.5);

impl PointerCoupling {
    /// Qubit bath with explicit strengths; qubits are labeled `{prefix}0`, `{prefix}1`, ….
    pub fn bath(pointer: Observable, prefix: &str, strengths: Vec<f64>) -> Result<Self> {
        if pointer.space().len() != 1 {
            return Err(Error::SpaceMismatch("pointer must act on a single system factor".into()));
        }
        if strengths.is_empty() {
            return Err(Error::InvalidConfig("bath needs at least one qubit".into()));
        }
        let env = HilbertSpace::new((0..strengths.len()).map(|k| Subsystem::qubit(format!("{prefix}{k}"))).collect())?;
        pointer.space().concat(&env)?;
        Ok(Self { pointer, environment: env, family: CouplingFamily::Bath { strengths } })
    }

    /// Qubit bath with strengths drawn uniformly from `range`.
    pub fn random_bath<R: Rng + ?Sized>(
        pointer: Observable,
        prefix: &str,
        qubits: usize,
        range: (f64, f64),
        rng: &mut R,
    ) -> Result<Self> {
        if !(range.0 > 0.0 && range.1 >= range.0) {
            return Err(Error::InvalidConfig(format!("strength range {range:?} must be positive and ordered")));
        }
        let strengths = (0..qubits).map(|_| range.0 + (range.1 - range.0) * rng.random::<f64>()).collect();
        Self::bath(pointer, prefix, strengths)
    }

    /// Arbitrary family `t ↦ U(t)` on `pointer ⊗ environment`. Pointer
    /// diagonality is checked when the family is evaluated.
    pub fn custom(
        pointer: Observable,
        environment: HilbertSpace,
        family: impl Fn(f64) -> Result<UnitaryEvolution> + Send + Sync + 'static,
    ) -> Result<Self> {
        pointer.space().concat(&environment)?;
        Ok(Self { pointer, environment, family: CouplingFamily::Custom(Arc::new(family)) })
    }

    pub fn pointer(&self) -> &Observable {
        &self.pointer
    }

    pub fn system_label(&self) -> &str {
        self.pointer.space().labels().next().unwrap_or_default()
    }

    pub fn environment(&self) -> &HilbertSpace {
        &self.environment
    }

    pub fn environment_labels(&self) -> Vec<String> {
        self.environment.labels().map(str::to_string).collect()
    }

    pub fn joint_space(&self) -> HilbertSpace {
        self.pointer.space().concat(&self.environment).expect("labels checked at construction")
    }

    pub fn strengths(&self) -> Option<&[f64]> {
        match &self.family {
            CouplingFamily::Bath { strengths } => Some(strengths),
            CouplingFamily::Custom(_) => None,
        }
    }

    /// `U(t)` on `pointer ⊗ environment`, rejected if it does not commute
    /// with `Ô_P ⊗ I`.
    pub fn unitary(&self, duration: f64) -> Result<UnitaryEvolution> {
        let u = match &self.family {
            CouplingFamily::Bath { strengths } => self.bath_unitary(strengths, duration)?,
            CouplingFamily::Custom(f) => f(duration)?,
        };
        let dev = self.pointer_deviation(&u)?;
        if dev > crate::quantum::UNITARY_TOL {
            return Err(Error::NotPointerDiagonal(dev));
        }
        Ok(u)
    }

    /// `max |[U, Ô_P ⊗ I]|`.
    pub fn pointer_deviation(&self, u: &UnitaryEvolution) -> Result<f64> {
        let space = self.joint_space();
        let m = u.matrix_on(&space)?;
        let o = linalg::embed(self.pointer.matrix(), self.pointer.space(), &space)?;
        Ok(linalg::max_abs(&(&m * &o - &o * &m)))
    }

    /// First time at which the pair of pointer eigenvalues furthest apart
    /// has orthogonal environment records (bath family only).
    pub fn orthogonalization_time(&self) -> Option<f64> {
        let CouplingFamily::Bath { strengths } = &self.family else {
            return None;
        };
        let q = self.pointer.eigenvalues();
        let spread = q[q.len() - 1] - q[0];
        let g_max = strengths.iter().copied().fold(0.0, f64::max);
        Some(FRAC_PI_2 / (g_max * spread))
    }

    /// Same coupling with environment factors renamed in order.
    pub fn with_environment_labels(&self, labels: &[&str]) -> Result<Self> {
        let environment = self.environment.relabel(labels)?;
        self.pointer.space().concat(&environment)?;
        match &self.family {
            CouplingFamily::Bath { .. } => Ok(Self { environment, ..self.clone() }),
            CouplingFamily::Custom(_) => Err(Error::InvalidConfig("custom families cannot be relabeled".into())),
        }
    }

    fn bath_unitary(&self, strengths: &[f64], t: f64) -> Result<UnitaryEvolution> {
        let sys_dim = self.pointer.dim();
        let env_dim = self.environment.total_dim();
        let mut block_sum = CMatrix::zeros(sys_dim * env_dim, sys_dim * env_dim);
        for (k, &q) in self.pointer.eigenvalues().iter().enumerate() {
            // ⊗_k exp(−i q g_k t σ_y), a real rotation per qubit
            let env_u = strengths.iter().fold(CMatrix::identity(1, 1), |acc, &g| {
                let theta = q * g * t;
                let r = CMatrix::from_row_slice(
                    2,
                    2,
                    &[c(theta.cos(), 0.0), c(-theta.sin(), 0.0), c(theta.sin(), 0.0), c(theta.cos(), 0.0)],
                );
                linalg::kron(&acc, &r)
            });
            block_sum += linalg::kron(&self.pointer.projector(k), &env_u);
        }
        UnitaryEvolution::new(self.joint_space(), block_sum)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedStreams;

    #[test]
    fn bath_commutes_with_pointer() {
        let mut rng = SeedStreams::new(5).stream(0, 0);
        let c = PointerCoupling::random_bath(Observable::spin("s", 0.4).unwrap(), "e", 3, DEFAULT_STRENGTH_RANGE, &mut rng)
            .unwrap();
        for t in [0.0, 0.3, 1.7] {
            let u = c.unitary(t).unwrap();
            assert!(c.pointer_deviation(&u).unwrap() < 1e-12);
        }
        assert!(c.strengths().unwrap().iter().all(|g| (0.5..=1.5).contains(g)));
    }

    #[test]
    fn non_diagonal_family_is_rejected() {
        let sz = Observable::spin("s", 0.0).unwrap();
        let env = HilbertSpace::qubits(&["e"]).unwrap();
        let space = sz.space().concat(&env).unwrap();
        let c = PointerCoupling::custom(sz, env, move |t| {
            let h = linalg::kron(&linalg::pauli_x(), &CMatrix::identity(2, 2));
            UnitaryEvolution::from_hamiltonian(space.clone(), &h, t)
        })
        .unwrap();
        assert!(c.unitary(0.0).is_ok());
        assert!(matches!(c.unitary(0.5), Err(Error::NotPointerDiagonal(_))));
    }
}
