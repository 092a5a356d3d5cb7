use rand::Rng;
use serde::{Deserialize, Serialize};

use super::linalg::{self, c, CMatrix, CVector, ONE};
use super::space::HilbertSpace;
use super::state::{rows_to_matrix, matrix_to_rows, DensityOperator, PureState, RawMatrix};
use super::{PROBABILITY_FLOOR, STATE_TOL, UNITARY_TOL};
use crate::error::{Error, Result};

/// Hermitian operator with a non-degenerate spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct Observable {
    space: HilbertSpace,
    matrix: CMatrix,
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
}

impl Observable {
    pub fn new(space: HilbertSpace, matrix: CMatrix) -> Result<Self> {
        let n = space.total_dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::SpaceMismatch(format!("{}x{} observable for dimension {n}", matrix.nrows(), matrix.ncols())));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NotHermitian(f64::NAN));
        }
        let herm = linalg::hermiticity_error(&matrix);
        if herm > STATE_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let (eigenvalues, eigenvectors) = linalg::hermitian_eigen(&matrix);
        for w in eigenvalues.windows(2) {
            if w[1] - w[0] <= STATE_TOL {
                return Err(Error::DegenerateObservable(w[0], w[1]));
            }
        }
        let unit = linalg::unitarity_error(&eigenvectors);
        if unit > STATE_TOL {
            return Err(Error::NotUnitary(unit));
        }
        Ok(Self { space, matrix, eigenvalues, eigenvectors })
    }

    /// Builds `Σ q_k |v_k⟩⟨v_k|` from an orthonormal eigenbasis given as columns.
    pub fn from_spectrum(space: HilbertSpace, eigenvalues: &[f64], eigenvectors: &CMatrix) -> Result<Self> {
        if eigenvalues.len() != eigenvectors.ncols() {
            return Err(Error::SpaceMismatch("eigenvalue count differs from eigenvector count".into()));
        }
        let unit = linalg::unitarity_error(eigenvectors);
        if unit > STATE_TOL {
            return Err(Error::NotUnitary(unit));
        }
        let d = CVector::from_iterator(eigenvalues.len(), eigenvalues.iter().map(|&q| c(q, 0.0)));
        let m = eigenvectors * CMatrix::from_diagonal(&d) * eigenvectors.adjoint();
        Self::new(space, m)
    }

    /// Spin-½ component `(cos θ σ_z + sin θ σ_x)/2` in the x–z plane.
    pub fn spin(label: &str, theta: f64) -> Result<Self> {
        let m = (linalg::pauli_z().scale(theta.cos()) + linalg::pauli_x().scale(theta.sin())).scale(0.5);
        Self::new(HilbertSpace::qubits(&[label])?, m)
    }

    /// Occupation number `diag(0, 1, …, dim−1)` of a single mode.
    pub fn number(label: &str, dim: usize) -> Result<Self> {
        let space = HilbertSpace::new(vec![super::Subsystem::new(label, dim)])?;
        let d = CVector::from_iterator(dim, (0..dim).map(|k| c(k as f64, 0.0)));
        Self::new(space, CMatrix::from_diagonal(&d))
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenstate(&self, k: usize) -> PureState {
        PureState::from_parts_unchecked(self.space.clone(), self.eigenvectors.column(k).into_owned())
    }

    pub fn projector(&self, k: usize) -> CMatrix {
        let v = self.eigenvectors.column(k).into_owned();
        linalg::outer(&v, &v)
    }

    /// Index of the eigenvalue closest to `value`, if within tolerance.
    pub fn eigen_index(&self, value: f64) -> Option<usize> {
        self.eigenvalues.iter().position(|q| (q - value).abs() <= 1e-9)
    }

    /// The observable written on other labels with the same dimensions.
    pub fn relabeled(&self, labels: &[&str]) -> Result<Self> {
        let mut o = self.clone();
        o.space = self.space.relabel(labels)?;
        Ok(o)
    }
}

impl super::state::Tensor for Observable {
    /// Product observable `A ⊗ B`; fails when the product spectrum is degenerate.
    fn tensor(&self, other: &Self) -> Result<Self> {
        let space = self.space.concat(&other.space)?;
        Observable::new(space, linalg::kron(&self.matrix, &other.matrix))
    }
}

impl TryFrom<RawMatrix> for Observable {
    type Error = Error;

    fn try_from(raw: RawMatrix) -> Result<Self> {
        Observable::new(raw.subsystems, rows_to_matrix(&raw.matrix)?)
    }
}

impl From<Observable> for RawMatrix {
    fn from(o: Observable) -> Self {
        RawMatrix { matrix: matrix_to_rows(&o.matrix), subsystems: o.space }
    }
}

/// A unitary map on a labeled space, optionally remembering the Hermitian
/// generator and duration it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryEvolution {
    space: HilbertSpace,
    matrix: CMatrix,
    generator: Option<(CMatrix, f64)>,
}

impl UnitaryEvolution {
    pub fn new(space: HilbertSpace, matrix: CMatrix) -> Result<Self> {
        let n = space.total_dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::SpaceMismatch(format!("{}x{} unitary for dimension {n}", matrix.nrows(), matrix.ncols())));
        }
        let err = linalg::unitarity_error(&matrix);
        if err > UNITARY_TOL {
            return Err(Error::NotUnitary(err));
        }
        Ok(Self { space, matrix, generator: None })
    }

    /// `exp(−i H t)` through the eigen-decomposition of the Hermitian `H`.
    pub fn from_hamiltonian(space: HilbertSpace, hamiltonian: &CMatrix, duration: f64) -> Result<Self> {
        let herm = linalg::hermiticity_error(hamiltonian);
        if herm > STATE_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let m = linalg::hermitian_function(hamiltonian, |e| c(0.0, -e * duration).exp());
        let mut u = Self::new(space, m)?;
        u.generator = Some((hamiltonian.clone(), duration));
        Ok(u)
    }

    pub fn identity(space: HilbertSpace) -> Self {
        let n = space.total_dim();
        Self { space, matrix: CMatrix::identity(n, n), generator: None }
    }

    /// Von Neumann interaction `Σ_k |v_k⟩⟨v_k| ⊗ X^k` that shifts the pointer
    /// register `target` by the index of the system's eigenvector.
    pub fn controlled_shift(pointer: &Observable, target: &HilbertSpace) -> Result<Self> {
        if target.len() != 1 {
            return Err(Error::SpaceMismatch("pointer register must be a single factor".into()));
        }
        let d = target.total_dim();
        let space = pointer.space().concat(target)?;
        let mut shift = CMatrix::zeros(d, d);
        for j in 0..d {
            shift[((j + 1) % d, j)] = ONE;
        }
        let n = space.total_dim();
        let mut m = CMatrix::zeros(n, n);
        let mut power = CMatrix::identity(d, d);
        for k in 0..pointer.dim() {
            m += linalg::kron(&pointer.projector(k), &power);
            power = &shift * power;
        }
        Self::new(space, m)
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn generator(&self) -> Option<(&CMatrix, f64)> {
        self.generator.as_ref().map(|(h, t)| (h, *t))
    }

    pub fn dagger(&self) -> Self {
        Self {
            space: self.space.clone(),
            matrix: self.matrix.adjoint(),
            generator: self.generator.as_ref().map(|(h, t)| (h.clone(), -t)),
        }
    }

    /// `next ∘ self`, with `next` acting on this space or a subset of it.
    pub fn then(&self, next: &UnitaryEvolution) -> Result<Self> {
        let m = next.matrix_on(&self.space)? * &self.matrix;
        Ok(Self { space: self.space.clone(), matrix: m, generator: None })
    }

    /// The matrix expressed on `target`, which must contain every factor
    /// this unitary acts on.
    pub fn matrix_on(&self, target: &HilbertSpace) -> Result<CMatrix> {
        if *target == self.space {
            return Ok(self.matrix.clone());
        }
        if let Some(missing) = self.space.labels().find(|l| !target.contains(l)) {
            return Err(Error::SpaceMismatch(format!("state has no factor `{missing}`")));
        }
        for s in self.space.subsystems() {
            if target.dim_of(&s.label)? != s.dim {
                return Err(Error::SpaceMismatch(format!("factor `{}` has a different dimension", s.label)));
            }
        }
        linalg::embed(&self.matrix, &self.space, target)
    }
}

/// One outcome of a projective measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementOutcome {
    pub value: f64,
    pub label: String,
    pub projector: CMatrix,
}

/// Complete set of orthogonal projectors, possibly of rank above one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectiveMeasurement {
    space: HilbertSpace,
    outcomes: Vec<MeasurementOutcome>,
}

impl ProjectiveMeasurement {
    pub fn new(space: HilbertSpace, outcomes: Vec<MeasurementOutcome>) -> Result<Self> {
        let n = space.total_dim();
        let mut sum = CMatrix::zeros(n, n);
        for o in &outcomes {
            if o.projector.nrows() != n || o.projector.ncols() != n {
                return Err(Error::SpaceMismatch(format!("projector `{}` has the wrong size", o.label)));
            }
            let idem = linalg::max_abs(&(&o.projector * &o.projector - &o.projector));
            let herm = linalg::hermiticity_error(&o.projector);
            if idem > STATE_TOL || herm > STATE_TOL {
                return Err(Error::InvalidState(format!("`{}` is not an orthogonal projector", o.label)));
            }
            sum += &o.projector;
        }
        let completeness = linalg::max_abs(&(sum - CMatrix::identity(n, n)));
        if completeness > STATE_TOL {
            return Err(Error::InvalidState(format!("projectors do not resolve the identity ({completeness:.3e})")));
        }
        Ok(Self { space, outcomes })
    }

    pub fn from_observable(obs: &Observable) -> Self {
        let outcomes = (0..obs.dim())
            .map(|k| MeasurementOutcome {
                value: obs.eigenvalues()[k],
                label: format!("{}", obs.eigenvalues()[k]),
                projector: obs.projector(k),
            })
            .collect();
        Self { space: obs.space().clone(), outcomes }
    }

    pub fn outcomes(&self) -> &[MeasurementOutcome] {
        &self.outcomes
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    /// `tr(Π_k ρ)` for every outcome; `rho` may carry extra factors.
    pub fn probabilities(&self, rho: &DensityOperator) -> Result<Vec<f64>> {
        let local = if rho.space().same_factors(&self.space) {
            rho.reordered_like(&self.space)?
        } else {
            let keep: Vec<&str> = self.space.labels().collect();
            rho.partial_trace(&keep)?.reordered_like(&self.space)?
        };
        Ok(self
            .outcomes
            .iter()
            .map(|o| linalg::trace(&(&o.projector * local.matrix())).re.max(0.0))
            .collect())
    }

    /// Lüders update `Π_k ρ Π_k / tr(Π_k ρ)` on the full state.
    pub fn update(&self, rho: &DensityOperator, k: usize) -> Result<DensityOperator> {
        let p = linalg::embed(&self.outcomes[k].projector, &self.space, rho.space())?;
        let m = &p * rho.matrix() * &p;
        let tr = linalg::trace(&m).re;
        if tr < PROBABILITY_FLOOR {
            return Err(Error::NumericalDegeneracy);
        }
        Ok(DensityOperator::from_parts_unchecked(rho.space().clone(), m.unscale(tr)))
    }

    /// Draws an outcome index with Born weights and returns the updated state.
    pub fn sample<R: Rng + ?Sized>(&self, rho: &DensityOperator, rng: &mut R) -> Result<(usize, DensityOperator)> {
        let probs = self.probabilities(rho)?;
        let k = sample_index(&probs, rng)?;
        Ok((k, self.update(rho, k)?))
    }
}

/// Categorical draw from non-negative weights; fails when all weights are
/// below the probability floor.
pub fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<usize> {
    let total: f64 = weights.iter().filter(|&&w| w > PROBABILITY_FLOOR).sum();
    if total <= 0.0 {
        return Err(Error::NumericalDegeneracy);
    }
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (k, &w) in weights.iter().enumerate() {
        if w <= PROBABILITY_FLOOR {
            continue;
        }
        acc += w;
        last = k;
        if u < acc {
            return Ok(k);
        }
    }
    Ok(last)
}

/// Born probabilities `(eigenvalue, tr(Π_i ρ))` for a non-degenerate observable.
pub fn born_probabilities(rho: &DensityOperator, obs: &Observable) -> Result<Vec<(f64, f64)>> {
    let probs = ProjectiveMeasurement::from_observable(obs).probabilities(rho)?;
    Ok(obs.eigenvalues().iter().copied().zip(probs).collect())
}

/// Samples an eigenvalue with probability `tr(Π_i ρ)` and returns the
/// post-measurement state `Π_i ρ Π_i / tr(Π_i ρ)`.
pub fn born_sample<R: Rng + ?Sized>(rho: &DensityOperator, obs: &Observable, rng: &mut R) -> Result<(f64, DensityOperator)> {
    let m = ProjectiveMeasurement::from_observable(obs);
    let (k, updated) = m.sample(rho, rng)?;
    Ok((obs.eigenvalues()[k], updated))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::state::{Evolve, Tensor};
    use crate::rng::SeedStreams;

    #[test]
    fn degenerate_observable_rejected() {
        let space = HilbertSpace::qubits(&["a", "b"]).unwrap();
        let zz = linalg::kron(&linalg::pauli_z(), &linalg::pauli_z());
        assert!(matches!(Observable::new(space, zz), Err(Error::DegenerateObservable(..))));
        let sz = Observable::spin("a", 0.0).unwrap();
        assert!(matches!(sz.tensor(&sz.relabeled(&["b"]).unwrap()), Err(Error::DegenerateObservable(..))));
    }

    #[test]
    fn spin_eigenvalues_are_half() {
        let s = Observable::spin("a", 0.3).unwrap();
        assert!((s.eigenvalues()[0] + 0.5).abs() < 1e-12);
        assert!((s.eigenvalues()[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn unitary_validation() {
        let space = HilbertSpace::qubits(&["a"]).unwrap();
        let not_u = CMatrix::identity(2, 2).scale(1.1);
        assert!(matches!(UnitaryEvolution::new(space, not_u), Err(Error::NotUnitary(_))));
    }

    #[test]
    fn controlled_shift_is_von_neumann_interaction() {
        let sz = Observable::spin("s", 0.0).unwrap();
        let env = HilbertSpace::qubits(&["e"]).unwrap();
        let u = UnitaryEvolution::controlled_shift(&sz, &env).unwrap();
        // eigenvectors ascending: index 0 is −½ (|1⟩), index 1 is +½ (|0⟩)
        let (a, b) = (0.6, 0.8);
        let s = PureState::new(sz.space().clone(), CVector::from_vec(vec![c(a, 0.0), c(b, 0.0)])).unwrap();
        let e0 = PureState::basis(env, &[0]).unwrap();
        let out = s.tensor(&e0).unwrap().evolve(&u).unwrap();
        // α|↑⟩|E_1⟩ + β|↓⟩|E_0⟩ where the shift count is the eigen index
        let amps: Vec<f64> = out.amplitudes().iter().map(|z| z.re).collect();
        assert!((amps[1] - a).abs() < 1e-12 && (amps[2] - b).abs() < 1e-12);
        assert!(amps[0].abs() < 1e-12 && amps[3].abs() < 1e-12);
    }

    #[test]
    fn born_sample_on_eigenstate_is_certain() {
        let sz = Observable::spin("s", 0.0).unwrap();
        let rho = sz.eigenstate(1).to_density();
        let streams = SeedStreams::new(1);
        let mut rng = streams.stream(0, 0);
        for _ in 0..100 {
            let (v, updated) = born_sample(&rho, &sz, &mut rng).unwrap();
            assert_eq!(v, 0.5);
            assert!(updated.distance(&rho).unwrap() < 1e-12);
        }
    }

    #[test]
    fn born_on_subsystem_of_joint_state() {
        let psi = crate::quantum::singlet("a", "b").unwrap();
        let sz = Observable::spin("b", 0.0).unwrap();
        let probs = born_probabilities(&psi.to_density(), &sz).unwrap();
        assert!((probs[0].1 - 0.5).abs() < 1e-12 && (probs[1].1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_weights_are_degenerate() {
        let mut rng = SeedStreams::new(3).stream(0, 0);
        assert_eq!(sample_index(&[0.0, 1e-14], &mut rng), Err(Error::NumericalDegeneracy));
    }

    #[test]
    fn projective_measurement_validation() {
        let space = HilbertSpace::qubits(&["a"]).unwrap();
        let p0 = CMatrix::from_row_slice(2, 2, &[ONE, linalg::ZERO, linalg::ZERO, linalg::ZERO]);
        let incomplete = vec![MeasurementOutcome { value: 0.0, label: "0".into(), projector: p0 }];
        assert!(ProjectiveMeasurement::new(space, incomplete).is_err());
    }
}
