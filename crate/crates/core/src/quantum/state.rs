use serde::{Deserialize, Serialize};

use super::linalg::{self, CMatrix, CVector, ONE, ZERO};
use super::operator::UnitaryEvolution;
use super::space::HilbertSpace;
use super::{ENTROPY_FLOOR, STATE_TOL};
use crate::error::{Error, Result};

/// Kronecker product over disjoint label sets.
pub trait Tensor: Sized {
    fn tensor(&self, other: &Self) -> Result<Self>;
}

/// Unitary evolution of a state by an operator on the same space or on a
/// subset of its factors.
pub trait Evolve: Sized {
    fn evolve(&self, u: &UnitaryEvolution) -> Result<Self>;
}

/// Normalized state vector over a labeled composite space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPure", into = "RawPure")]
pub struct PureState {
    space: HilbertSpace,
    amplitudes: CVector,
}

impl PureState {
    pub fn new(space: HilbertSpace, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != space.total_dim() {
            return Err(Error::SpaceMismatch(format!(
                "{} amplitudes for dimension {}",
                amplitudes.len(),
                space.total_dim()
            )));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("norm {norm} differs from 1")));
        }
        Ok(Self { space, amplitudes })
    }

    /// Scales `amplitudes` to unit norm.
    pub fn normalized(space: HilbertSpace, amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm < ENTROPY_FLOOR {
            return Err(Error::InvalidState("zero vector".into()));
        }
        Self::new(space, amplitudes.unscale(norm))
    }

    /// Computational basis state given one level per factor.
    pub fn basis(space: HilbertSpace, levels: &[usize]) -> Result<Self> {
        if levels.len() != space.len() || levels.iter().zip(space.dims()).any(|(l, d)| *l >= d) {
            return Err(Error::InvalidState(format!("levels {levels:?} do not fit the space")));
        }
        let mut v = CVector::zeros(space.total_dim());
        v[space.index_of(levels)] = ONE;
        Ok(Self { space, amplitudes: v })
    }

    pub(crate) fn from_parts_unchecked(space: HilbertSpace, amplitudes: CVector) -> Self {
        Self { space, amplitudes }
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn inner(&self, other: &PureState) -> Result<num_complex::Complex64> {
        let other = other.reordered_like(&self.space)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &PureState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Same factors in the order of `target`.
    pub fn reordered_like(&self, target: &HilbertSpace) -> Result<PureState> {
        if self.space == *target {
            return Ok(self.clone());
        }
        if !self.space.same_factors(target) {
            return Err(Error::SpaceMismatch("states live on different factors".into()));
        }
        let v = linalg::permute_vector(&self.amplitudes, &self.space, target)?;
        Ok(Self::from_parts_unchecked(target.clone(), v))
    }

    /// Representative of the ray with the first non-negligible amplitude
    /// real and positive.
    pub fn canonical_phase(&self) -> PureState {
        let lead = self.amplitudes.iter().find(|a| a.norm() > STATE_TOL).copied();
        match lead {
            Some(a) => {
                let phase = a / a.norm();
                Self::from_parts_unchecked(self.space.clone(), self.amplitudes.map(|z| z / phase))
            }
            None => self.clone(),
        }
    }

    pub fn to_density(&self) -> DensityOperator {
        DensityOperator::from_parts_unchecked(
            self.space.clone(),
            linalg::outer(&self.amplitudes, &self.amplitudes),
        )
    }

    /// Reduced state on the kept factors.
    pub fn reduced(&self, keep: &[&str]) -> Result<DensityOperator> {
        let keep_space = check_partition(&self.space, keep)?;
        let (keep_idx, rest_idx) = self.space.split_indices(&keep_space)?;
        let dk = keep_space.total_dim();
        let dr = self.space.total_dim() / dk;
        // ψ as a dk × dr matrix, then ρ = ψ ψ†
        let mut psi = CMatrix::zeros(dk, dr);
        for (i, a) in self.amplitudes.iter().enumerate() {
            psi[(keep_idx[i], rest_idx[i])] = *a;
        }
        Ok(DensityOperator::from_parts_unchecked(keep_space, &psi * psi.adjoint()))
    }
}

impl Tensor for PureState {
    fn tensor(&self, other: &Self) -> Result<Self> {
        let space = self.space.concat(&other.space)?;
        Ok(Self::from_parts_unchecked(space, linalg::kron_vec(&self.amplitudes, &other.amplitudes)))
    }
}

impl Evolve for PureState {
    fn evolve(&self, u: &UnitaryEvolution) -> Result<Self> {
        let m = u.matrix_on(&self.space)?;
        Ok(Self::from_parts_unchecked(self.space.clone(), m * &self.amplitudes))
    }
}

/// Hermitian, unit-trace, positive semi-definite operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct DensityOperator {
    space: HilbertSpace,
    matrix: CMatrix,
}

impl DensityOperator {
    pub fn new(space: HilbertSpace, matrix: CMatrix) -> Result<Self> {
        let n = space.total_dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::SpaceMismatch(format!(
                "{}x{} matrix for dimension {n}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let herm = linalg::hermiticity_error(&matrix);
        if herm > STATE_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let tr = linalg::trace(&matrix);
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min = linalg::hermitian_eigenvalues(&matrix)[0];
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min}")));
        }
        Ok(Self { space, matrix })
    }

    pub(crate) fn from_parts_unchecked(space: HilbertSpace, matrix: CMatrix) -> Self {
        Self { space, matrix }
    }

    pub fn maximally_mixed(space: HilbertSpace) -> Self {
        let n = space.total_dim();
        let m = CMatrix::identity(n, n).unscale(n as f64);
        Self { space, matrix: m }
    }

    /// Diagonal state with the given populations (must sum to 1).
    pub fn diagonal(space: HilbertSpace, populations: &[f64]) -> Result<Self> {
        let d = CVector::from_iterator(populations.len(), populations.iter().map(|&p| linalg::c(p, 0.0)));
        if d.len() != space.total_dim() {
            return Err(Error::SpaceMismatch("population count differs from dimension".into()));
        }
        Self::new(space, CMatrix::from_diagonal(&d))
    }

    /// Convex combination of states on the same space.
    pub fn mixture(parts: &[(f64, DensityOperator)]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::InvalidState("empty mixture".into()))?;
        let space = first.1.space.clone();
        let n = space.total_dim();
        let mut m = CMatrix::zeros(n, n);
        for (w, rho) in parts {
            let rho = rho.reordered_like(&space)?;
            m += rho.matrix.scale(*w);
        }
        Self::new(space, m)
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.matrix)
    }

    pub fn purity(&self) -> f64 {
        linalg::trace(&(&self.matrix * &self.matrix)).re
    }

    pub fn is_pure(&self, tol: f64) -> bool {
        (self.purity() - 1.0).abs() <= tol
    }

    /// Dominant eigenvector when the state is pure within `tol`.
    pub fn to_pure(&self, tol: f64) -> Option<PureState> {
        if !self.is_pure(tol) {
            return None;
        }
        let (_, vectors) = linalg::hermitian_eigen(&self.matrix);
        let v = vectors.column(vectors.ncols() - 1).into_owned();
        Some(PureState::from_parts_unchecked(self.space.clone(), v).canonical_phase())
    }

    pub fn reordered_like(&self, target: &HilbertSpace) -> Result<DensityOperator> {
        if self.space == *target {
            return Ok(self.clone());
        }
        if !self.space.same_factors(target) {
            return Err(Error::SpaceMismatch("states live on different factors".into()));
        }
        let m = linalg::permute_matrix(&self.matrix, &self.space, target)?;
        Ok(Self::from_parts_unchecked(target.clone(), m))
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn fidelity_with_pure(&self, psi: &PureState) -> Result<f64> {
        let psi = psi.reordered_like(&self.space)?;
        Ok(psi.amplitudes.dotc(&(&self.matrix * &psi.amplitudes)).re)
    }

    pub fn partial_trace(&self, keep: &[&str]) -> Result<DensityOperator> {
        partial_trace(self, keep)
    }

    pub fn entropy(&self) -> f64 {
        von_neumann_entropy(self)
    }

    /// Max element-wise distance to `other` on the same factors.
    pub fn distance(&self, other: &DensityOperator) -> Result<f64> {
        let other = other.reordered_like(&self.space)?;
        Ok(linalg::max_abs(&(&self.matrix - &other.matrix)))
    }
}

impl Tensor for DensityOperator {
    fn tensor(&self, other: &Self) -> Result<Self> {
        let space = self.space.concat(&other.space)?;
        Ok(Self::from_parts_unchecked(space, linalg::kron(&self.matrix, &other.matrix)))
    }
}

impl Evolve for DensityOperator {
    fn evolve(&self, u: &UnitaryEvolution) -> Result<Self> {
        let m = u.matrix_on(&self.space)?;
        let out = &m * &self.matrix * m.adjoint();
        Ok(Self::from_parts_unchecked(self.space.clone(), out))
    }
}

fn check_partition(space: &HilbertSpace, keep: &[&str]) -> Result<HilbertSpace> {
    if keep.is_empty() {
        return Err(Error::InvalidPartition("keep set is empty".into()));
    }
    for (i, l) in keep.iter().enumerate() {
        if !space.contains(l) {
            return Err(Error::UnknownLabel(l.to_string()));
        }
        if keep[..i].contains(l) {
            return Err(Error::InvalidPartition(format!("`{l}` listed twice")));
        }
    }
    if keep.len() == space.len() {
        return Err(Error::InvalidPartition("keep set covers every subsystem".into()));
    }
    // kept factors in the original order
    let ordered: Vec<&str> = space.labels().filter(|l| keep.contains(l)).collect();
    space.select(&ordered)
}

/// Reduced state on `keep`, a non-empty proper subset of the labels.
pub fn partial_trace(rho: &DensityOperator, keep: &[&str]) -> Result<DensityOperator> {
    let keep_space = check_partition(&rho.space, keep)?;
    let m = linalg::partial_trace(&rho.matrix, &rho.space, &keep_space)?;
    Ok(DensityOperator::from_parts_unchecked(keep_space, m))
}

/// `S(ρ) = −tr(ρ ln ρ)`, with eigenvalues below the floor contributing zero.
pub fn von_neumann_entropy(rho: &DensityOperator) -> f64 {
    let s: f64 = rho
        .eigenvalues()
        .into_iter()
        .filter(|&l| l > ENTROPY_FLOOR && l < 1.0 - ENTROPY_FLOOR)
        .map(|l| -l * l.ln())
        .sum();
    (s + 0.0).clamp(0.0, (rho.space.total_dim() as f64).ln())
}

/// Either kind of state carrier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum State {
    Pure(PureState),
    Mixed(DensityOperator),
}

impl State {
    pub fn space(&self) -> &HilbertSpace {
        match self {
            State::Pure(p) => p.space(),
            State::Mixed(m) => m.space(),
        }
    }

    pub fn to_density(&self) -> DensityOperator {
        match self {
            State::Pure(p) => p.to_density(),
            State::Mixed(m) => m.clone(),
        }
    }
}

impl From<PureState> for State {
    fn from(p: PureState) -> Self {
        State::Pure(p)
    }
}

impl From<DensityOperator> for State {
    fn from(m: DensityOperator) -> Self {
        State::Mixed(m)
    }
}

#[derive(Serialize, Deserialize)]
struct RawPure {
    subsystems: HilbertSpace,
    amplitudes: Vec<[f64; 2]>,
}

impl TryFrom<RawPure> for PureState {
    type Error = Error;

    fn try_from(raw: RawPure) -> Result<Self> {
        let v = CVector::from_iterator(raw.amplitudes.len(), raw.amplitudes.iter().map(|[r, i]| linalg::c(*r, *i)));
        PureState::new(raw.subsystems, v)
    }
}

impl From<PureState> for RawPure {
    fn from(p: PureState) -> Self {
        RawPure {
            amplitudes: p.amplitudes.iter().map(|z| [z.re, z.im]).collect(),
            subsystems: p.space,
        }
    }
}

/// JSON carrier shared by every square-matrix type.
#[derive(Serialize, Deserialize)]
pub(crate) struct RawMatrix {
    pub subsystems: HilbertSpace,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

pub(crate) fn matrix_to_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub(crate) fn rows_to_matrix(rows: &[Vec<[f64; 2]>]) -> Result<CMatrix> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::SpaceMismatch("matrix rows are ragged or non-square".into()));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| linalg::c(rows[i][j][0], rows[i][j][1])))
}

impl TryFrom<RawMatrix> for DensityOperator {
    type Error = Error;

    fn try_from(raw: RawMatrix) -> Result<Self> {
        DensityOperator::new(raw.subsystems, rows_to_matrix(&raw.matrix)?)
    }
}

impl From<DensityOperator> for RawMatrix {
    fn from(d: DensityOperator) -> Self {
        RawMatrix { matrix: matrix_to_rows(&d.matrix), subsystems: d.space }
    }
}

/// `(|01⟩ − |10⟩)/√2` on two qubits.
pub fn singlet(a: &str, b: &str) -> Result<PureState> {
    let space = HilbertSpace::qubits(&[a, b])?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let v = CVector::from_vec(vec![ZERO, linalg::c(h, 0.0), linalg::c(-h, 0.0), ZERO]);
    PureState::new(space, v)
}
