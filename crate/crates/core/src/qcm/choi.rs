use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::linalg::{self, CMatrix, ONE};
use crate::quantum::{matrix_to_rows, rows_to_matrix};
use crate::quantum::{DensityOperator, HilbertSpace, Subsystem, UnitaryEvolution};

/// Positivity and trace tolerance for Choi matrices.
pub const CHOI_TOL: f64 = 1e-9;

/// Choi–Jamiołkowski operator `Σ_ij E(|i⟩⟨j|) ⊗ |i⟩⟨j|` of a CP map
/// `E: input → output`, on `output ⊗ input`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawChoi", into = "RawChoi")]
pub struct ChoiMatrix {
    input: HilbertSpace,
    output: HilbertSpace,
    matrix: CMatrix,
}

#[derive(Serialize, Deserialize)]
struct RawChoi {
    input: Vec<Subsystem>,
    output: Vec<Subsystem>,
    matrix: Vec<Vec<[f64; 2]>>,
}

impl From<ChoiMatrix> for RawChoi {
    fn from(c: ChoiMatrix) -> Self {
        RawChoi {
            input: c.input.subsystems().to_vec(),
            output: c.output.subsystems().to_vec(),
            matrix: matrix_to_rows(&c.matrix),
        }
    }
}

impl TryFrom<RawChoi> for ChoiMatrix {
    type Error = Error;
    fn try_from(r: RawChoi) -> Result<Self> {
        ChoiMatrix::new(HilbertSpace::new(r.input)?, HilbertSpace::new(r.output)?, rows_to_matrix(&r.matrix)?)
    }
}

impl ChoiMatrix {
    /// Checks Hermiticity and positivity (within `CHOI_TOL`).
    pub fn new(input: HilbertSpace, output: HilbertSpace, matrix: CMatrix) -> Result<Self> {
        let space = output.concat(&input)?;
        let n = space.total_dim();
        if matrix.shape() != (n, n) {
            return Err(Error::SpaceMismatch(format!("Choi matrix is {:?}, expected {n}×{n}", matrix.shape())));
        }
        let herm = linalg::hermiticity_error(&matrix);
        if herm > CHOI_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let min = linalg::hermitian_eigenvalues(&matrix).first().copied().unwrap_or(0.0);
        if min < -CHOI_TOL {
            return Err(Error::InvalidProcess(format!("Choi matrix has eigenvalue {min:.3e}")));
        }
        Ok(Self { input, output, matrix })
    }

    /// State preparation: a map from the trivial space.
    pub fn from_state(rho: &DensityOperator) -> Self {
        Self { input: HilbertSpace::trivial(), output: rho.space().clone(), matrix: rho.matrix().clone() }
    }

    /// `u` read as a channel from `input` to `output`, which rename the
    /// factors of `u` in order.
    pub fn of_unitary(u: &UnitaryEvolution, input: &[&str], output: &[&str]) -> Result<Self> {
        if input.len() != u.space().len() || output.len() != u.space().len() {
            return Err(Error::SpaceMismatch("label lists must name every factor of the unitary".into()));
        }
        let input = u.space().relabel(input)?;
        let output = u.space().relabel(output)?;
        let d = input.total_dim();
        // (U ⊗ I)|Ω⟩, |Ω⟩ = Σ_i |i⟩|i⟩
        let mut v = linalg::CVector::zeros(d * d);
        for i in 0..d {
            for k in 0..d {
                v[k * d + i] = u.matrix()[(k, i)];
            }
        }
        Self::new(input, output, linalg::outer(&v, &v))
    }

    /// Channel that passes the `keep` factors of `input` on to `output` (in
    /// order) and discards the rest: `Φ_{output,keep} ⊗ I_rest`.
    pub fn marginal_channel(input: &HilbertSpace, keep: &[&str], output: &HilbertSpace) -> Result<Self> {
        let kept = input.select(keep)?;
        if kept.dims() != output.dims() {
            return Err(Error::SpaceMismatch("kept factors and output have different dimensions".into()));
        }
        let d = kept.total_dim();
        let mut phi = CMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                phi[(i * d + i, j * d + j)] = ONE;
            }
        }
        let local = output.concat(&kept)?;
        let full = output.concat(input)?;
        let matrix = linalg::embed(&phi, &local, &full)?;
        Self::new(input.clone(), output.clone(), matrix)
    }

    pub fn identity_channel(input: &HilbertSpace, output: &HilbertSpace) -> Result<Self> {
        let labels: Vec<&str> = input.labels().collect();
        Self::marginal_channel(input, &labels, output)
    }

    /// The same map followed and preceded by complete dephasing in the
    /// computational basis: the diagonal of the Choi matrix.
    pub fn dephased(&self) -> Self {
        let n = self.matrix.nrows();
        let matrix = CMatrix::from_fn(n, n, |i, j| if i == j { self.matrix[(i, i)] } else { linalg::ZERO });
        Self { matrix, ..self.clone() }
    }

    pub fn input(&self) -> &HilbertSpace {
        &self.input
    }

    pub fn output(&self) -> &HilbertSpace {
        &self.output
    }

    /// `output ⊗ input`.
    pub fn space(&self) -> HilbertSpace {
        self.output.concat(&self.input).expect("checked at construction")
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn rank(&self, tol: f64) -> usize {
        linalg::hermitian_eigenvalues(&self.matrix).into_iter().filter(|&l| l > tol).count()
    }

    /// `max |Tr_out C − I_in|`.
    pub fn trace_preservation_error(&self) -> f64 {
        let reduced = linalg::partial_trace(&self.matrix, &self.space(), &self.input).expect("input is a factor");
        let d = self.input.total_dim();
        linalg::max_abs(&(reduced - CMatrix::identity(d, d)))
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.trace_preservation_error() <= CHOI_TOL
    }

    /// `E(ρ) = Tr_in[C (I_out ⊗ ρ^T)]`.
    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        let r = rho.reordered_like(&self.input)?;
        let space = self.space();
        let lifted = linalg::embed(&r.matrix().transpose(), &self.input, &space)?;
        let out = linalg::partial_trace(&(&self.matrix * lifted), &space, &self.output)?;
        DensityOperator::new(self.output.clone(), (&out + out.adjoint()) * linalg::c(0.5, 0.0))
    }

    /// `C` with its input and output factors renamed in order.
    pub fn relabeled(&self, input: &[&str], output: &[&str]) -> Result<Self> {
        let input = self.input.relabel(input)?;
        let output = self.output.relabel(output)?;
        output.concat(&input)?;
        Ok(Self { input, output, matrix: self.matrix.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::linalg::c;
    use crate::quantum::PureState;

    fn q(labels: &[&str]) -> HilbertSpace {
        HilbertSpace::qubits(labels).unwrap()
    }

    #[test]
    fn identity_channel_is_rank_one_and_transparent() {
        let id = ChoiMatrix::identity_channel(&q(&["x"]), &q(&["y"])).unwrap();
        assert_eq!(id.rank(1e-9), 1);
        assert!(id.is_trace_preserving());
        let psi =
            PureState::normalized(q(&["x"]), nalgebra::dvector![c(0.6, 0.0), c(0.0, 0.8)]).unwrap().to_density();
        let out = id.apply(&psi).unwrap();
        assert!(linalg::max_abs(&(out.matrix() - psi.matrix())) < 1e-12);
    }

    #[test]
    fn marginal_channel_traces_the_rest() {
        let input = q(&["a", "b"]);
        let ch = ChoiMatrix::marginal_channel(&input, &["b"], &q(&["o"])).unwrap();
        assert!(ch.is_trace_preserving());
        let rho = crate::quantum::singlet("a", "b").unwrap().to_density();
        let out = ch.apply(&rho).unwrap();
        assert!(linalg::max_abs(&(out.matrix() - CMatrix::identity(2, 2) * c(0.5, 0.0))) < 1e-12);
        assert!(ch.dephased().is_trace_preserving());
    }

    #[test]
    fn json_round_trip() {
        let id = ChoiMatrix::identity_channel(&q(&["x"]), &q(&["y"])).unwrap();
        let s = serde_json::to_string(&id).unwrap();
        let back: ChoiMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, id);
    }
}
