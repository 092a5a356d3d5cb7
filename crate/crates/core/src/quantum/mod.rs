//! Dense linear algebra over small labeled composite Hilbert spaces.

pub mod linalg;
mod operator;
mod space;
mod state;

pub use operator::{
    born_probabilities, born_sample, sample_index, MeasurementOutcome, Observable, ProjectiveMeasurement,
    UnitaryEvolution,
};
pub use space::{HilbertSpace, Subsystem, DEFAULT_DIM_CAP};
pub(crate) use state::{matrix_to_rows, rows_to_matrix};
pub use state::{partial_trace, singlet, von_neumann_entropy, DensityOperator, Evolve, PureState, State, Tensor};

/// Hermiticity, trace and norm tolerance.
pub const STATE_TOL: f64 = 1e-9;
/// Unitarity tolerance.
pub const UNITARY_TOL: f64 = 1e-8;
/// Eigenvalues below this contribute nothing to the entropy.
pub const ENTROPY_FLOOR: f64 = 1e-12;
/// Outcome probabilities below this are treated as impossible.
pub const PROBABILITY_FLOOR: f64 = 1e-12;
