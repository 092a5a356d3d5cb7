use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("subsystem label `{0}` appears on both operands")]
    LabelClash(String),
    #[error("duplicate subsystem label `{0}`")]
    DuplicateLabel(String),
    #[error("subsystem `{label}` has dimension {dim}; every factor needs at least 2 levels")]
    InvalidDimension { label: String, dim: usize },
    #[error("total dimension {dim} exceeds the cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("unknown subsystem label `{0}`")]
    UnknownLabel(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("operator is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("operator is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),
    #[error("observable has degenerate eigenvalues ({0} and {1})")]
    DegenerateObservable(f64, f64),
    #[error("every outcome probability is below 1e-12")]
    NumericalDegeneracy,
    #[error("coupling does not commute with the pointer observable (deviation {0:.3e})")]
    NotPointerDiagonal(f64),
    #[error("overlap trajectory is not monotone: {trajectory:?}")]
    AmbiguousRole { trajectory: Vec<f64> },
    #[error("irreversible context: {0}")]
    IrreversibleContext(String),
    #[error("unknown system `{0}`")]
    UnknownSystem(String),
    #[error("system `{0}` is already part of the graph")]
    DuplicateSystem(String),
    #[error("value determination {from} -> {to} would close a cycle")]
    CycleRejected { from: String, to: String },
    #[error("value determination {from} -> {to} targets a prime initiator")]
    PrimeTarget { from: String, to: String },
    #[error("value determination {from} -> {to} joins systems at different positions")]
    NonLocal { from: String, to: String },
    #[error("event at t = {t} precedes the chain clock at {clock}")]
    NonMonotoneTime { t: f64, clock: f64 },
    #[error("invalid stability parameters: {0}")]
    InvalidStability(String),
    #[error("isolation boundary is empty")]
    EmptyBoundary,
    #[error("invalid process: {0}")]
    InvalidProcess(String),
    #[error("no intervention supplied for node `{0}`")]
    IncompleteInterventionSet(String),
    #[error("factor `{node}` is not diagonal (max off-diagonal magnitude {max_off_diagonal:.3e})")]
    NotDiagonal { node: String, max_off_diagonal: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
