//! Quantum causal models: Choi operators, process operators over DAGs,
//! the quantum Markov condition and its classical limit.

mod bell;
mod choi;
mod process;

#[cfg(test)]
mod tests;

pub use bell::{BellModel, ALICE, BOB, SOURCE};
pub use choi::{ChoiMatrix, CHOI_TOL};
pub use process::{
    check_qmc, classical_limit, no_influence, qcm_born, ClassicalModel, ConditionalTable, Instrument, InterventionMap,
    ProcessOperator, QcmNode, QmcReport, DIAGONAL_TOL, PROCESS_TOL,
};
