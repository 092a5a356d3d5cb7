//! Stable and unstable differentiation chains as a timestamped DAG of
//! value-determination links.

mod dot;
mod graph;
mod validate;

pub use graph::{
    ChainEvent, ChainGraph, ChainNode, Gate, IsolationOutcome, Membership, RoleClass, StabilityParams, TickOutcome,
    ValueDeterminationEdge,
};
pub use validate::{UniverseConditions, ValidationReport, Violation};
