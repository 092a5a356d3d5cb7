//! Quantum properties, their degree of differentiation under pointer
//! couplings, and the roles interactions play.

mod coupling;
mod measure;
mod property;
mod reverse;
mod role;
mod run;

pub use coupling::{PointerCoupling, DEFAULT_STRENGTH_RANGE};
pub use measure::{
    coherence_overlaps, completed_degree, degree_of_differentiation, max_coherence, pointer_basis_matrix,
    reduced_from_overlaps, OverlapMatrix, AMPLITUDE_TOL,
};
pub use property::{Carrier, QuantumProperty, ValueProperty};
pub use reverse::reverse;
pub use role::{classify_mode_transformation, classify_role, InteractionRole, TREND_TOL};
pub use run::{run_differentiation, DifferentiationConfig, DifferentiationRun, TrajectoryPoint};

