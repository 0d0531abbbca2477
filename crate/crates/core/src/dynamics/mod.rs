//! Hamiltonian construction, closed-form evolution and the numeric propagator.

mod closed_form;
mod hamiltonian;
mod propagate;

pub use closed_form::{
    evolve_closed_form, evolve_closed_form_general, evolve_closed_form_general_in, evolve_closed_form_in,
};
pub use hamiltonian::{
    build_hamiltonian, excitation_operator, interaction_to_lab, Frame, HermitianOperator, ModelParams,
    HERMITICITY_TOLERANCE, RESONANCE_TOLERANCE,
};
pub use propagate::{
    expm, propagate_numeric, propagate_with, Propagator, PropagatorMethod, NORM_DRIFT_TOLERANCE,
};
