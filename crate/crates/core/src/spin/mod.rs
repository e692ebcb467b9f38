//! Spin operators, the zero-field-splitting Hamiltonian, eigensolving and
//! microwave transition tables.

mod eigen;
mod hamiltonian;
mod operators;
mod transitions;

pub use eigen::{eigensystem, EigenSystem};
pub use hamiltonian::{build_hamiltonian, FieldPoint, SpinSystem, H_OVER_KB, MU_B_OVER_H};
pub use operators::{spin_operators, Spin, SpinOperators};
pub use transitions::{
    boltzmann_populations, transition_table, transitions_from, triplet_levels, Sublevel, Transition, TripletLevels,
};
