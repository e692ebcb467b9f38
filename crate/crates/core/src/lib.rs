//! Spin Hamiltonians, spectra, optical-pumping and coherent dynamics, a pulse
//! sequence language and least-squares fitting for S=1 molecular qubits.

pub mod dynamics;
pub mod error;
pub mod fitting;
pub mod io;
pub mod seqlang;
pub mod spectra;
pub mod spin;

pub use error::{Error, Result};
