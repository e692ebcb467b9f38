//! Optical pumping, coherent microwave control and the protocols built from them.

mod coherent;
mod engine;
mod executor;
mod model;
mod protocols;
mod rates;

pub use coherent::{mw_propagator, physicality, CoherentParams, TwoLevelPropagator};
pub use engine::{HybridState, PhysicalityReport};
pub use executor::{execute_sequence, ExecOptions, Execution, Executor, PointResult, PulseModel};
pub use model::{
    rabi_frequency_from_drive, AddressableTransition, GroundRelaxation, PopulationState, PopulationTrace, PumpModel,
    Trace,
};
pub use protocols::{
    simulate_hahn_echo, simulate_hahn_echo_with, simulate_hole_burning, simulate_pulsed_odmr,
    simulate_pulsed_odmr_with, simulate_rabi, simulate_rabi_with, simulate_t1_recovery, HahnEcho, HoleBurning,
    ReadoutProtocol,
};
pub use rates::{build_rate_matrix, integrate_populations, steady_state, steady_state_contrast};
