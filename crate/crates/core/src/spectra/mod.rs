//! Synthesized spectra: cw-ESR field sweeps, ODMR maps, photoluminescence and PLE.

mod esr;
mod lineshape;
mod odmr;
mod optical;
mod spectrum;

pub use esr::{cw_esr_spectrum, fibonacci_hemisphere, resonance_fields, Orientation, Resonance, X_BAND_GHZ};
pub use lineshape::{LineKind, LineShape};
pub use odmr::{odmr_map, OdmrSettings};
pub use optical::{
    emission_profile, ple_profile, polarization_response, zeeman_pl_spectrum, Excitation, OpticalModel, ZeemanPl,
    SPEED_OF_LIGHT_NM_GHZ,
};
pub use spectrum::{AxisUnit, OdmrMap, Spectrum};
