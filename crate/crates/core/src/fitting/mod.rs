//! Derivative-free least-squares fitting of traces and spectra.

mod fit;
mod minimize;
mod spin_params;

pub use fit::{
    fft_frequency_estimate, fit_damped_cosine, fit_exponential, fit_lorentzian_sum, fit_power_law, ExpKind, FitModel,
    FitProblem, FitResult,
};
pub use minimize::{minimize, Bound, MinimizeOptions, Minimum};
pub use spin_params::{extract_spin_params, SpinParamConstraints, SpinParams};
