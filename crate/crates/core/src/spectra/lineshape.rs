use std::f64::consts::LN_2;

use crate::error::{domain, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LineKind {
    Lorentzian,
    Gaussian,
}

/// Unit-peak line profile. `fwhm` is in the units of the axis it is evaluated on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineShape {
    kind: LineKind,
    fwhm: f64,
    derivative: bool,
}

impl LineShape {
    pub fn new(kind: LineKind, fwhm: f64) -> Result<Self> {
        if !(fwhm > 0.0 && fwhm.is_finite()) {
            return domain(format!("line width must be positive, got {fwhm}"));
        }
        Ok(LineShape { kind, fwhm, derivative: false })
    }

    pub fn lorentzian(fwhm: f64) -> Result<Self> {
        Self::new(LineKind::Lorentzian, fwhm)
    }

    pub fn gaussian(fwhm: f64) -> Result<Self> {
        Self::new(LineKind::Gaussian, fwhm)
    }

    /// First-derivative presentation, as recorded by field-modulated cw-ESR.
    pub fn derivative(self) -> Self {
        LineShape { derivative: true, ..self }
    }

    pub fn kind(&self) -> LineKind {
        self.kind
    }
    pub fn fwhm(&self) -> f64 {
        self.fwhm
    }
    pub fn is_derivative(&self) -> bool {
        self.derivative
    }

    /// Profile value at offset `x` from the line centre.
    pub fn eval(&self, x: f64) -> f64 {
        let gamma = self.fwhm;
        match (self.kind, self.derivative) {
            (LineKind::Lorentzian, false) => {
                let u = 2.0 * x / gamma;
                1.0 / (1.0 + u * u)
            }
            (LineKind::Lorentzian, true) => {
                let u = 2.0 * x / gamma;
                let d = 1.0 + u * u;
                -4.0 * u / (gamma * d * d)
            }
            (LineKind::Gaussian, false) => (-4.0 * LN_2 * x * x / (gamma * gamma)).exp(),
            (LineKind::Gaussian, true) => {
                let a = 4.0 * LN_2 / (gamma * gamma);
                -2.0 * a * x * (-a * x * x).exp()
            }
        }
    }

    /// Offset beyond which the profile is negligible for grid bookkeeping.
    pub fn reach(&self) -> f64 {
        match self.kind {
            LineKind::Lorentzian => 50.0 * self.fwhm,
            LineKind::Gaussian => 4.0 * self.fwhm,
        }
    }
}
