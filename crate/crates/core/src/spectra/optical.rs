use nalgebra::Vector3;

use super::lineshape::LineShape;
use super::odmr::system_metadata;
use super::spectrum::{check_axis, AxisUnit, Spectrum};
use crate::error::{domain, Result};
use crate::io::Metadata;
use crate::spin::{build_hamiltonian, eigensystem, triplet_levels, FieldPoint, Spin, SpinSystem, Sublevel};

/// Speed of light in nm·GHz.
pub const SPEED_OF_LIGHT_NM_GHZ: f64 = 2.99792458e8;

/// Optical interface between the spin-triplet ground state and the emitting singlet.
#[derive(Clone, Debug, PartialEq)]
pub struct OpticalModel {
    pub zpl_wavelength_nm: f64,
    /// Excited-state lifetime, microseconds.
    pub t_opt_us: f64,
    pub inhomogeneous_fwhm_ghz: f64,
    pub homogeneous_fwhm_ghz: f64,
    /// Decay probabilities from the singlet into `|0>, |->, |+>`.
    pub branching: [f64; 3],
    pub debye_waller: f64,
    pub dipole_axis: Vector3<f64>,
}

impl OpticalModel {
    /// Model with uniform branching and the remaining parameters at neutral defaults.
    pub fn new(zpl_wavelength_nm: f64, t_opt_us: f64) -> Result<Self> {
        OpticalModel {
            zpl_wavelength_nm,
            t_opt_us,
            inhomogeneous_fwhm_ghz: 150.0,
            homogeneous_fwhm_ghz: 5.0,
            branching: [1.0 / 3.0; 3],
            debye_waller: 0.5,
            dipole_axis: Vector3::x(),
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.zpl_wavelength_nm > 0.0 && self.zpl_wavelength_nm.is_finite()) {
            return domain("ZPL wavelength must be positive");
        }
        if !(self.t_opt_us > 0.0 && self.t_opt_us.is_finite()) {
            return domain("optical lifetime must be positive");
        }
        if !(self.inhomogeneous_fwhm_ghz > 0.0 && self.homogeneous_fwhm_ghz > 0.0) {
            return domain("optical line widths must be positive");
        }
        if self.homogeneous_fwhm_ghz > self.inhomogeneous_fwhm_ghz {
            return domain("homogeneous width cannot exceed the inhomogeneous width");
        }
        if self.branching.iter().any(|&b| !(b >= 0.0)) || (self.branching.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return domain(format!("branching ratios must be non-negative and sum to 1, got {:?}", self.branching));
        }
        if !(self.debye_waller > 0.0 && self.debye_waller <= 1.0) {
            return domain("Debye-Waller fraction must lie in (0, 1]");
        }
        if (self.dipole_axis.norm() - 1.0).abs() > 1e-12 {
            return domain("dipole axis must be a unit vector");
        }
        Ok(self)
    }

    pub fn zpl_frequency_ghz(&self) -> f64 {
        SPEED_OF_LIGHT_NM_GHZ / self.zpl_wavelength_nm
    }

    pub fn t_opt_s(&self) -> f64 {
        self.t_opt_us * 1e-6
    }

    fn metadata(&self) -> Metadata {
        Metadata::new()
            .with("zpl_nm", self.zpl_wavelength_nm)
            .with("t_opt_us", self.t_opt_us)
            .with("inhomogeneous_fwhm_ghz", self.inhomogeneous_fwhm_ghz)
            .with("homogeneous_fwhm_ghz", self.homogeneous_fwhm_ghz)
    }
}

/// Emission spectrum in a field and its difference from the zero-field spectrum.
#[derive(Clone, Debug)]
pub struct ZeemanPl {
    pub at_field: Spectrum,
    pub differential: Spectrum,
}

fn emission_lines(sys: &SpinSystem, optical: &OpticalModel, b_tesla: f64) -> Result<Vec<(f64, f64)>> {
    let field = FieldPoint::new(sys.zfs_axis() * b_tesla, Vector3::x())?;
    let eig = eigensystem(&build_hamiltonian(sys, &field))?;
    let levels = triplet_levels(sys, &eig)?;
    let nu_zpl = optical.zpl_frequency_ghz();
    Ok(Sublevel::ALL
        .iter()
        .map(|&s| {
            let energy = eig.energies[levels.get(s)];
            (nu_zpl - energy, optical.branching[s.index()] * optical.debye_waller)
        })
        .collect())
}

fn render_emission(lines: &[(f64, f64)], wavelengths_nm: &[f64], line: &LineShape) -> Vec<f64> {
    wavelengths_nm
        .iter()
        .map(|&lambda| {
            let nu = SPEED_OF_LIGHT_NM_GHZ / lambda;
            lines.iter().map(|&(nu0, w)| w * line.eval(nu - nu0)).sum()
        })
        .collect()
}

/// Zero-phonon emission from the singlet into each ground sublevel, with the field
/// along the molecular axis. Each line sits at `nu_ZPL - E_i` and carries its
/// branching weight; `line` is a frequency-domain profile (GHz).
pub fn zeeman_pl_spectrum(
    sys: &SpinSystem,
    optical: &OpticalModel,
    b_tesla: f64,
    wavelengths_nm: &[f64],
    line: &LineShape,
) -> Result<ZeemanPl> {
    if sys.spin() != Spin::ONE {
        return domain("emission model is defined for S = 1 ground states");
    }
    if !(b_tesla >= 0.0 && b_tesla.is_finite()) {
        return domain(format!("field must be non-negative, got {b_tesla} T"));
    }
    check_axis(wavelengths_nm, "wavelength")?;
    if wavelengths_nm[0] <= 0.0 {
        return domain("wavelengths must be positive");
    }
    let lines = emission_lines(sys, optical, b_tesla)?;
    let reference = emission_lines(sys, optical, 0.0)?;
    let on = render_emission(&lines, wavelengths_nm, line);
    let off = render_emission(&reference, wavelengths_nm, line);
    let diff: Vec<f64> = on.iter().zip(&off).map(|(a, b)| a - b).collect();

    let (lo, hi) = (wavelengths_nm[0], wavelengths_nm[wavelengths_nm.len() - 1]);
    let outside = lines.iter().any(|&(nu, _)| {
        let lambda = SPEED_OF_LIGHT_NM_GHZ / nu;
        lambda < lo || lambda > hi
    });
    let mut metadata = system_metadata(sys).with("kind", "zeeman_pl").with("field_t", b_tesla);
    for (k, v) in optical.metadata().iter() {
        metadata.set(k, v);
    }
    metadata.set("line_fwhm_ghz", line.fwhm());
    if outside {
        metadata.set("warning", "emission lines outside wavelength grid");
    }
    Ok(ZeemanPl {
        at_field: Spectrum::new(wavelengths_nm.to_vec(), on, AxisUnit::Nanometer, metadata.clone())?,
        differential: Spectrum::new(
            wavelengths_nm.to_vec(),
            diff,
            AxisUnit::Nanometer,
            metadata.with("kind", "zeeman_pl_differential"),
        )?,
    })
}

/// Photoluminescence excitation profile: unit-peak Gaussian with the inhomogeneous width.
pub fn ple_profile(optical: &OpticalModel, detunings_ghz: &[f64]) -> Result<Spectrum> {
    check_axis(detunings_ghz, "detuning")?;
    let line = LineShape::gaussian(optical.inhomogeneous_fwhm_ghz)?;
    let values = detunings_ghz.iter().map(|&d| line.eval(d)).collect();
    Spectrum::new(detunings_ghz.to_vec(), values, AxisUnit::Gigahertz, optical.metadata().with("kind", "ple"))
}

/// Relative excitation efficiency for laser polarization at `theta_deg` from the dipole.
pub fn polarization_response(theta_deg: f64) -> f64 {
    theta_deg.to_radians().cos().powi(2)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Excitation {
    /// Every molecule of the inhomogeneous distribution is excited.
    OffResonant,
    /// A narrow laser at this detuning from the ensemble centre selects a subensemble.
    Resonant { laser_detuning_ghz: f64 },
}

/// Emission profile versus detuning from the ensemble ZPL centre.
///
/// Molecule centres follow a Gaussian of the inhomogeneous width and each emits a
/// Lorentzian of the homogeneous width. Resonant excitation weights each centre by its
/// homogeneous absorption at the laser frequency, which narrows the emission.
pub fn emission_profile(optical: &OpticalModel, detunings_ghz: &[f64], excitation: Excitation) -> Result<Spectrum> {
    check_axis(detunings_ghz, "detuning")?;
    let inhom = LineShape::gaussian(optical.inhomogeneous_fwhm_ghz)?;
    let hom = LineShape::lorentzian(optical.homogeneous_fwhm_ghz)?;
    let half_span = 3.0 * optical.inhomogeneous_fwhm_ghz;
    let step = (optical.homogeneous_fwhm_ghz / 10.0).min(optical.inhomogeneous_fwhm_ghz / 200.0);
    let n = (2.0 * half_span / step).ceil() as usize + 1;
    let centres: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let c = -half_span + 2.0 * half_span * k as f64 / (n - 1) as f64;
            let weight = match excitation {
                Excitation::OffResonant => inhom.eval(c),
                Excitation::Resonant { laser_detuning_ghz } => inhom.eval(c) * hom.eval(laser_detuning_ghz - c),
            };
            (c, weight)
        })
        .filter(|&(_, w)| w > 1e-12)
        .collect();
    let mut values: Vec<f64> = detunings_ghz
        .iter()
        .map(|&nu| centres.iter().map(|&(c, w)| w * hom.eval(nu - c)).sum())
        .collect();
    let peak = values.iter().copied().fold(0.0, f64::max);
    if peak > 0.0 {
        values.iter_mut().for_each(|v| *v /= peak);
    }
    let label = match excitation {
        Excitation::OffResonant => "off_resonant".to_string(),
        Excitation::Resonant { laser_detuning_ghz } => format!("resonant {laser_detuning_ghz}"),
    };
    Spectrum::new(
        detunings_ghz.to_vec(),
        values,
        AxisUnit::Gigahertz,
        optical.metadata().with("kind", "emission").with("excitation", label),
    )
}
