use nalgebra::{DMatrix, Rotation3, Unit, Vector3};
use num_complex::Complex64;

use super::operators::{spin_operators, Spin, SpinOperators};
use crate::error::{domain, Result};

/// Bohr magneton over Planck's constant, GHz/T.
pub const MU_B_OVER_H: f64 = 13.996244936;

/// Planck's constant over Boltzmann's constant, K/GHz.
pub const H_OVER_KB: f64 = 0.047992430734;

const UNIT_NORM_TOL: f64 = 1e-12;

fn check_unit(v: &Vector3<f64>, what: &str) -> Result<()> {
    if !v.iter().all(|c| c.is_finite()) || (v.norm() - 1.0).abs() > UNIT_NORM_TOL {
        return domain(format!("{what} must be a unit vector, got norm {}", v.norm()));
    }
    Ok(())
}

/// Magnetic parameters of one spin centre. Energies in GHz.
///
/// The zero-field-splitting frame is stored as a full rotation (molecular to lab) so
/// that rhombic (`E > 0`) systems stay well defined under arbitrary reorientation;
/// [`SpinSystem::with_zfs_axis`] picks the minimal rotation taking lab z onto the axis.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinSystem {
    spin: Spin,
    d: f64,
    e: f64,
    g: f64,
    frame: Rotation3<f64>,
}

impl SpinSystem {
    pub fn new(spin: Spin, d: f64, e: f64, g: f64) -> Result<Self> {
        if !(d.is_finite() && e.is_finite() && g.is_finite()) {
            return domain("D, E and g must be finite");
        }
        if d < 0.0 || e < 0.0 {
            return domain(format!("D and E must be non-negative, got D={d}, E={e}"));
        }
        if e > d / 3.0 * (1.0 + 1e-12) {
            return domain(format!("E must not exceed D/3, got D={d}, E={e}"));
        }
        Ok(SpinSystem { spin, d, e, g, frame: Rotation3::identity() })
    }

    /// Spin-1 system with the molecular axis along lab z.
    pub fn triplet(d: f64, e: f64, g: f64) -> Result<Self> {
        Self::new(Spin::ONE, d, e, g)
    }

    pub fn with_zfs_axis(self, axis: Vector3<f64>) -> Result<Self> {
        check_unit(&axis, "zfs_axis")?;
        let frame = Rotation3::rotation_between(&Vector3::z(), &axis)
            // antiparallel: any half turn about an axis perpendicular to z
            .unwrap_or_else(|| Rotation3::from_axis_angle(&Vector3::x_axis(), std::f64::consts::PI));
        Ok(SpinSystem { frame, ..self })
    }

    pub fn with_frame(self, frame: Rotation3<f64>) -> Self {
        SpinSystem { frame, ..self }
    }

    pub fn spin(&self) -> Spin {
        self.spin
    }
    pub fn d(&self) -> f64 {
        self.d
    }
    pub fn e(&self) -> f64 {
        self.e
    }
    pub fn g(&self) -> f64 {
        self.g
    }
    pub fn frame(&self) -> &Rotation3<f64> {
        &self.frame
    }
    pub fn zfs_axis(&self) -> Vector3<f64> {
        self.frame * Vector3::z()
    }

    /// Zeeman frequency per tesla, `g muB / h` in GHz/T.
    pub fn gyromagnetic_ghz_per_t(&self) -> f64 {
        self.g * MU_B_OVER_H
    }

    /// Spin operators projected on the molecular axes, expressed in the lab basis.
    pub fn molecular_operators(&self, lab: &SpinOperators) -> SpinOperators {
        let x = lab.project(&(self.frame * Vector3::x()));
        let y = lab.project(&(self.frame * Vector3::y()));
        let z = lab.project(&(self.frame * Vector3::z()));
        SpinOperators { x, y, z }
    }
}

/// Static field (tesla) and microwave drive direction at one sample point.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldPoint {
    pub b0: Vector3<f64>,
    b1_dir: Vector3<f64>,
}

impl FieldPoint {
    pub fn new(b0: Vector3<f64>, b1_dir: Vector3<f64>) -> Result<Self> {
        if !b0.iter().all(|c| c.is_finite()) {
            return domain("B0 must be finite");
        }
        check_unit(&b1_dir, "B1 direction")?;
        Ok(FieldPoint { b0, b1_dir })
    }

    /// Field of `tesla` along `axis` with the drive along lab x.
    pub fn along(axis: Unit<Vector3<f64>>, tesla: f64) -> Self {
        FieldPoint { b0: axis.into_inner() * tesla, b1_dir: Vector3::x() }
    }

    pub fn zero() -> Self {
        FieldPoint { b0: Vector3::zeros(), b1_dir: Vector3::x() }
    }

    pub fn b1_dir(&self) -> &Vector3<f64> {
        &self.b1_dir
    }

    pub fn with_b1_dir(self, b1_dir: Vector3<f64>) -> Result<Self> {
        Self::new(self.b0, b1_dir)
    }
}

/// `H/h = D(Sz'^2 - S(S+1)/3) + E(Sx'^2 - Sy'^2) + g muB/h B0.S`, in GHz, lab basis.
pub fn build_hamiltonian(sys: &SpinSystem, field: &FieldPoint) -> DMatrix<Complex64> {
    let lab = spin_operators(sys.spin);
    let mol = sys.molecular_operators(&lab);
    let n = lab.dim();
    let id = DMatrix::<Complex64>::identity(n, n);
    let c = Complex64::from;

    let zfs = (&mol.z * &mol.z - &id * c(sys.spin.casimir() / 3.0)) * c(sys.d)
        + (&mol.x * &mol.x - &mol.y * &mol.y) * c(sys.e);
    let zeeman = lab.project(&field.b0) * c(sys.gyromagnetic_ghz_per_t());
    let h = zfs + zeeman;
    // symmetrize away rounding asymmetry from the operator products
    (&h + h.adjoint()) * c(0.5)
}
