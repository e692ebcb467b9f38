use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;

use crate::error::{domain, Result};
use crate::spin::Sublevel;

/// Microwave drive and decoherence of one sublevel pair.
#[derive(Clone, Debug, PartialEq)]
pub struct CoherentParams {
    /// Cyclic Rabi frequency at unit amplitude, MHz.
    pub rabi_frequency_mhz: f64,
    /// Drive frequency minus transition frequency, MHz.
    pub detuning_mhz: f64,
    /// Total coherence decay time, ns. May be infinite.
    pub t2_ns: f64,
    /// Drive phase, radians.
    pub mw_phase: f64,
    /// Longitudinal relaxation of the standalone two-level propagator; `None` disables it.
    pub t1_ms: Option<f64>,
    /// Sublevel pair addressed when a pulse gives no frequency.
    pub transition: (Sublevel, Sublevel),
}

impl CoherentParams {
    pub fn new(rabi_frequency_mhz: f64, detuning_mhz: f64, t2_ns: f64) -> Result<Self> {
        CoherentParams {
            rabi_frequency_mhz,
            detuning_mhz,
            t2_ns,
            mw_phase: 0.0,
            t1_ms: None,
            transition: (Sublevel::Zero, Sublevel::Minus),
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.rabi_frequency_mhz >= 0.0 && self.rabi_frequency_mhz.is_finite()) {
            return domain(format!("Rabi frequency must be finite and non-negative, got {}", self.rabi_frequency_mhz));
        }
        if !self.detuning_mhz.is_finite() || !self.mw_phase.is_finite() {
            return domain("detuning and phase must be finite");
        }
        if !(self.t2_ns > 0.0) {
            return domain(format!("T2 must be positive, got {} ns", self.t2_ns));
        }
        if let Some(t1) = self.t1_ms {
            if !(t1 > 0.0) {
                return domain(format!("T1 must be positive, got {t1} ms"));
            }
            if self.t2_ns * 1e-9 > 2.0 * t1 * 1e-3 {
                return domain("T2 cannot exceed 2 T1");
            }
        }
        if self.transition.0 == self.transition.1 {
            return domain("the addressed transition needs two distinct sublevels");
        }
        Ok(self)
    }

    pub fn t2_s(&self) -> f64 {
        self.t2_ns * 1e-9
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Lindblad generator acting on column-stacked density matrices.
///
/// `h` is in rad/s. Uses `vec(A rho B) = (B^T kron A) vec(rho)`.
pub(crate) fn liouvillian(h: &DMatrix<Complex64>, jumps: &[DMatrix<Complex64>]) -> DMatrix<Complex64> {
    let n = h.nrows();
    let id = DMatrix::<Complex64>::identity(n, n);
    let minus_i = Complex64::new(0.0, -1.0);
    let mut l = (id.kronecker(h) - h.transpose().kronecker(&id)) * minus_i;
    for j in jumps {
        let jdj = j.adjoint() * j;
        l += j.conjugate().kronecker(j);
        l -= id.kronecker(&jdj) * c(0.5);
        l -= jdj.transpose().kronecker(&id) * c(0.5);
    }
    l
}

/// Rotating-frame drive Hamiltonian on a pair in rad/s:
/// `2 pi (delta sz/2 + f_R (cos phi sx + sin phi sy)/2)`, frequencies in Hz.
pub(crate) fn pair_hamiltonian(detuning_hz: f64, rabi_hz: f64, phase: f64) -> Matrix2<Complex64> {
    let w = 2.0 * PI;
    let off = Complex64::from_polar(w * rabi_hz / 2.0, -phase);
    Matrix2::new(c(w * detuning_hz / 2.0), off, off.conj(), c(-w * detuning_hz / 2.0))
}

/// Instantaneous rotation by `angle` about `cos phi x + sin phi y`.
pub(crate) fn rotation(angle: f64, phase: f64) -> Matrix2<Complex64> {
    let (s, co) = (angle / 2.0).sin_cos();
    let off = Complex64::new(0.0, -s) * Complex64::from_polar(1.0, -phase);
    Matrix2::new(c(co), off, -off.conj(), c(co))
}

/// Evolution of the two-level density matrix of the addressed pair.
#[derive(Clone, Debug)]
pub struct TwoLevelPropagator {
    /// Coherent part alone.
    pub unitary: Matrix2<Complex64>,
    /// Full dissipative map on column-stacked `rho`.
    pub superoperator: DMatrix<Complex64>,
}

impl TwoLevelPropagator {
    pub fn apply(&self, rho: &Matrix2<Complex64>) -> Matrix2<Complex64> {
        let v = &self.superoperator * DVector::from_column_slice(rho.as_slice());
        Matrix2::from_column_slice(v.as_slice())
    }
}

/// Propagator for a pulse of `duration_ns` on the pair `{|a>, |b>}`.
///
/// Populations exchange at `1/(2 T1)` each way when `t1_ms` is set, and pure
/// dephasing is chosen so that coherences decay at exactly `1/T2`.
pub fn mw_propagator(params: &CoherentParams, duration_ns: f64) -> Result<TwoLevelPropagator> {
    let params = params.clone().validated()?;
    if !(duration_ns >= 0.0 && duration_ns.is_finite()) {
        return domain(format!("pulse duration must be finite and non-negative, got {duration_ns} ns"));
    }
    let t = duration_ns * 1e-9;
    let h2 = pair_hamiltonian(params.detuning_mhz * 1e6, params.rabi_frequency_mhz * 1e6, params.mw_phase);
    let h = DMatrix::from_column_slice(2, 2, h2.as_slice());
    let exchange = params.t1_ms.map_or(0.0, |t1| 1.0 / (2.0 * t1 * 1e-3));
    let dephasing = 1.0 / params.t2_s() - exchange;
    let mut jumps = Vec::new();
    if exchange > 0.0 {
        let k = c(exchange.sqrt());
        jumps.push(DMatrix::from_row_slice(2, 2, &[c(0.0), k, c(0.0), c(0.0)]));
        jumps.push(DMatrix::from_row_slice(2, 2, &[c(0.0), c(0.0), k, c(0.0)]));
    }
    if dephasing > 0.0 {
        let g = (dephasing / 2.0).sqrt();
        jumps.push(DMatrix::from_diagonal(&DVector::from_column_slice(&[c(g), c(-g)])));
    }
    let l = liouvillian(&h, &jumps);
    let superoperator = (l * c(t)).exp();
    let unitary = (h2 * Complex64::new(0.0, -t)).exp();
    Ok(TwoLevelPropagator { unitary, superoperator })
}

/// Trace error and smallest eigenvalue of a density matrix.
pub fn physicality(rho: &DMatrix<Complex64>) -> (f64, f64) {
    let trace: Complex64 = rho.trace();
    let herm = (rho + rho.adjoint()) * c(0.5);
    let min = herm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
    ((trace - c(1.0)).norm(), min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ground() -> Matrix2<Complex64> {
        Matrix2::new(c(1.0), c(0.0), c(0.0), c(0.0))
    }

    #[test]
    fn pi_pulse_inverts() {
        let p = CoherentParams::new(12.5, 0.0, f64::INFINITY).unwrap();
        let prop = mw_propagator(&p, 40.0).unwrap();
        let rho = prop.apply(&ground());
        assert!((rho[(1, 1)].re - 1.0).abs() < 1e-9);
        assert!(rho[(0, 0)].norm() < 1e-9);
        assert!((prop.unitary[(1, 0)].norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn half_pi_pulse_gives_equal_superposition() {
        let p = CoherentParams::new(12.5, 0.0, f64::INFINITY).unwrap();
        let rho = mw_propagator(&p, 20.0).unwrap().apply(&ground());
        assert!((rho[(0, 0)].re - 0.5).abs() < 1e-9);
        assert!((rho[(0, 1)].norm() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn free_evolution_dephases_at_one_over_t2() {
        let mut p = CoherentParams::new(0.0, 0.0, 640.0).unwrap();
        p.t1_ms = Some(0.22);
        let rho0 = Matrix2::new(c(0.5), c(0.5), c(0.5), c(0.5));
        for t in [0.0, 100.0, 640.0, 2000.0] {
            let rho = mw_propagator(&p, t).unwrap().apply(&rho0);
            assert!((rho[(0, 1)].norm() - 0.5 * (-t / 640.0).exp()).abs() < 1e-12, "{t}");
            assert!((rho.trace().re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn longitudinal_relaxation_equalizes_populations() {
        let mut p = CoherentParams::new(0.0, 0.0, 640.0).unwrap();
        p.t1_ms = Some(1e-3);
        let rho = mw_propagator(&p, 1000.0).unwrap().apply(&ground());
        assert!((rho[(0, 0)].re - (0.5 + 0.5 * (-1.0f64).exp())).abs() < 1e-10);
    }

    #[test]
    fn trace_and_positivity_preserved() {
        let mut p = CoherentParams::new(7.0, 3.0, 300.0).unwrap();
        p.mw_phase = 0.7;
        p.t1_ms = Some(0.01);
        let rho0 = Matrix2::new(c(0.7), Complex64::new(0.1, 0.2), Complex64::new(0.1, -0.2), c(0.3));
        for t in [1.0, 37.0, 500.0, 5000.0] {
            let rho = mw_propagator(&p, t).unwrap().apply(&rho0);
            let (tr, min) = physicality(&DMatrix::from_column_slice(2, 2, rho.as_slice()));
            assert!(tr < 1e-10 && min > -1e-10);
        }
    }

    #[test]
    fn ideal_rotation_matches_resonant_unitary() {
        let p = CoherentParams { mw_phase: 0.4, ..CoherentParams::new(10.0, 0.0, f64::INFINITY).unwrap() };
        let u = mw_propagator(&p, 25.0).unwrap().unitary;
        let r = rotation(PI / 2.0, 0.4);
        assert!((u - r).norm() < 1e-12);
    }

    #[test]
    fn invalid_inputs() {
        assert!(CoherentParams::new(-1.0, 0.0, 10.0).is_err());
        assert!(CoherentParams::new(1.0, 0.0, 0.0).is_err());
        let mut p = CoherentParams::new(1.0, 0.0, 1e9).unwrap();
        p.t1_ms = Some(0.22);
        assert!(p.validated().is_err());
        assert!(mw_propagator(&CoherentParams::new(1.0, 0.0, 10.0).unwrap(), -1.0).is_err());
    }
}
