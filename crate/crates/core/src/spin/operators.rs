use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{domain, Result};

/// Spin quantum number, stored as `2S` so half-integers stay exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Spin {
    twice: u32,
}

impl Spin {
    pub const HALF: Spin = Spin { twice: 1 };
    pub const ONE: Spin = Spin { twice: 2 };

    pub fn new(s: f64) -> Result<Self> {
        let twice = 2.0 * s;
        if !twice.is_finite() || twice < 1.0 || (twice - twice.round()).abs() > 1e-12 {
            return domain(format!("spin quantum number must be a positive half-integer, got {s}"));
        }
        Ok(Spin { twice: twice.round() as u32 })
    }

    pub fn from_twice(twice: u32) -> Result<Self> {
        if twice == 0 {
            return domain("spin quantum number must be positive");
        }
        Ok(Spin { twice })
    }

    pub fn value(self) -> f64 {
        f64::from(self.twice) / 2.0
    }

    /// Hilbert-space dimension `2S + 1`.
    pub fn dim(self) -> usize {
        self.twice as usize + 1
    }

    /// `S(S+1)`.
    pub fn casimir(self) -> f64 {
        let s = self.value();
        s * (s + 1.0)
    }

    /// Magnetic quantum number of basis index `k` (ordering `m = S, S-1, ..., -S`).
    pub fn m(self, k: usize) -> f64 {
        self.value() - k as f64
    }
}

/// Cartesian spin operators in the `|S, m>` basis, `m` descending.
#[derive(Clone, Debug)]
pub struct SpinOperators {
    pub x: DMatrix<Complex64>,
    pub y: DMatrix<Complex64>,
    pub z: DMatrix<Complex64>,
}

impl SpinOperators {
    pub fn dim(&self) -> usize {
        self.z.nrows()
    }

    /// `n . S` for a (not necessarily unit) direction `n`.
    pub fn project(&self, n: &nalgebra::Vector3<f64>) -> DMatrix<Complex64> {
        &self.x * Complex64::from(n.x) + &self.y * Complex64::from(n.y) + &self.z * Complex64::from(n.z)
    }
}

/// Builds `Sx, Sy, Sz` from the ladder operators.
pub fn spin_operators(spin: Spin) -> SpinOperators {
    let n = spin.dim();
    let s = spin.value();
    let mut raise = DMatrix::<Complex64>::zeros(n, n);
    let mut z = DMatrix::<Complex64>::zeros(n, n);
    for k in 0..n {
        let m = spin.m(k);
        z[(k, k)] = Complex64::from(m);
        if k > 0 {
            // S+ |m> = sqrt(S(S+1) - m(m+1)) |m+1>, and |m+1> sits at index k-1.
            raise[(k - 1, k)] = Complex64::from((s * (s + 1.0) - m * (m + 1.0)).sqrt());
        }
    }
    let lower = raise.adjoint();
    let x = (&raise + &lower) * Complex64::from(0.5);
    let y = (&raise - &lower) * Complex64::new(0.0, -0.5);
    SpinOperators { x, y, z }
}
