use nalgebra::Vector3;

use super::eigen::{eigensystem, EigenSystem};
use super::hamiltonian::{build_hamiltonian, FieldPoint, SpinSystem, H_OVER_KB};
use super::operators::{spin_operators, Spin};
use crate::error::{domain, Result};

/// One magnetic-dipole transition between two eigenstates.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub lower: usize,
    pub upper: usize,
    /// GHz
    pub frequency: f64,
    /// `|<lower| S.b1 |upper>|^2`
    pub intensity: f64,
    /// Boltzmann population difference `p(lower) - p(upper)`.
    pub population_weight: f64,
}

/// Normalized Boltzmann populations of the eigenstates.
pub fn boltzmann_populations(energies: &[f64], temperature_k: f64) -> Result<Vec<f64>> {
    if !(temperature_k > 0.0) {
        return domain(format!("temperature must be positive, got {temperature_k} K"));
    }
    let e0 = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = energies.iter().map(|&e| (-(e - e0) * H_OVER_KB / temperature_k).exp()).collect();
    let z: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / z).collect())
}

/// Transition table for an already-diagonalized system, with the intensity averaged
/// over the given drive directions.
pub fn transitions_from(
    spin: Spin,
    eig: &EigenSystem,
    drives: &[Vector3<f64>],
    temperature_k: f64,
) -> Result<Vec<Transition>> {
    let pops = boltzmann_populations(&eig.energies, temperature_k)?;
    let ops = spin_operators(spin);
    let couplings: Vec<_> = drives.iter().map(|d| ops.project(d)).collect();
    let n = eig.dim();
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for lower in 0..n {
        for upper in lower + 1..n {
            let intensity = couplings
                .iter()
                .map(|op| eig.matrix_element(op, lower, upper).norm_sqr())
                .sum::<f64>()
                / couplings.len() as f64;
            out.push(Transition {
                lower,
                upper,
                frequency: eig.energies[upper] - eig.energies[lower],
                intensity,
                population_weight: pops[lower] - pops[upper],
            });
        }
    }
    Ok(out)
}

/// All `n(n-1)/2` transitions at one field point.
pub fn transition_table(sys: &SpinSystem, field: &FieldPoint, temperature_k: f64) -> Result<Vec<Transition>> {
    if !(temperature_k > 0.0) {
        return domain(format!("temperature must be positive, got {temperature_k} K"));
    }
    let eig = eigensystem(&build_hamiltonian(sys, field))?;
    transitions_from(sys.spin(), &eig, &[*field.b1_dir()], temperature_k)
}

/// Triplet sublevels in the order used by population vectors: `|0>, |->, |+>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sublevel {
    Zero,
    Minus,
    Plus,
}

impl Sublevel {
    pub const ALL: [Sublevel; 3] = [Sublevel::Zero, Sublevel::Minus, Sublevel::Plus];

    pub fn index(self) -> usize {
        match self {
            Sublevel::Zero => 0,
            Sublevel::Minus => 1,
            Sublevel::Plus => 2,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Sublevel::Zero => "0",
            Sublevel::Minus => "-",
            Sublevel::Plus => "+",
        }
    }
}

impl std::str::FromStr for Sublevel {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "0" | "zero" => Ok(Sublevel::Zero),
            "-" | "-1" | "minus" => Ok(Sublevel::Minus),
            "+" | "+1" | "1" | "plus" => Ok(Sublevel::Plus),
            other => domain(format!("unknown sublevel '{other}'")),
        }
    }
}

/// Eigenstate indices of the triplet sublevels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TripletLevels {
    pub indices: [usize; 3],
}

impl TripletLevels {
    pub fn get(&self, level: Sublevel) -> usize {
        self.indices[level.index()]
    }
}

/// Labels the eigenstates of an `S = 1` system.
///
/// `|0>` is the state with the smallest `<Sz'^2>` along the molecular axis; of the other
/// two, `|->` has the smaller `<Sz'>`, with ties (zero field, rhombic mixing) going to
/// the lower energy.
pub fn triplet_levels(sys: &SpinSystem, eig: &EigenSystem) -> Result<TripletLevels> {
    if sys.spin() != Spin::ONE {
        return domain("sublevel labels are defined for S = 1 only");
    }
    let mol = sys.molecular_operators(&spin_operators(Spin::ONE));
    let sz2 = &mol.z * &mol.z;
    let expect = |op, k| eig.matrix_element(op, k, k).re;
    let zero = (0..3)
        .min_by(|&a, &b| expect(&sz2, a).total_cmp(&expect(&sz2, b)))
        .expect("three states");
    let others: Vec<usize> = (0..3).filter(|&k| k != zero).collect();
    let (a, b) = (others[0], others[1]);
    let (za, zb) = (expect(&mol.z, a), expect(&mol.z, b));
    let (minus, plus) = if (za - zb).abs() <= 1e-9 {
        if eig.energies[a] <= eig.energies[b] {
            (a, b)
        } else {
            (b, a)
        }
    } else if za < zb {
        (a, b)
    } else {
        (b, a)
    };
    Ok(TripletLevels { indices: [zero, minus, plus] })
}
