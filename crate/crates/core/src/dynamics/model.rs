use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{domain, Result};
use crate::io::{columns_to_csv, Metadata};
use crate::spectra::OpticalModel;
use crate::spin::{
    boltzmann_populations, build_hamiltonian, eigensystem, spin_operators, triplet_levels, FieldPoint, Spin,
    SpinSystem, Sublevel, MU_B_OVER_H,
};

/// How ground sublevels relax towards equilibrium.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GroundRelaxation {
    /// Equal pairwise exchange at `1/(3 T1)`; equilibrium is uniform.
    Symmetric,
    /// Rates `w(j -> i) = p_i^eq / T1` towards the Boltzmann populations at this temperature.
    Boltzmann { temperature_k: f64 },
}

/// Optical pumping model for an `S = 1` ground state and an emitting singlet.
#[derive(Clone, Debug)]
pub struct PumpModel {
    pub sys: SpinSystem,
    /// Static field setting the sublevel structure.
    pub field: FieldPoint,
    pub optical: OpticalModel,
    /// Excitation rate of the bright sublevel, s^-1.
    pub pump_rate: f64,
    pub bright: Sublevel,
    pub t1_ms: f64,
    pub collection_efficiency: f64,
    pub relaxation: GroundRelaxation,
}

/// Microwave transition between two labelled sublevels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AddressableTransition {
    pub lower: Sublevel,
    pub upper: Sublevel,
    pub frequency_ghz: f64,
    /// `|<lower| S.b1 |upper>|` for the model's drive direction.
    pub coupling: f64,
}

impl AddressableTransition {
    /// Pair in population order, i.e. sorted by sublevel index.
    pub fn pair(&self) -> (Sublevel, Sublevel) {
        if self.lower.index() < self.upper.index() {
            (self.lower, self.upper)
        } else {
            (self.upper, self.lower)
        }
    }
}

impl PumpModel {
    /// Zero field, bright `|0>`, unit collection efficiency and symmetric relaxation.
    pub fn new(sys: SpinSystem, optical: OpticalModel, pump_rate: f64, t1_ms: f64) -> Result<Self> {
        PumpModel {
            sys,
            field: FieldPoint::zero(),
            optical,
            pump_rate,
            bright: Sublevel::Zero,
            t1_ms,
            collection_efficiency: 1.0,
            relaxation: GroundRelaxation::Symmetric,
        }
        .validated()
    }

    /// Static field of `mt` millitesla along lab z, drive along lab x.
    pub fn with_field_mt(mut self, mt: f64) -> Self {
        self.field = FieldPoint::along(Vector3::z_axis(), mt * 1e-3);
        self
    }

    pub fn validated(self) -> Result<Self> {
        if self.sys.spin() != Spin::ONE {
            return domain("the pumping model needs an S = 1 ground state");
        }
        if !(self.pump_rate >= 0.0 && self.pump_rate.is_finite()) {
            return domain(format!("pump rate must be finite and non-negative, got {}", self.pump_rate));
        }
        if !(self.t1_ms > 0.0 && self.t1_ms.is_finite()) {
            return domain(format!("T1 must be positive, got {} ms", self.t1_ms));
        }
        if !(self.collection_efficiency >= 0.0 && self.collection_efficiency.is_finite()) {
            return domain("collection efficiency must be non-negative");
        }
        if let GroundRelaxation::Boltzmann { temperature_k } = self.relaxation {
            if !(temperature_k > 0.0) {
                return domain("relaxation temperature must be positive");
            }
        }
        let optical = self.optical.clone().validated()?;
        Ok(PumpModel { optical, ..self })
    }

    pub fn t1_s(&self) -> f64 {
        self.t1_ms * 1e-3
    }

    pub fn t_opt_s(&self) -> f64 {
        self.optical.t_opt_s()
    }

    /// Equilibrium ground populations in `|0>, |->, |+>` order.
    pub fn equilibrium(&self) -> Result<[f64; 3]> {
        match self.relaxation {
            GroundRelaxation::Symmetric => Ok([1.0 / 3.0; 3]),
            GroundRelaxation::Boltzmann { temperature_k } => {
                let eig = eigensystem(&build_hamiltonian(&self.sys, &self.field))?;
                let labels = triplet_levels(&self.sys, &eig)?;
                let pops = boltzmann_populations(&eig.energies, temperature_k)?;
                Ok(Sublevel::ALL.map(|s| pops[labels.get(s)]))
            }
        }
    }

    /// Default RK4 step: the shortest of `t_opt`, `1/W` and `T1`, divided by 100.
    pub fn default_dt(&self, pump_rate: f64) -> f64 {
        let mut scale = self.t_opt_s().min(self.t1_s());
        if pump_rate > 0.0 {
            scale = scale.min(1.0 / pump_rate);
        }
        scale / 100.0
    }

    /// The three sublevel pairs with frequencies and drive couplings at the model field.
    pub fn transitions(&self) -> Result<Vec<AddressableTransition>> {
        let eig = eigensystem(&build_hamiltonian(&self.sys, &self.field))?;
        let labels = triplet_levels(&self.sys, &eig)?;
        let drive = spin_operators(Spin::ONE).project(self.field.b1_dir());
        let pairs = [(Sublevel::Zero, Sublevel::Minus), (Sublevel::Zero, Sublevel::Plus), (Sublevel::Minus, Sublevel::Plus)];
        Ok(pairs
            .iter()
            .map(|&(a, b)| {
                let (ia, ib) = (labels.get(a), labels.get(b));
                let (lower, upper) = if eig.energies[ia] <= eig.energies[ib] { (a, b) } else { (b, a) };
                AddressableTransition {
                    lower,
                    upper,
                    frequency_ghz: (eig.energies[ia] - eig.energies[ib]).abs(),
                    coupling: eig.matrix_element(&drive, ia, ib).norm(),
                }
            })
            .collect())
    }

    pub fn transition(&self, a: Sublevel, b: Sublevel) -> Result<AddressableTransition> {
        if a == b {
            return domain("a transition needs two distinct sublevels");
        }
        Ok(self
            .transitions()?
            .into_iter()
            .find(|t| (t.lower == a && t.upper == b) || (t.lower == b && t.upper == a))
            .expect("all pairs are listed"))
    }

    pub fn metadata(&self) -> Metadata {
        Metadata::new()
            .with("d_ghz", self.sys.d())
            .with("e_ghz", self.sys.e())
            .with("g", self.sys.g())
            .with("b0_mt", self.field.b0.norm() * 1e3)
            .with("t_opt_us", self.optical.t_opt_us)
            .with("t1_ms", self.t1_ms)
            .with("pump_rate_per_s", self.pump_rate)
            .with("bright", self.bright.symbol())
            .with(
                "branching",
                format!("{} {} {}", self.optical.branching[0], self.optical.branching[1], self.optical.branching[2]),
            )
            .with("collection_efficiency", self.collection_efficiency)
    }
}

/// Rabi frequency in MHz for a linearly polarized drive of `b1_tesla` along the model's
/// drive direction: `g muB/h B1 |<i|S.b1|j>|`.
pub fn rabi_frequency_from_drive(model: &PumpModel, b1_tesla: f64, a: Sublevel, b: Sublevel) -> Result<f64> {
    if !(b1_tesla >= 0.0 && b1_tesla.is_finite()) {
        return domain("drive amplitude must be finite and non-negative");
    }
    let t = model.transition(a, b)?;
    Ok(model.sys.g() * MU_B_OVER_H * 1e3 * b1_tesla * t.coupling)
}

/// Populations `(p0, p-, p+, pS)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PopulationState {
    pub p: [f64; 4],
}

impl PopulationState {
    pub fn new(p: [f64; 4]) -> Self {
        PopulationState { p }
    }

    /// Ground populations with the singlet empty.
    pub fn ground(p: [f64; 3]) -> Self {
        PopulationState { p: [p[0], p[1], p[2], 0.0] }
    }

    pub fn sum(&self) -> f64 {
        self.p.iter().sum()
    }

    pub fn excited(&self) -> f64 {
        self.p[3]
    }

    /// `(max - min) / sum` over the ground sublevels.
    pub fn polarization(&self) -> f64 {
        let g = &self.p[..3];
        let total: f64 = g.iter().sum();
        if total <= 0.0 {
            return 0.0;
        }
        let max = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = g.iter().copied().fold(f64::INFINITY, f64::min);
        (max - min) / total
    }
}

/// A sampled signal. `time` holds times in seconds or the swept quantity.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub time: Vec<f64>,
    pub signal: Vec<f64>,
    /// Column name of `time` in CSV output.
    pub x_label: String,
    pub metadata: Metadata,
}

impl Trace {
    pub fn new(time: Vec<f64>, signal: Vec<f64>, x_label: impl Into<String>, metadata: Metadata) -> Self {
        debug_assert_eq!(time.len(), signal.len());
        Trace { time, signal, x_label: x_label.into(), metadata }
    }

    pub fn empty() -> Self {
        Trace::new(Vec::new(), Vec::new(), "time_s", Metadata::new())
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn to_csv(&self) -> String {
        columns_to_csv(&self.metadata, &[&self.x_label, "signal"], &[&self.time, &self.signal])
    }

    /// Copy with seeded Gaussian noise of standard deviation `sigma` added to the signal.
    pub fn with_noise(&self, sigma: f64, seed: u64) -> Result<Trace> {
        let normal = Normal::new(0.0, sigma).or_else(|_| domain(format!("invalid noise level {sigma}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = self.clone();
        for y in &mut out.signal {
            *y += normal.sample(&mut rng);
        }
        out.metadata.set("noise_sigma", sigma);
        out.metadata.set("noise_seed", seed);
        Ok(out)
    }
}

/// Population history from an integration.
#[derive(Clone, Debug, PartialEq)]
pub struct PopulationTrace {
    pub time: Vec<f64>,
    pub states: Vec<PopulationState>,
}

impl PopulationTrace {
    pub fn last(&self) -> Option<&PopulationState> {
        self.states.last()
    }

    /// Largest `|sum p - 1|` along the trace.
    pub fn max_conservation_error(&self) -> f64 {
        self.states.iter().map(|s| (s.sum() - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn to_csv(&self, metadata: &Metadata) -> String {
        let cols: Vec<Vec<f64>> = (0..4).map(|k| self.states.iter().map(|s| s.p[k]).collect()).collect();
        columns_to_csv(metadata, &["time_s", "p0", "pm", "pp", "ps"], &[&self.time, &cols[0], &cols[1], &cols[2], &cols[3]])
    }
}
