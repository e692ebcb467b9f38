use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, Matrix4, Vector5};
use num_complex::Complex64;

use super::coherent::{liouvillian, pair_hamiltonian, physicality, rotation, CoherentParams};
use super::model::{AddressableTransition, GroundRelaxation, PumpModel};
use super::rates::{propagate_populations, rate_matrix, PlRecorder};
use crate::error::{domain, Result};

/// Ground-state density matrix in the `|0>, |->, |+>` basis plus the singlet population.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridState {
    pub rho: Matrix3<Complex64>,
    pub ps: f64,
}

impl HybridState {
    pub fn populations(&self) -> [f64; 4] {
        [self.rho[(0, 0)].re, self.rho[(1, 1)].re, self.rho[(2, 2)].re, self.ps]
    }

    fn is_diagonal(&self) -> bool {
        (0..3).all(|i| (0..3).all(|j| i == j || self.rho[(i, j)] == Complex64::new(0.0, 0.0)))
    }
}

/// Worst deviations from a physical state seen during a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalityReport {
    /// Largest `|tr(rho) + pS - 1|`.
    pub max_trace_error: f64,
    /// Smallest eigenvalue of `rho`, or of `pS` if that is smaller.
    pub min_eigenvalue: f64,
    pub checks: usize,
}

impl Default for PhysicalityReport {
    fn default() -> Self {
        PhysicalityReport { max_trace_error: 0.0, min_eigenvalue: f64::INFINITY, checks: 0 }
    }
}

impl PhysicalityReport {
    pub fn merge(&mut self, other: &PhysicalityReport) {
        self.max_trace_error = self.max_trace_error.max(other.max_trace_error);
        self.min_eigenvalue = self.min_eigenvalue.min(other.min_eigenvalue);
        self.checks += other.checks;
    }

    pub fn is_physical(&self, tol: f64) -> bool {
        self.max_trace_error <= tol && self.min_eigenvalue >= -tol
    }
}

/// Rotating frame of the most recent drive: addressed pair and drive detuning in Hz.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Frame {
    pair: (usize, usize),
    detuning_hz: f64,
}

const C0: Complex64 = Complex64::new(0.0, 0.0);

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn embed(m: &Matrix2<Complex64>, pair: (usize, usize), fill: Complex64) -> Matrix3<Complex64> {
    let mut out = Matrix3::from_diagonal_element(fill);
    let (i, j) = pair;
    out[(i, i)] = m[(0, 0)];
    out[(i, j)] = m[(0, 1)];
    out[(j, i)] = m[(1, 0)];
    out[(j, j)] = m[(1, 1)];
    out
}

/// Piecewise propagation shared by the dedicated protocols and the sequence executor.
///
/// Laser segments use the rate model on populations after erasing coherences with the
/// bright sublevel. Dark segments use the same rate model while `rho` is diagonal and
/// an exact Lindblad propagator otherwise. Drive pulses act on the addressed pair only.
pub(crate) struct Engine {
    model: PumpModel,
    eq: [f64; 3],
    pub params: CoherentParams,
    pub transitions: Vec<AddressableTransition>,
    pl_weight: f64,
    dark_rates: Matrix4<f64>,
    /// Exchange rates `w[i][j]` from sublevel `j` to `i`.
    exchange: [[f64; 3]; 3],
    dephasing: [f64; 3],
    frame: Frame,
    pub report: PhysicalityReport,
}

impl Engine {
    pub fn new(model: &PumpModel, params: &CoherentParams) -> Result<Engine> {
        let model = model.clone().validated()?;
        let params = params.clone().validated()?;
        let eq = model.equilibrium()?;
        let t1 = model.t1_s();
        let mut exchange = [[0.0; 3]; 3];
        for (i, row) in exchange.iter_mut().enumerate() {
            for (j, w) in row.iter_mut().enumerate() {
                if i != j {
                    *w = match model.relaxation {
                        GroundRelaxation::Symmetric => 1.0 / (3.0 * t1),
                        GroundRelaxation::Boltzmann { .. } => eq[i] / t1,
                    };
                }
            }
        }
        let mut dephasing = [0.0; 3];
        for k in 0..3 {
            let out: f64 = (0..3).map(|i| exchange[i][k]).sum();
            dephasing[k] = 1.0 / params.t2_s() - out;
            if dephasing[k] < -1e-12 / params.t2_s() {
                return domain(format!(
                    "T2 = {} ns is longer than population relaxation allows for T1 = {} ms",
                    params.t2_ns, model.t1_ms
                ));
            }
            dephasing[k] = dephasing[k].max(0.0);
        }
        let transitions = model.transitions()?;
        let (a, b) = params.transition;
        let frame = Frame { pair: (a.index().min(b.index()), a.index().max(b.index())), detuning_hz: 0.0 };
        Ok(Engine {
            pl_weight: model.collection_efficiency / model.t_opt_s(),
            dark_rates: rate_matrix(&model, 0.0, &eq),
            model,
            eq,
            params,
            transitions,
            exchange,
            dephasing,
            frame,
            report: PhysicalityReport::default(),
        })
    }


    pub fn initial_state(&self) -> HybridState {
        HybridState { rho: Matrix3::from_diagonal(&self.eq.map(c).into()), ps: 0.0 }
    }

    fn check(&mut self, s: &HybridState) -> Result<()> {
        if s.rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) || !s.ps.is_finite() {
            return domain("state became non-finite");
        }
        let (_, min) = physicality(&DMatrix::from_column_slice(3, 3, s.rho.as_slice()));
        let tr = (s.rho.trace().re + s.ps - 1.0).abs();
        self.report.max_trace_error = self.report.max_trace_error.max(tr);
        self.report.min_eigenvalue = self.report.min_eigenvalue.min(min).min(s.ps);
        self.report.checks += 1;
        Ok(())
    }

    fn frame_energy_hz(&self, k: usize) -> f64 {
        let (i, j) = self.frame.pair;
        if k == i {
            self.frame.detuning_hz / 2.0
        } else if k == j {
            -self.frame.detuning_hz / 2.0
        } else {
            0.0
        }
    }

    fn population_step(
        &mut self,
        s: &mut HybridState,
        rates: &Matrix4<f64>,
        dt: f64,
        duration: f64,
        measure: Option<f64>,
        t0: f64,
        record: Option<&mut PlRecorder>,
    ) -> f64 {
        let mut y = Vector5::new(s.rho[(0, 0)].re, s.rho[(1, 1)].re, s.rho[(2, 2)].re, s.ps, 0.0);
        let window = measure.unwrap_or(0.0).min(duration);
        let mut integral = 0.0;
        if measure.is_some() {
            propagate_populations(rates, self.pl_weight, &mut y, window, dt, t0, record, |_| {});
            integral = y[4];
        }
        propagate_populations(rates, self.pl_weight, &mut y, duration - window, dt, t0 + window, None, |_| {});
        for k in 0..3 {
            s.rho[(k, k)] = c(y[k]);
        }
        s.ps = y[3];
        integral
    }

    /// Laser on for `duration` at `power` times the model pump rate. Returns the PL
    /// integrated over `measure` seconds from the start of the pulse, or 0.
    pub fn laser(
        &mut self,
        s: &mut HybridState,
        duration: f64,
        power: f64,
        measure: Option<f64>,
        t0: f64,
        record: Option<&mut PlRecorder>,
    ) -> Result<f64> {
        if !(power >= 0.0) {
            return domain("laser power must be non-negative");
        }
        let b = self.model.bright.index();
        for i in 0..3 {
            for j in 0..3 {
                if i == j {
                    continue;
                }
                if i == b || j == b {
                    s.rho[(i, j)] = C0;
                } else if s.rho[(i, j)] != C0 {
                    let decay = (-duration / self.params.t2_s()).exp();
                    let phase = -2.0 * PI * (self.frame_energy_hz(i) - self.frame_energy_hz(j)) * duration;
                    s.rho[(i, j)] *= Complex64::from_polar(decay, phase);
                }
            }
        }
        let w = self.model.pump_rate * power;
        let rates = rate_matrix(&self.model, w, &self.eq);
        let dt = self.model.default_dt(w);
        let integral = self.population_step(s, &rates, dt, duration, measure, t0, record);
        self.check(s)?;
        Ok(integral)
    }

    fn generator(&self, h: &Matrix2<Complex64>, pair: (usize, usize)) -> DMatrix<Complex64> {
        let h3 = embed(h, pair, C0);
        let mut hd = DMatrix::from_column_slice(3, 3, h3.as_slice());
        for k in 0..3 {
            if k != pair.0 && k != pair.1 {
                hd[(k, k)] = C0;
            }
        }
        let mut jumps = Vec::new();
        for i in 0..3 {
            for j in 0..3 {
                if i != j && self.exchange[i][j] > 0.0 {
                    let mut l = DMatrix::zeros(3, 3);
                    l[(i, j)] = c(self.exchange[i][j].sqrt());
                    jumps.push(l);
                }
            }
            if self.dephasing[i] > 0.0 {
                let mut l = DMatrix::zeros(3, 3);
                l[(i, i)] = c(self.dephasing[i].sqrt());
                jumps.push(l);
            }
        }
        let l9 = liouvillian(&hd, &jumps);
        let mut g = DMatrix::<Complex64>::zeros(11, 11);
        g.view_mut((0, 0), (9, 9)).copy_from(&l9);
        let gamma = 1.0 / self.model.t_opt_s();
        g[(9, 9)] = c(-gamma);
        for k in 0..3 {
            g[(4 * k, 9)] = c(self.model.optical.branching[k] * gamma);
        }
        g[(10, 9)] = c(self.pl_weight);
        g
    }

    fn lindblad_step(
        &mut self,
        s: &mut HybridState,
        g: &DMatrix<Complex64>,
        duration: f64,
        t0: f64,
        mut record: Option<&mut PlRecorder>,
    ) -> Result<f64> {
        let mut v = DVector::<Complex64>::zeros(11);
        v.rows_mut(0, 9).copy_from_slice(s.rho.as_slice());
        v[9] = c(s.ps);
        let pieces = if record.is_some() { 200 } else { 1 };
        let step = (g * c(duration / pieces as f64)).exp();
        if let Some(rec) = record.as_deref_mut() {
            rec.time.push(t0);
            rec.pl.push(self.pl_weight * s.ps);
        }
        for k in 1..=pieces {
            v = &step * v;
            if let Some(rec) = record.as_deref_mut() {
                rec.time.push(t0 + duration * k as f64 / pieces as f64);
                rec.pl.push(self.pl_weight * v[9].re);
            }
        }
        let mut rho = Matrix3::from_column_slice(&v.as_slice()[..9]);
        rho = (rho + rho.adjoint()) * c(0.5);
        s.rho = rho;
        s.ps = v[9].re;
        let integral = v[10].re;
        self.check(s)?;
        Ok(integral)
    }

    /// Laser off for `duration`. Returns the PL integrated over the whole segment.
    pub fn dark(&mut self, s: &mut HybridState, duration: f64, t0: f64, record: Option<&mut PlRecorder>) -> Result<f64> {
        if duration == 0.0 && record.is_none() {
            return Ok(0.0);
        }
        if s.is_diagonal() {
            let rates = self.dark_rates;
            let dt = self.model.default_dt(0.0);
            let integral = self.population_step(s, &rates, dt, duration, Some(duration), t0, record);
            self.check(s)?;
            return Ok(integral);
        }
        let h = pair_hamiltonian(self.frame.detuning_hz, 0.0, 0.0);
        let g = self.generator(&h, self.frame.pair);
        self.lindblad_step(s, &g, duration, t0, record)
    }

    /// Finite rectangular pulse on `pair` including relaxation and singlet decay.
    pub fn pulse(
        &mut self,
        s: &mut HybridState,
        pair: (usize, usize),
        duration: f64,
        rabi_hz: f64,
        detuning_hz: f64,
        phase: f64,
        t0: f64,
    ) -> Result<()> {
        self.frame = Frame { pair, detuning_hz };
        if duration == 0.0 {
            return Ok(());
        }
        let h = pair_hamiltonian(detuning_hz, rabi_hz, phase);
        let g = self.generator(&h, pair);
        self.lindblad_step(s, &g, duration, t0, None)?;
        Ok(())
    }

    /// Instantaneous rotation of `pair` by `angle` about the axis at `phase`.
    pub fn rotate(&mut self, s: &mut HybridState, pair: (usize, usize), angle: f64, phase: f64, detuning_hz: f64) -> Result<()> {
        self.frame = Frame { pair, detuning_hz };
        let u = embed(&rotation(angle, phase), pair, c(1.0));
        s.rho = u * s.rho * u.adjoint();
        self.check(s)
    }

    /// Pair indices and detuning for a drive at `freq_hz`; `None` means the default pair
    /// at the configured detuning. Also returns the Rabi frequency scale of the pair.
    pub fn address(&self, freq_hz: Option<f64>) -> Result<((usize, usize), f64, f64)> {
        let (a, b) = self.params.transition;
        let default = self
            .transitions
            .iter()
            .find(|t| t.pair() == (a, b) || t.pair() == (b, a))
            .copied()
            .expect("all pairs are listed");
        let (t, detuning) = match freq_hz {
            None => (default, self.params.detuning_mhz * 1e6),
            Some(f) => {
                let allowed: Vec<&AddressableTransition> = {
                    let max = self.transitions.iter().map(|t| t.coupling).fold(0.0, f64::max);
                    self.transitions.iter().filter(|t| t.coupling > 1e-6 * max).collect()
                };
                let t = allowed
                    .iter()
                    .min_by(|x, y| (x.frequency_ghz * 1e9 - f).abs().total_cmp(&(y.frequency_ghz * 1e9 - f).abs()))
                    .copied()
                    .copied();
                match t {
                    Some(t) => (t, f - t.frequency_ghz * 1e9),
                    None => return domain("no allowed microwave transition to address"),
                }
            }
        };
        if !(t.coupling > 0.0) {
            return domain(format!(
                "transition {}<->{} is forbidden for this drive geometry",
                t.lower.symbol(),
                t.upper.symbol()
            ));
        }
        let (p, q) = t.pair();
        let scale = t.coupling / default.coupling.max(f64::MIN_POSITIVE);
        Ok(((p.index(), q.index()), detuning, scale))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::OpticalModel;
    use crate::spin::SpinSystem;

    fn engine(t2_ns: f64) -> Engine {
        let sys = SpinSystem::triplet(3.63, 0.0, 2.0).unwrap();
        let model = PumpModel::new(sys, OpticalModel::new(1025.0, 3.3).unwrap(), 1.0 / 3.3e-6, 0.22)
            .unwrap()
            .with_field_mt(10.0);
        Engine::new(&model, &CoherentParams::new(12.5, 0.0, t2_ns).unwrap()).unwrap()
    }

    #[test]
    fn laser_pumps_bright_level_and_stays_physical() {
        let mut e = engine(640.0);
        let mut s = e.initial_state();
        let pl = e.laser(&mut s, 300e-6, 1.0, Some(20e-6), 0.0, None).unwrap();
        assert!(pl > 0.0);
        assert!(s.rho[(0, 0)].re < 0.05);
        assert!(e.report.is_physical(1e-10));
    }

    #[test]
    fn dark_paths_agree_on_diagonal_states() {
        let mut e = engine(640.0);
        let mut s = e.initial_state();
        e.laser(&mut s, 50e-6, 1.0, None, 0.0, None).unwrap();
        let mut a = s.clone();
        e.dark(&mut a, 20e-6, 0.0, None).unwrap();
        let mut b = s.clone();
        let g = e.generator(&pair_hamiltonian(0.0, 0.0, 0.0), (0, 1));
        e.lindblad_step(&mut b, &g, 20e-6, 0.0, None).unwrap();
        assert!((a.rho - b.rho).norm() < 1e-10);
        assert!((a.ps - b.ps).abs() < 1e-12);
    }

    #[test]
    fn pulse_matches_ideal_rotation_with_slow_decay() {
        let mut e = engine(1e5);
        let mut s = e.initial_state();
        e.laser(&mut s, 300e-6, 1.0, None, 0.0, None).unwrap();
        e.dark(&mut s, 100e-6, 0.0, None).unwrap();
        let mut a = s.clone();
        e.pulse(&mut a, (0, 1), 40e-9, 12.5e6, 0.0, 0.0, 0.0).unwrap();
        let mut b = s.clone();
        e.rotate(&mut b, (0, 1), PI, 0.0, 0.0).unwrap();
        // relaxation during 40 ns is the only difference
        assert!((a.rho - b.rho).norm() < 1e-3);
    }

    #[test]
    fn addressing_picks_nearest_allowed_transition() {
        let e = engine(640.0);
        let (pair, det, scale) = e.address(Some(3.9e9)).unwrap();
        assert_eq!(pair, (0, 2));
        assert!((det - (3.9e9 - 3.90992489872e9)).abs() < 1.0);
        assert!((scale - 1.0).abs() < 1e-12);
        assert_eq!(e.address(None).unwrap().0, (0, 1));
    }

    #[test]
    fn t2_longer_than_relaxation_allows_is_rejected() {
        let sys = SpinSystem::triplet(3.63, 0.0, 2.0).unwrap();
        let model = PumpModel::new(sys, OpticalModel::new(1025.0, 3.3).unwrap(), 1e5, 1e-3).unwrap();
        assert!(Engine::new(&model, &CoherentParams::new(12.5, 0.0, 1e4).unwrap()).is_err());
    }
}
