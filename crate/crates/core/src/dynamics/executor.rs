use super::coherent::CoherentParams;
use super::engine::{Engine, PhysicalityReport};
use super::model::{PumpModel, Trace};
use super::rates::PlRecorder;
use crate::error::{domain, Result};
use crate::seqlang::{self, MwLength, PulseSequence, StatementKind, SweepPoint, ValidationContext};

/// How `pi` and `pi/2` pulses are applied.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PulseModel {
    /// Instantaneous rotations; they take no time.
    #[default]
    Ideal,
    /// Rectangular pulses of the calibrated length with full relaxation.
    Finite,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ExecOptions {
    pub angle_pulses: PulseModel,
    /// Record PL time traces during measurement windows.
    pub record_pl: bool,
}

/// Outcome of one expanded sweep point.
#[derive(Clone, Debug)]
pub struct PointResult {
    /// Sweep variables and their values, outermost first.
    pub values: Vec<(String, f64)>,
    /// Integrated PL of each measurement, in program order.
    pub readouts: Vec<f64>,
    /// Start time of each measurement window, s.
    pub readout_times: Vec<f64>,
    /// PL rate during each measurement window, if recording was requested.
    pub pl_traces: Vec<Trace>,
    pub report: PhysicalityReport,
}

impl PointResult {
    /// Readouts against their start times.
    pub fn trace(&self) -> Trace {
        Trace::new(self.readout_times.clone(), self.readouts.clone(), "time_s", Default::default())
    }
}

#[derive(Clone, Debug)]
pub struct Execution {
    pub points: Vec<PointResult>,
}

impl Execution {
    pub fn report(&self) -> PhysicalityReport {
        let mut r = PhysicalityReport::default();
        for p in &self.points {
            r.merge(&p.report);
        }
        r
    }

    /// Readout `index` of every point against the outermost sweep variable.
    pub fn readout_trace(&self, index: usize) -> Result<Trace> {
        let mut x = Vec::with_capacity(self.points.len());
        let mut y = Vec::with_capacity(self.points.len());
        let label = self.points.first().and_then(|p| p.values.first()).map_or("point".to_string(), |(n, _)| n.clone());
        for (k, p) in self.points.iter().enumerate() {
            let Some(&r) = p.readouts.get(index) else {
                return domain(format!("point {k} has no readout {index}"));
            };
            x.push(p.values.first().map_or(k as f64, |v| v.1));
            y.push(r);
        }
        Ok(Trace::new(x, y, label, Default::default()))
    }
}

/// Runs validated, expanded sweep points against one model.
pub struct Executor {
    model: PumpModel,
    params: CoherentParams,
    options: ExecOptions,
}

impl Executor {
    pub fn new(model: &PumpModel, params: &CoherentParams, options: ExecOptions) -> Result<Self> {
        let model = model.clone().validated()?;
        let params = params.clone().validated()?;
        Engine::new(&model, &params)?;
        Ok(Executor { model, params, options })
    }

    /// Validation context for this model: allowed transitions and the Rabi calibration.
    pub fn context(&self) -> Result<ValidationContext> {
        let transitions = self.model.transitions()?;
        let max = transitions.iter().map(|t| t.coupling).fold(0.0, f64::max);
        let allowed = transitions.iter().filter(|t| t.coupling > 1e-6 * max).map(|t| t.frequency_ghz * 1e9).collect();
        let mut ctx = ValidationContext::new(allowed);
        if self.params.rabi_frequency_mhz > 0.0 {
            ctx = ctx.with_rabi(self.params.rabi_frequency_mhz * 1e6);
        }
        Ok(ctx)
    }

    /// Validates and expands `seq` into concrete points.
    pub fn prepare(&self, seq: &PulseSequence) -> Result<Vec<SweepPoint>> {
        let validated = seqlang::validate(seq, &self.context()?)?;
        Ok(seqlang::expand(&validated)?)
    }

    pub fn run_point(&self, point: &SweepPoint) -> Result<PointResult> {
        let mut engine = Engine::new(&self.model, &self.params)?;
        let mut s = engine.initial_state();
        let mut t = 0.0;
        let mut readouts = Vec::new();
        let mut readout_times = Vec::new();
        let mut pl_traces = Vec::new();
        let lit = |v: &seqlang::Value| v.literal().map(|q| q.value).ok_or_else(|| crate::Error::Domain("unexpanded variable".into()));
        for stmt in &point.sequence.statements {
            match &stmt.kind {
                StatementKind::Laser(l) => {
                    let d = lit(&l.duration)?;
                    let power = l.power.as_ref().map(lit).transpose()?.unwrap_or(1.0);
                    let window = l.measure.as_ref().map(lit).transpose()?;
                    let mut rec = PlRecorder { time: Vec::new(), pl: Vec::new() };
                    let record = (self.options.record_pl && window.is_some()).then_some(&mut rec);
                    let integral = engine.laser(&mut s, d, power, window, t, record)?;
                    if window.is_some() {
                        readouts.push(integral);
                        readout_times.push(t);
                        if self.options.record_pl {
                            pl_traces.push(Trace::new(rec.time, rec.pl, "time_s", self.model.metadata()));
                        }
                    }
                    t += d;
                }
                StatementKind::Wait { duration } => {
                    let d = lit(duration)?;
                    engine.dark(&mut s, d, t, None)?;
                    t += d;
                }
                StatementKind::Measure { window } => {
                    let d = lit(window)?;
                    let mut rec = PlRecorder { time: Vec::new(), pl: Vec::new() };
                    let integral = engine.dark(&mut s, d, t, self.options.record_pl.then_some(&mut rec))?;
                    readouts.push(integral);
                    readout_times.push(t);
                    if self.options.record_pl {
                        pl_traces.push(Trace::new(rec.time, rec.pl, "time_s", self.model.metadata()));
                    }
                    t += d;
                }
                StatementKind::Mw(m) => {
                    let freq = m.frequency.as_ref().map(lit).transpose()?;
                    let (pair, detuning, scale) = engine.address(freq)?;
                    let amp = m.amplitude.as_ref().map(lit).transpose()?.unwrap_or(1.0);
                    let phase = self.params.mw_phase + m.phase.as_ref().map(lit).transpose()?.unwrap_or(0.0).to_radians();
                    let rabi = self.params.rabi_frequency_mhz * 1e6 * amp * scale;
                    match (&m.length, self.options.angle_pulses) {
                        (MwLength::Duration(d), _) => {
                            let d = lit(d)?;
                            engine.pulse(&mut s, pair, d, rabi, detuning, phase, t)?;
                            t += d;
                        }
                        (MwLength::Angle { angle, .. }, PulseModel::Ideal) => {
                            engine.rotate(&mut s, pair, angle.radians(), phase, detuning)?;
                        }
                        (MwLength::Angle { duration: Some(d), .. }, PulseModel::Finite) => {
                            engine.pulse(&mut s, pair, *d, rabi, detuning, phase, t)?;
                            t += d;
                        }
                        (MwLength::Angle { duration: None, .. }, PulseModel::Finite) => {
                            return domain("angle-form pulse was not resolved by validation");
                        }
                    }
                }
                StatementKind::Sweep(_) => return domain("sequence point still contains a sweep"),
            }
        }
        Ok(PointResult { values: point.values.clone(), readouts, readout_times, pl_traces, report: engine.report })
    }
}

/// Validates, expands and runs `seq`, one result per sweep point in expansion order.
pub fn execute_sequence(
    seq: &PulseSequence,
    model: &PumpModel,
    params: &CoherentParams,
    options: ExecOptions,
) -> Result<Execution> {
    if seq.is_empty() {
        return Ok(Execution { points: Vec::new() });
    }
    let exec = Executor::new(model, params, options)?;
    let points = exec.prepare(seq)?.iter().map(|p| exec.run_point(p)).collect::<Result<Vec<_>>>()?;
    Ok(Execution { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::OpticalModel;
    use crate::spin::SpinSystem;

    fn setup() -> (PumpModel, CoherentParams) {
        let sys = SpinSystem::triplet(3.63, 0.0, 2.0).unwrap();
        let model = PumpModel::new(sys, OpticalModel::new(1025.0, 3.3).unwrap(), 1.0 / 3.3e-6, 0.22)
            .unwrap()
            .with_field_mt(10.0);
        (model, CoherentParams::new(12.5, 0.0, 640.0).unwrap())
    }

    #[test]
    fn empty_sequence_gives_empty_result() {
        let (m, p) = setup();
        let ex = execute_sequence(&PulseSequence::default(), &m, &p, ExecOptions::default()).unwrap();
        assert!(ex.points.is_empty());
    }

    #[test]
    fn undefined_transition_is_a_validation_error() {
        let (m, p) = setup();
        let seq = seqlang::parse_str("mw 40ns f=9.4GHz").unwrap();
        match execute_sequence(&seq, &m, &p, ExecOptions::default()) {
            Err(crate::Error::Sequence(e)) => assert_eq!(e.kind, seqlang::SeqErrorKind::Validation),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn finite_and_ideal_pi_pulses_agree_roughly() {
        let (m, p) = setup();
        let seq = seqlang::parse_str("laser 300us\nwait 10us\nmw pi\nlaser 20us measure 20us").unwrap();
        let ideal = execute_sequence(&seq, &m, &p, ExecOptions::default()).unwrap();
        let finite = execute_sequence(&seq, &m, &p, ExecOptions { angle_pulses: PulseModel::Finite, record_pl: false }).unwrap();
        let (a, b) = (ideal.points[0].readouts[0], finite.points[0].readouts[0]);
        assert!((a - b).abs() / a < 0.02, "{a} {b}");
    }

    #[test]
    fn dark_measure_integrates_singlet_decay() {
        let (m, p) = setup();
        let seq = seqlang::parse_str("laser 300us\nmeasure 100us").unwrap();
        let ex = execute_sequence(&seq, &m, &p, ExecOptions { record_pl: true, ..Default::default() }).unwrap();
        let pt = &ex.points[0];
        // after the laser pS decays freely, so the integral is pS(0) times the efficiency
        let ps0 = pt.pl_traces[0].signal[0] * 3.3e-6;
        assert!((pt.readouts[0] - ps0).abs() / ps0 < 1e-6);
    }
}
