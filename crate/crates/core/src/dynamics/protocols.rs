use std::f64::consts::{FRAC_PI_2, PI};

use super::coherent::CoherentParams;
use super::engine::{Engine, PhysicalityReport};
use super::model::{PopulationState, PumpModel, Trace};
use super::rates::PlRecorder;
use crate::error::{domain, Result};
use crate::spectra::{AxisUnit, Spectrum};

/// Timing shared by the optically read protocols, all in seconds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReadoutProtocol {
    pub init_s: f64,
    /// Dark time between initialization and the first drive pulse.
    pub wait_s: f64,
    pub readout_s: f64,
    /// PL integration window at the start of the readout pulse.
    pub measure_s: f64,
}

impl ReadoutProtocol {
    /// 300 us initialization, a wait of three optical lifetimes and a 20 us readout
    /// integrated in full.
    pub fn for_model(model: &PumpModel) -> Self {
        ReadoutProtocol { init_s: 300e-6, wait_s: 3.0 * model.t_opt_s(), readout_s: 20e-6, measure_s: 20e-6 }
    }

    fn check(&self) -> Result<()> {
        let ok = |x: f64| x >= 0.0 && x.is_finite();
        if !(ok(self.init_s) && ok(self.wait_s) && ok(self.readout_s) && ok(self.measure_s)) {
            return domain("protocol times must be finite and non-negative");
        }
        if self.measure_s > self.readout_s {
            return domain("measurement window is longer than the readout pulse");
        }
        Ok(())
    }
}

/// Parameters for protocols that never drive the spin. `T2 = 1.5 T1` leaves no pure
/// dephasing, and is irrelevant because no coherence is ever created.
pub(crate) fn incoherent_params(model: &PumpModel) -> CoherentParams {
    CoherentParams::new(0.0, 0.0, 1.5 * model.t1_ms * 1e6).expect("valid by construction")
}

fn check_increasing(xs: &[f64], what: &str) -> Result<()> {
    if xs.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return domain(format!("{what} must be finite and non-negative"));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return domain(format!("{what} must be strictly increasing"));
    }
    Ok(())
}

/// Result of a long optical pulse.
#[derive(Clone, Debug)]
pub struct HoleBurning {
    /// PL rate versus time during the pulse.
    pub pl_trace: Trace,
    /// `(PL_max - PL_end) / PL_max`, where the maximum follows the singlet filling transient.
    pub contrast: f64,
    /// False when there is no PL, in which case `contrast` is reported as 0.
    pub contrast_defined: bool,
    /// Ground-state polarization at the end of the pulse.
    pub polarization: f64,
    pub final_state: PopulationState,
    pub report: PhysicalityReport,
}

pub(crate) fn hole_burning_from_pl(time: Vec<f64>, pl: Vec<f64>, model: &PumpModel) -> (Trace, f64, bool) {
    let max = pl.iter().copied().fold(0.0, f64::max);
    let end = pl.last().copied().unwrap_or(0.0);
    let defined = max > 0.0;
    let contrast = if defined { (max - end) / max } else { 0.0 };
    let trace = Trace::new(time, pl, "time_s", model.metadata().with("kind", "hole_burning_pl"));
    (trace, contrast, defined)
}

/// Optical pumping from thermal equilibrium under a pulse of `pulse_duration_ms`.
pub fn simulate_hole_burning(model: &PumpModel, pulse_duration_ms: f64) -> Result<HoleBurning> {
    if !(pulse_duration_ms > 0.0 && pulse_duration_ms.is_finite()) {
        return domain("pulse duration must be positive");
    }
    let d = pulse_duration_ms * 1e-3;
    let mut engine = Engine::new(model, &incoherent_params(model))?;
    let mut state = engine.initial_state();
    let mut rec = PlRecorder { time: Vec::new(), pl: Vec::new() };
    engine.laser(&mut state, d, 1.0, Some(d), 0.0, Some(&mut rec))?;
    let (mut pl_trace, contrast, contrast_defined) = hole_burning_from_pl(rec.time, rec.pl, model);
    pl_trace.metadata.set("pulse_ms", pulse_duration_ms);
    let final_state = PopulationState::new(state.populations());
    Ok(HoleBurning {
        pl_trace,
        contrast,
        contrast_defined,
        polarization: final_state.polarization(),
        final_state,
        report: engine.report,
    })
}

/// Readout PL after initialization and a dark relaxation time, for each wait time (s).
pub fn simulate_t1_recovery(model: &PumpModel, init_us: f64, readout_us: f64, wait_times: &[f64]) -> Result<Trace> {
    check_increasing(wait_times, "wait times")?;
    if !(init_us >= 0.0 && readout_us > 0.0) {
        return domain("initialization and readout durations must be non-negative and positive");
    }
    let params = incoherent_params(model);
    let mut signal = Vec::with_capacity(wait_times.len());
    for &tau in wait_times {
        let mut engine = Engine::new(model, &params)?;
        let mut s = engine.initial_state();
        let mut t = 0.0;
        engine.laser(&mut s, init_us / 1e6, 1.0, None, t, None)?;
        t += init_us / 1e6;
        engine.dark(&mut s, tau, t, None)?;
        t += tau;
        signal.push(engine.laser(&mut s, readout_us / 1e6, 1.0, Some(readout_us / 1e6), t, None)?);
    }
    let meta = model.metadata().with("kind", "t1_recovery").with("init_us", init_us).with("readout_us", readout_us);
    Ok(Trace::new(wait_times.to_vec(), signal, "wait_s", meta))
}

fn coherent_metadata(model: &PumpModel, params: &CoherentParams, protocol: &ReadoutProtocol, kind: &str) -> crate::io::Metadata {
    model
        .metadata()
        .with("kind", kind)
        .with("rabi_mhz", params.rabi_frequency_mhz)
        .with("detuning_mhz", params.detuning_mhz)
        .with("t2_ns", params.t2_ns)
        .with("init_s", protocol.init_s)
        .with("wait_s", protocol.wait_s)
        .with("readout_s", protocol.readout_s)
}

/// Readout PL after a drive pulse of each duration (s), default timing.
pub fn simulate_rabi(model: &PumpModel, params: &CoherentParams, durations: &[f64]) -> Result<Trace> {
    simulate_rabi_with(model, params, &ReadoutProtocol::for_model(model), durations)
}

pub fn simulate_rabi_with(
    model: &PumpModel,
    params: &CoherentParams,
    protocol: &ReadoutProtocol,
    durations: &[f64],
) -> Result<Trace> {
    check_increasing(durations, "pulse durations")?;
    protocol.check()?;
    let mut signal = Vec::with_capacity(durations.len());
    for &d in durations {
        let mut engine = Engine::new(model, params)?;
        let (pair, detuning, scale) = engine.address(None)?;
        let mut s = engine.initial_state();
        let mut t = 0.0;
        engine.laser(&mut s, protocol.init_s, 1.0, None, t, None)?;
        t += protocol.init_s;
        engine.dark(&mut s, protocol.wait_s, t, None)?;
        t += protocol.wait_s;
        let rabi = params.rabi_frequency_mhz * 1e6 * scale;
        engine.pulse(&mut s, pair, d, rabi, detuning, params.mw_phase, t)?;
        t += d;
        signal.push(engine.laser(&mut s, protocol.readout_s, 1.0, Some(protocol.measure_s), t, None)?);
    }
    let meta = coherent_metadata(model, params, protocol, "rabi");
    Ok(Trace::new(durations.to_vec(), signal, "pulse_s", meta))
}

/// Hahn-echo output: optical readout and the normalized pair polarization.
#[derive(Clone, Debug)]
pub struct HahnEcho {
    pub signal: Trace,
    /// `(rho_ii - rho_jj)` after the last pulse over its value before the first.
    pub amplitude: Trace,
    pub report: PhysicalityReport,
}

pub fn simulate_hahn_echo(model: &PumpModel, params: &CoherentParams, tau_values: &[f64]) -> Result<HahnEcho> {
    simulate_hahn_echo_with(model, params, &ReadoutProtocol::for_model(model), tau_values)
}

/// `pi/2 - tau - pi - tau - pi/2` with instantaneous pulses, for each `tau` (s).
pub fn simulate_hahn_echo_with(
    model: &PumpModel,
    params: &CoherentParams,
    protocol: &ReadoutProtocol,
    tau_values: &[f64],
) -> Result<HahnEcho> {
    check_increasing(tau_values, "tau values")?;
    protocol.check()?;
    let mut signal = Vec::with_capacity(tau_values.len());
    let mut amplitude = Vec::with_capacity(tau_values.len());
    let mut report = PhysicalityReport::default();
    for &tau in tau_values {
        let mut engine = Engine::new(model, params)?;
        let (pair, detuning, _) = engine.address(None)?;
        let phase = params.mw_phase;
        let mut s = engine.initial_state();
        let mut t = 0.0;
        engine.laser(&mut s, protocol.init_s, 1.0, None, t, None)?;
        t += protocol.init_s;
        engine.dark(&mut s, protocol.wait_s, t, None)?;
        t += protocol.wait_s;
        let pol = |s: &super::engine::HybridState| s.rho[(pair.0, pair.0)].re - s.rho[(pair.1, pair.1)].re;
        let before = pol(&s);
        engine.rotate(&mut s, pair, FRAC_PI_2, phase, detuning)?;
        engine.dark(&mut s, tau, t, None)?;
        t += tau;
        engine.rotate(&mut s, pair, PI, phase, detuning)?;
        engine.dark(&mut s, tau, t, None)?;
        t += tau;
        engine.rotate(&mut s, pair, FRAC_PI_2, phase, detuning)?;
        amplitude.push(pol(&s) / before);
        signal.push(engine.laser(&mut s, protocol.readout_s, 1.0, Some(protocol.measure_s), t, None)?);
        report.merge(&engine.report);
    }
    let meta = coherent_metadata(model, params, protocol, "hahn_echo");
    Ok(HahnEcho {
        signal: Trace::new(tau_values.to_vec(), signal, "tau_s", meta.clone()),
        amplitude: Trace::new(tau_values.to_vec(), amplitude, "tau_s", meta.with("signal", "echo_amplitude")),
        report,
    })
}

/// Readout contrast `(S - S0)/S0` versus drive frequency (GHz) for a pulse of
/// `pi_duration` seconds, where `S0` is the readout without a pulse.
pub fn simulate_pulsed_odmr(model: &PumpModel, params: &CoherentParams, freqs_ghz: &[f64], pi_duration: f64) -> Result<Spectrum> {
    simulate_pulsed_odmr_with(model, params, &ReadoutProtocol::for_model(model), freqs_ghz, pi_duration)
}

pub fn simulate_pulsed_odmr_with(
    model: &PumpModel,
    params: &CoherentParams,
    protocol: &ReadoutProtocol,
    freqs_ghz: &[f64],
    pi_duration: f64,
) -> Result<Spectrum> {
    protocol.check()?;
    if !(pi_duration >= 0.0 && pi_duration.is_finite()) {
        return domain("pulse duration must be finite and non-negative");
    }
    let run = |freq: Option<f64>| -> Result<f64> {
        let mut engine = Engine::new(model, params)?;
        let mut s = engine.initial_state();
        let mut t = 0.0;
        engine.laser(&mut s, protocol.init_s, 1.0, None, t, None)?;
        t += protocol.init_s;
        engine.dark(&mut s, protocol.wait_s, t, None)?;
        t += protocol.wait_s;
        if let Some(f) = freq {
            let (pair, detuning, scale) = engine.address(Some(f * 1e9))?;
            let rabi = params.rabi_frequency_mhz * 1e6 * scale;
            engine.pulse(&mut s, pair, pi_duration, rabi, detuning, params.mw_phase, t)?;
            t += pi_duration;
        }
        engine.laser(&mut s, protocol.readout_s, 1.0, Some(protocol.measure_s), t, None)
    };
    let reference = run(None)?;
    if reference <= 0.0 {
        return domain("reference readout is zero; the pump rate must be positive");
    }
    let values = freqs_ghz.iter().map(|&f| Ok((run(Some(f))? - reference) / reference)).collect::<Result<Vec<_>>>()?;
    let meta = coherent_metadata(model, params, protocol, "pulsed_odmr").with("pi_duration_s", pi_duration);
    Spectrum::new(freqs_ghz.to_vec(), values, AxisUnit::Gigahertz, meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::OpticalModel;
    use crate::spin::SpinSystem;

    const T_OPT: f64 = 3.3e-6;

    fn model(t1_ms: f64) -> PumpModel {
        let sys = SpinSystem::triplet(3.63, 0.0, 2.0).unwrap();
        PumpModel::new(sys, OpticalModel::new(1025.0, 3.3).unwrap(), 1.0 / T_OPT, t1_ms).unwrap().with_field_mt(10.0)
    }

    #[test]
    fn hole_burning_polarizes_beyond_fourteen_percent() {
        let hb = simulate_hole_burning(&model(0.22), 2.0).unwrap();
        assert!(hb.contrast >= 0.14, "{}", hb.contrast);
        assert!(hb.polarization >= 0.14);
        assert!((hb.final_state.sum() - 1.0).abs() < 1e-9);
        let pl = &hb.pl_trace.signal;
        let peak = pl.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert!(pl[peak..].windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }

    #[test]
    fn fast_relaxation_prevents_polarization() {
        let hb = simulate_hole_burning(&model(T_OPT / 10.0 * 1e3), 2.0).unwrap();
        assert!(hb.contrast < 0.05);
        assert!(hb.polarization < 0.05);
    }

    #[test]
    fn no_pump_means_no_pl() {
        let mut m = model(0.22);
        m.pump_rate = 0.0;
        let hb = simulate_hole_burning(&m, 0.1).unwrap();
        assert!(!hb.contrast_defined);
        assert_eq!(hb.contrast, 0.0);
        assert!(hb.pl_trace.signal.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn t1_recovery_is_minimal_at_zero_and_saturates() {
        let m = model(0.22);
        let waits = [0.0, 0.1e-3, 0.22e-3, 20.0 * 0.22e-3];
        let tr = simulate_t1_recovery(&m, 300.0, 20.0, &waits).unwrap();
        assert!(tr.signal.windows(2).all(|w| w[1] > w[0]));
        // unpolarized reference: readout straight from equilibrium
        let eq = simulate_t1_recovery(&m, 0.0, 20.0, &[0.0]).unwrap().signal[0];
        assert!((tr.signal[3] - eq).abs() / eq < 0.01);
        assert!(simulate_t1_recovery(&m, 300.0, 20.0, &[1e-4, 0.0]).is_err());
    }

    #[test]
    fn hahn_echo_at_zero_tau_is_full_amplitude() {
        let m = model(0.22);
        let p = CoherentParams::new(12.5, 0.0, 640.0).unwrap();
        let echo = simulate_hahn_echo(&m, &p, &[0.0, 320e-9]).unwrap();
        assert!((echo.amplitude.signal[0] - 1.0).abs() < 1e-12);
        assert!((echo.amplitude.signal[1] - (-1.0f64).exp()).abs() < 1e-3);
        assert!(echo.report.is_physical(1e-10));
    }

    #[test]
    fn zero_length_rabi_pulse_equals_reference() {
        let m = model(0.22);
        let p = CoherentParams::new(12.5, 0.0, 640.0).unwrap();
        let rabi = simulate_rabi(&m, &p, &[0.0, 40e-9]).unwrap();
        let proto = ReadoutProtocol::for_model(&m);
        let reference = simulate_pulsed_odmr_with(&m, &p, &proto, &[9.0], 0.0).unwrap();
        assert!(reference.values()[0].abs() < 1e-12);
        assert!(rabi.signal[1] > rabi.signal[0]);
    }
}
