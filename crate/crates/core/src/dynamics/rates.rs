use nalgebra::{DMatrix, DVector, Matrix4, Matrix5, Vector5};

use super::model::{GroundRelaxation, PopulationState, PopulationTrace, PumpModel};
use crate::error::{domain, Error, Result};

/// Rate matrix `M` with `dp/dt = M p` for `p = (p0, p-, p+, pS)`, in s^-1.
///
/// The laser moves the bright sublevel into the singlet at `pump_rate` (one way). The
/// singlet decays at `1/t_opt` split by the branching ratios. Ground sublevels
/// exchange so that any deviation from equilibrium decays at `1/T1`.
pub fn build_rate_matrix(model: &PumpModel) -> Result<Matrix4<f64>> {
    let eq = model.equilibrium()?;
    Ok(rate_matrix(model, model.pump_rate, &eq))
}

pub(crate) fn rate_matrix(model: &PumpModel, pump_rate: f64, eq: &[f64; 3]) -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    let b = model.bright.index();
    m[(3, b)] += pump_rate;
    m[(b, b)] -= pump_rate;
    let gamma = 1.0 / model.t_opt_s();
    for (i, &branch) in model.optical.branching.iter().enumerate() {
        m[(i, 3)] += branch * gamma;
    }
    m[(3, 3)] -= gamma;
    let t1 = model.t1_s();
    for i in 0..3 {
        for j in 0..3 {
            if i == j {
                continue;
            }
            let w = match model.relaxation {
                GroundRelaxation::Symmetric => 1.0 / (3.0 * t1),
                GroundRelaxation::Boltzmann { .. } => eq[i] / t1,
            };
            m[(i, j)] += w;
            m[(j, j)] -= w;
        }
    }
    m
}

/// Largest total out-rate, the stiffest timescale of the matrix.
fn fastest_rate(m: &Matrix4<f64>) -> f64 {
    (0..4).map(|i| m[(i, i)].abs()).fold(0.0, f64::max)
}

/// One classical RK4 step for the linear system `y' = A y`, written as a matrix:
/// `I + hA + (hA)^2/2 + (hA)^3/6 + (hA)^4/24`.
pub(crate) fn rk4_step_matrix(a: &Matrix5<f64>, h: f64) -> Matrix5<f64> {
    let b = a * h;
    let id = Matrix5::identity();
    id + b * (id + b * (id + b * (id + b / 4.0) / 3.0) / 2.0)
}

/// Collects `(t, PL)` samples at a fixed stride of steps.
pub(crate) struct PlRecorder {
    pub time: Vec<f64>,
    pub pl: Vec<f64>,
}

/// Recorded traces keep at most about this many points per segment.
pub(crate) const MAX_TRACE_POINTS: usize = 4000;

/// Fixed-step population propagation with a PL accumulator.
///
/// The state is `(p0, p-, p+, pS, acc)` where `acc` integrates `pl_weight * pS`.
/// Returns the number of steps taken.
pub(crate) fn propagate_populations(
    m: &Matrix4<f64>,
    pl_weight: f64,
    y: &mut Vector5<f64>,
    duration: f64,
    dt: f64,
    t0: f64,
    mut record: Option<&mut PlRecorder>,
    mut on_step: impl FnMut(&Vector5<f64>),
) -> usize {
    let nsteps = if duration > 0.0 { (duration / dt).ceil().max(1.0) as usize } else { 0 };
    if let Some(rec) = record.as_deref_mut() {
        rec.time.push(t0);
        rec.pl.push(pl_weight * y[3]);
    }
    if nsteps == 0 {
        return 0;
    }
    let h = duration / nsteps as f64;
    let mut a = Matrix5::zeros();
    a.fixed_view_mut::<4, 4>(0, 0).copy_from(m);
    a[(4, 3)] = pl_weight;
    let step = rk4_step_matrix(&a, h);
    let stride = nsteps.div_ceil(MAX_TRACE_POINTS);
    for k in 1..=nsteps {
        *y = step * *y;
        on_step(y);
        if let Some(rec) = record.as_deref_mut() {
            if k % stride == 0 || k == nsteps {
                rec.time.push(t0 + duration * k as f64 / nsteps as f64);
                rec.pl.push(pl_weight * y[3]);
            }
        }
    }
    nsteps
}

fn check_state(p: &PopulationState) -> Result<()> {
    if p.p.iter().any(|&x| !(x >= -1e-12)) || (p.sum() - 1.0).abs() > 1e-9 {
        return domain(format!("populations must be non-negative and sum to 1, got {:?}", p.p));
    }
    Ok(())
}

/// Fixed-step RK4 integration of `dp/dt = M p`, recording every step.
///
/// The step is shortened so that a whole number of steps covers `duration`. Requires
/// `dt` no larger than 1/50 of the fastest timescale, `1 / max_i |M_ii|`.
pub fn integrate_populations(
    m: &Matrix4<f64>,
    p0: PopulationState,
    duration: f64,
    dt: f64,
) -> Result<PopulationTrace> {
    if !(duration >= 0.0 && duration.is_finite()) {
        return domain(format!("duration must be finite and non-negative, got {duration}"));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return domain(format!("step must be positive, got {dt}"));
    }
    let rate = fastest_rate(m);
    if dt * rate > (1.0 + 1e-12) / 50.0 {
        return domain(format!("step {dt:e} s exceeds 1/50 of the fastest timescale {:e} s", 1.0 / rate));
    }
    check_state(&p0)?;
    let mut y = Vector5::new(p0.p[0], p0.p[1], p0.p[2], p0.p[3], 0.0);
    let mut time = vec![0.0];
    let mut states = vec![p0];
    let mut k = 0usize;
    let nsteps = if duration > 0.0 { (duration / dt).ceil().max(1.0) as usize } else { 0 };
    propagate_populations(m, 0.0, &mut y, duration, dt, 0.0, None, |y| {
        k += 1;
        time.push(duration * k as f64 / nsteps as f64);
        states.push(PopulationState::new([y[0], y[1], y[2], y[3]]));
    });
    Ok(PopulationTrace { time, states })
}

/// The population vector with `M p = 0` and unit sum.
///
/// Fails with [`Error::DegenerateSteadyState`] when the null space has more than one
/// dimension, as happens when dark sublevels are not coupled back.
pub fn steady_state(m: &Matrix4<f64>) -> Result<PopulationState> {
    let scale = m.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if scale == 0.0 {
        return Err(Error::DegenerateSteadyState(4));
    }
    for j in 0..4 {
        let col: f64 = m.column(j).sum();
        if col.abs() > 1e-9 * scale {
            return domain(format!("rate matrix column {j} sums to {col:e}, not population conserving"));
        }
    }
    let svd = DMatrix::from_iterator(4, 4, m.iter().copied()).svd(false, false);
    let smax = svd.singular_values.max();
    let nullity = svd.singular_values.iter().filter(|&&s| s <= 1e-10 * smax).count();
    if nullity != 1 {
        return Err(Error::DegenerateSteadyState(nullity));
    }
    let mut a = DMatrix::<f64>::zeros(5, 4);
    a.view_mut((0, 0), (4, 4)).copy_from(m);
    a.row_mut(4).fill(1.0);
    let rhs = DVector::from_column_slice(&[0.0, 0.0, 0.0, 0.0, 1.0]);
    // scale the normalization row to the matrix so least squares weights both parts evenly
    a.row_mut(4).scale_mut(scale);
    let rhs = rhs * scale;
    let p = a.svd(true, true).solve(&rhs, 1e-14).or_else(|e| domain(format!("steady-state solve failed: {e}")))?;
    let mut out = [p[0], p[1], p[2], p[3]];
    let total: f64 = out.iter().sum();
    for x in &mut out {
        *x /= total;
    }
    Ok(PopulationState::new(out))
}

/// Fractional PL drop between an undepleted bright sublevel and the pumped steady state.
///
/// The reference is the bright sublevel at its equilibrium share, balanced only
/// against the singlet: `p_b = p_eq / (1 + W t_opt)`. Zero when the pump is off.
pub fn steady_state_contrast(model: &PumpModel) -> Result<f64> {
    if model.pump_rate == 0.0 {
        return Ok(0.0);
    }
    let eq = model.equilibrium()?;
    let ss = steady_state(&rate_matrix(model, model.pump_rate, &eq))?;
    let b = model.bright.index();
    let reference = eq[b] / (1.0 + model.pump_rate * model.t_opt_s());
    Ok(1.0 - ss.p[b] / reference)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::OpticalModel;
    use crate::spin::SpinSystem;

    const T_OPT: f64 = 3.3e-6;

    fn model(w: f64, t1_ms: f64) -> PumpModel {
        let sys = SpinSystem::triplet(3.63, 0.0, 2.0).unwrap();
        PumpModel::new(sys, OpticalModel::new(1025.0, 3.3).unwrap(), w, t1_ms).unwrap()
    }

    #[test]
    fn columns_sum_to_zero() {
        for (w, t1) in [(0.0, 0.22), (1.0 / T_OPT, 0.22), (5e4, 1e-3), (1e6, 100.0)] {
            let m = build_rate_matrix(&model(w, t1)).unwrap();
            for j in 0..4 {
                assert!(m.column(j).sum().abs() < 1e-12 * m.amax().max(1.0));
            }
        }
    }

    #[test]
    fn singlet_decay_is_exponential() {
        let m = build_rate_matrix(&model(0.0, 0.22)).unwrap();
        let tr = integrate_populations(&m, PopulationState::new([0.0, 0.0, 0.0, 1.0]), 5.0 * T_OPT, T_OPT / 100.0).unwrap();
        for (t, s) in tr.time.iter().zip(&tr.states) {
            assert!((s.p[3] - (-t / T_OPT).exp()).abs() < 1e-8);
        }
        assert!(tr.max_conservation_error() < 1e-12);
    }

    #[test]
    fn ground_deviation_decays_at_one_over_t1() {
        let t1 = 0.22e-3;
        let m = build_rate_matrix(&model(0.0, 0.22)).unwrap();
        let p0 = PopulationState::ground([1.0, 0.0, 0.0]);
        let tr = integrate_populations(&m, p0, 2.0 * t1, T_OPT / 100.0).unwrap();
        let (t, s) = (tr.time.last().unwrap(), tr.last().unwrap());
        let expected = 1.0 / 3.0 + (2.0 / 3.0) * (-t / t1).exp();
        assert!((s.p[0] - expected).abs() < 1e-10);
    }

    #[test]
    fn zero_matrix_gives_constant_trace() {
        let p0 = PopulationState::ground([0.2, 0.3, 0.5]);
        let tr = integrate_populations(&Matrix4::zeros(), p0, 1e-3, 1e-5).unwrap();
        assert!(tr.states.iter().all(|s| *s == p0));
        assert_eq!(tr.time.len(), 101);
    }

    #[test]
    fn step_halving_converges() {
        let m = build_rate_matrix(&model(1.0 / T_OPT, 0.22)).unwrap();
        let p0 = PopulationState::ground([1.0 / 3.0; 3]);
        let a = integrate_populations(&m, p0, 50.0 * T_OPT, T_OPT / 100.0).unwrap();
        let b = integrate_populations(&m, p0, 50.0 * T_OPT, T_OPT / 200.0).unwrap();
        for k in 0..4 {
            assert!((a.last().unwrap().p[k] - b.last().unwrap().p[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn step_too_large_is_rejected() {
        let m = build_rate_matrix(&model(1.0 / T_OPT, 0.22)).unwrap();
        let p0 = PopulationState::ground([1.0 / 3.0; 3]);
        assert!(integrate_populations(&m, p0, 1e-4, T_OPT / 10.0).is_err());
        assert!(integrate_populations(&m, PopulationState::ground([0.5; 3]), 1e-4, T_OPT / 100.0).is_err());
    }

    #[test]
    fn steady_state_without_pump_is_uniform() {
        let ss = steady_state(&build_rate_matrix(&model(0.0, 0.22)).unwrap()).unwrap();
        for k in 0..3 {
            assert!((ss.p[k] - 1.0 / 3.0).abs() < 1e-14);
        }
        assert!(ss.p[3].abs() < 1e-14);
    }

    #[test]
    fn steady_state_matches_long_integration() {
        let md = model(1.0 / T_OPT, 0.22);
        let m = build_rate_matrix(&md).unwrap();
        let ss = steady_state(&m).unwrap();
        let tr = integrate_populations(&m, PopulationState::ground([1.0 / 3.0; 3]), 50.0 * md.t1_s(), md.default_dt(md.pump_rate))
            .unwrap();
        for k in 0..4 {
            assert!((ss.p[k] - tr.last().unwrap().p[k]).abs() < 1e-8, "{k}");
        }
        // closed form for uniform branching and symmetric exchange
        let (w, g, x) = (1.0 / T_OPT, 1.0 / T_OPT, 1.0 / (3.0 * md.t1_s()));
        let ps_over_b = w / g;
        let dark_over_b = (g * ps_over_b / 3.0 + x) / x;
        let b = 1.0 / (1.0 + ps_over_b + 2.0 * dark_over_b);
        assert!((ss.p[0] - b).abs() < 1e-12);
    }

    #[test]
    fn no_relaxation_limit_empties_bright_level() {
        let md = model(1.0 / T_OPT, 1e6 * 3.3e-3);
        let ss = steady_state(&build_rate_matrix(&md).unwrap()).unwrap();
        assert!(ss.p[0] < 1e-5);
        assert!(steady_state_contrast(&md).unwrap() > 0.9999);
    }

    #[test]
    fn uncoupled_dark_levels_are_degenerate() {
        let mut m = Matrix4::zeros();
        m[(3, 0)] = 1.0;
        m[(0, 0)] = -1.0;
        m[(1, 3)] = 1.0;
        m[(3, 3)] = -1.0;
        assert!(matches!(steady_state(&m), Err(Error::DegenerateSteadyState(2))));
    }

    #[test]
    fn contrast_zero_without_pump() {
        assert_eq!(steady_state_contrast(&model(0.0, 0.22)).unwrap(), 0.0);
    }
}
