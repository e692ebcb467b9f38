use nalgebra::Vector3;

use super::fit::{least_squares, FitResult, LsSetup};
use super::minimize::Bound;
use crate::error::{domain, Result};
use crate::spin::{build_hamiltonian, eigensystem, FieldPoint, SpinSystem, MU_B_OVER_H};

/// Values to hold fixed during [`extract_spin_params`]; `None` leaves a parameter free.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SpinParamConstraints {
    pub e: Option<f64>,
    pub g: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpinParams {
    pub d: f64,
    pub e: f64,
    pub g: f64,
    /// 1 sigma; zero for fixed parameters.
    pub d_sigma: f64,
    pub e_sigma: f64,
    pub g_sigma: f64,
    pub fit: FitResult,
}

/// Transition frequencies (GHz) of a triplet with the field along its z axis.
fn lines(d: f64, e: f64, g: f64, b_mt: f64) -> Option<[f64; 3]> {
    let sys = SpinSystem::triplet(d, e.min(d / 3.0), g).ok()?;
    let h = build_hamiltonian(&sys, &FieldPoint::along(Vector3::z_axis(), b_mt * 1e-3));
    let en = eigensystem(&h).ok()?.energies;
    Some([en[1] - en[0], en[2] - en[0], en[2] - en[1]])
}

/// Fits `D`, `E` and `g` to ODMR ridge points `(B in mT, f in GHz)` with the field along the
/// molecular z axis. Each point is compared with the nearest transition of the full
/// eigensolve, so points from both branches can be mixed freely.
pub fn extract_spin_params(points: &[(f64, f64)], constraints: SpinParamConstraints) -> Result<SpinParams> {
    if points.iter().any(|(b, f)| !b.is_finite() || !f.is_finite() || *f <= 0.0) {
        return domain("ridge points must be finite with positive frequency");
    }
    let free = 1 + usize::from(constraints.e.is_none()) + usize::from(constraints.g.is_none());
    if points.len() < free {
        return domain(format!("{free} free parameters need at least {free} ridge points, got {}", points.len()));
    }
    let b_lo = points.iter().map(|p| p.0.abs()).fold(f64::INFINITY, f64::min);
    let b_hi = points.iter().map(|p| p.0.abs()).fold(0.0, f64::max);
    if constraints.g.is_none() && b_hi - b_lo <= 1e-12 * b_hi.max(1.0) {
        return domain("all ridge points share one field, so g is not determined");
    }

    // starting values from the lowest-field and highest-field groups
    let group = |b: f64| -> Vec<f64> { points.iter().filter(|p| (p.0.abs() - b).abs() <= 1e-9).map(|p| p.1).collect() };
    let stats = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    };
    let (lo, hi) = stats(&group(b_lo));
    let d0 = (lo + hi) / 2.0;
    let e0 = constraints.e.unwrap_or(if b_lo < 1e-3 * b_hi.max(1e-9) { ((hi - lo) / 2.0).min(d0 / 3.0) } else { 0.0 });
    let g0 = constraints.g.unwrap_or_else(|| {
        let (l, h) = stats(&group(b_hi));
        let z = ((h - l) / 2.0).powi(2) - e0 * e0;
        let g = z.max(0.0).sqrt() / (MU_B_OVER_H * b_hi * 1e-3);
        if g.is_finite() && g > 0.1 { g } else { 2.0 }
    });

    let mut names = vec!["D".to_string()];
    let mut x0 = vec![d0];
    let mut bounds = vec![Bound::lower(0.0)];
    let mut scales = vec![d0.abs().max(1e-3)];
    if constraints.e.is_none() {
        names.push("E".into());
        x0.push(e0.max(1e-4 * d0.abs()));
        bounds.push(Bound::lower(0.0));
        scales.push(1e-2 * d0.abs().max(1e-3));
    }
    if constraints.g.is_none() {
        names.push("g".into());
        x0.push(g0);
        bounds.push(Bound::lower(0.0));
        scales.push(g0);
    }
    let unpack = |p: &[f64]| {
        let mut it = p.iter().copied();
        let d = it.next().unwrap_or(d0);
        let e = constraints.e.unwrap_or_else(|| it.next().unwrap_or(0.0));
        let g = constraints.g.unwrap_or_else(|| it.next().unwrap_or(2.0));
        (d, e, g)
    };
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let predict = |p: &[f64]| -> Vec<f64> {
        let (d, e, g) = unpack(p);
        points
            .iter()
            .map(|&(b, f)| match lines(d, e, g, b) {
                Some(l) => l.into_iter().min_by(|a, c| (a - f).abs().total_cmp(&(c - f).abs())).unwrap_or(f64::NAN),
                None => f64::NAN,
            })
            .collect()
    };
    let fit = least_squares(
        LsSetup { tag: "spin_params".into(), names, x: &xs, y: &ys, x0: &x0, bounds: &bounds, scales: &scales },
        predict,
    )?;
    let (d, e, g) = unpack(&fit.params);
    let sigma = |n: &str| fit.uncertainty(n).unwrap_or(0.0);
    Ok(SpinParams { d, e: e.min(d / 3.0), g, d_sigma: sigma("D"), e_sigma: sigma("E"), g_sigma: sigma("g"), fit })
}
