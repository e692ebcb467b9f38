use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};

use super::minimize::{minimize, Bound, MinimizeOptions};
use crate::error::{domain, Result};
use crate::io::{columns_to_csv, Metadata};

/// Model function families.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitModel {
    /// `A exp(-x/tau) + C`, parameters `[A, tau, C]`.
    ExpDecay,
    /// `A - B exp(-x/tau)`, parameters `[A, B, tau]`.
    ExpRecovery,
    /// Baseline plus `k` Lorentzians of peak height `amp_i` and full width `width_i`;
    /// parameters `[baseline, center_1, width_1, amp_1, ...]`.
    LorentzianSum(usize),
    /// `A exp(-x/tau) cos(2 pi f x + phi) + C`, parameters `[A, f, tau, phi, C]`.
    DampedCosine,
    /// `a x^b`, parameters `[a, b]`.
    PowerLaw,
}

impl FitModel {
    pub fn tag(&self) -> String {
        match self {
            FitModel::ExpDecay => "exp_decay".into(),
            FitModel::ExpRecovery => "exp_recovery".into(),
            FitModel::LorentzianSum(k) => format!("lorentzian_sum({k})"),
            FitModel::DampedCosine => "damped_cosine".into(),
            FitModel::PowerLaw => "power_law".into(),
        }
    }

    /// Parses the names produced by [`FitModel::tag`]; `lorentzian_sum` alone means one peak.
    pub fn from_tag(tag: &str) -> Option<Self> {
        Some(match tag {
            "exp_decay" => FitModel::ExpDecay,
            "exp_recovery" => FitModel::ExpRecovery,
            "damped_cosine" => FitModel::DampedCosine,
            "power_law" => FitModel::PowerLaw,
            "lorentzian_sum" => FitModel::LorentzianSum(1),
            _ => {
                let k = tag.strip_prefix("lorentzian_sum(")?.strip_suffix(')')?.parse().ok()?;
                if k == 0 {
                    return None;
                }
                FitModel::LorentzianSum(k)
            }
        })
    }

    pub fn param_names(&self) -> Vec<String> {
        let s = |v: &[&str]| v.iter().map(|s| s.to_string()).collect();
        match self {
            FitModel::ExpDecay => s(&["A", "tau", "C"]),
            FitModel::ExpRecovery => s(&["A", "B", "tau"]),
            FitModel::DampedCosine => s(&["A", "f", "tau", "phi", "C"]),
            FitModel::PowerLaw => s(&["a", "b"]),
            FitModel::LorentzianSum(k) => {
                let mut v = vec!["baseline".to_string()];
                for i in 1..=*k {
                    v.extend([format!("center{i}"), format!("width{i}"), format!("amp{i}")]);
                }
                v
            }
        }
    }

    pub fn n_params(&self) -> usize {
        match self {
            FitModel::ExpDecay | FitModel::ExpRecovery => 3,
            FitModel::DampedCosine => 5,
            FitModel::PowerLaw => 2,
            FitModel::LorentzianSum(k) => 1 + 3 * k,
        }
    }

    pub fn eval(&self, p: &[f64], x: f64) -> f64 {
        match self {
            FitModel::ExpDecay => p[0] * (-x / p[1]).exp() + p[2],
            FitModel::ExpRecovery => p[0] - p[1] * (-x / p[2]).exp(),
            FitModel::DampedCosine => p[0] * (-x / p[2]).exp() * (2.0 * PI * p[1] * x + p[3]).cos() + p[4],
            FitModel::PowerLaw => p[0] * x.powf(p[1]),
            FitModel::LorentzianSum(k) => {
                let mut y = p[0];
                for i in 0..*k {
                    let (c, w, a) = (p[1 + 3 * i], p[2 + 3 * i], p[3 + 3 * i]);
                    let hw2 = (w / 2.0) * (w / 2.0);
                    y += a * hw2 / ((x - c) * (x - c) + hw2);
                }
                y
            }
        }
    }
}

/// A model, data and a starting point.
#[derive(Clone, Debug)]
pub struct FitProblem {
    pub model: FitModel,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub initial_guess: Vec<f64>,
    /// Empty means unbounded.
    pub bounds: Vec<Bound>,
}

impl FitProblem {
    pub fn new(model: FitModel, x: Vec<f64>, y: Vec<f64>, initial_guess: Vec<f64>) -> Result<Self> {
        let p = FitProblem { model, x, y, initial_guess, bounds: Vec::new() };
        p.check()?;
        Ok(p)
    }

    pub fn with_bounds(mut self, bounds: Vec<Bound>) -> Result<Self> {
        self.bounds = bounds;
        self.check()?;
        Ok(self)
    }

    fn check(&self) -> Result<()> {
        let n = self.model.n_params();
        if self.x.len() != self.y.len() {
            return domain(format!("x has {} points but y has {}", self.x.len(), self.y.len()));
        }
        if self.x.len() < n + 1 {
            return domain(format!("{} needs at least {} points, got {}", self.model.tag(), n + 1, self.x.len()));
        }
        if self.x.iter().chain(&self.y).any(|v| !v.is_finite()) {
            return domain("data must be finite");
        }
        if self.initial_guess.len() != n {
            return domain(format!("{} takes {n} parameters, got {}", self.model.tag(), self.initial_guess.len()));
        }
        if !self.bounds.is_empty() && self.bounds.len() != n {
            return domain(format!("{} bounds for {n} parameters", self.bounds.len()));
        }
        Ok(())
    }

    /// Least-squares fit from the stored initial guess.
    pub fn solve(&self) -> Result<FitResult> {
        self.check()?;
        let scales: Vec<f64> = self.initial_guess.iter().map(|v| v.abs()).collect();
        let model = self.model;
        let x = self.x.clone();
        let residuals = move |p: &[f64]| -> Vec<f64> { x.iter().map(|&xi| model.eval(p, xi)).collect() };
        least_squares(
            LsSetup {
                tag: model.tag(),
                names: model.param_names(),
                x: &self.x,
                y: &self.y,
                x0: &self.initial_guess,
                bounds: &self.bounds,
                scales: &fallback_scales(&scales),
            },
            residuals,
        )
    }
}

fn fallback_scales(s: &[f64]) -> Vec<f64> {
    let m = s.iter().copied().fold(0.0, f64::max);
    s.iter().map(|&v| if v > 0.0 { v } else if m > 0.0 { 1e-3 * m } else { 1.0 }).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub model: String,
    pub names: Vec<String>,
    pub params: Vec<f64>,
    /// 1 sigma from the finite-difference curvature of the residual sum of squares.
    /// Infinite for unidentifiable parameters.
    pub param_uncertainty: Vec<f64>,
    /// Root-mean-square residual relative to the data's peak-to-peak range.
    pub residual_rms: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Parameters the data does not constrain.
    pub unidentifiable: Vec<String>,
    pub message: Option<String>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub fitted: Vec<f64>,
}

impl FitResult {
    fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.params[i])
    }

    pub fn uncertainty(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.param_uncertainty[i])
    }

    pub fn is_identifiable(&self, name: &str) -> bool {
        !self.unidentifiable.iter().any(|n| n == name)
    }

    fn fail(mut self, message: impl Into<String>) -> Self {
        self.converged = false;
        self.message = Some(message.into());
        self
    }

    /// `key=value` lines.
    pub fn to_report(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "model={}", self.model);
        let _ = writeln!(s, "converged={}", self.converged);
        let _ = writeln!(s, "points={}", self.x.len());
        let _ = writeln!(s, "iterations={}", self.iterations);
        let _ = writeln!(s, "evaluations={}", self.evaluations);
        let _ = writeln!(s, "residual_rms={}", self.residual_rms);
        for ((n, v), e) in self.names.iter().zip(&self.params).zip(&self.param_uncertainty) {
            let _ = writeln!(s, "{n}={v}");
            let _ = writeln!(s, "{n}.sigma={e}");
        }
        let _ = writeln!(s, "unidentifiable={}", self.unidentifiable.join(","));
        if let Some(m) = &self.message {
            let _ = writeln!(s, "message={m}");
        }
        s
    }

    /// Data, model and residual columns.
    pub fn residuals_csv(&self) -> String {
        let r: Vec<f64> = self.y.iter().zip(&self.fitted).map(|(y, f)| y - f).collect();
        let meta = Metadata::new().with("model", &self.model);
        columns_to_csv(&meta, &["x", "y", "fit", "residual"], &[&self.x, &self.y, &self.fitted, &r])
    }
}

pub(crate) struct LsSetup<'a> {
    pub tag: String,
    pub names: Vec<String>,
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub x0: &'a [f64],
    pub bounds: &'a [Bound],
    /// Characteristic size of each parameter, for simplex and difference steps.
    pub scales: &'a [f64],
}

/// Residual sum of squares, with non-finite predictions mapped to the largest finite value
/// so the simplex treats them as very bad points.
fn ssr(y: &[f64], pred: &[f64]) -> f64 {
    let s: f64 = y.iter().zip(pred).map(|(a, b)| (a - b) * (a - b)).sum();
    if s.is_finite() { s } else { f64::MAX }
}

fn data_scale(y: &[f64]) -> f64 {
    let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let amax = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if hi - lo > 0.0 {
        hi - lo
    } else if amax > 0.0 {
        amax
    } else {
        1.0
    }
}

pub(crate) fn least_squares(setup: LsSetup<'_>, predict: impl Fn(&[f64]) -> Vec<f64>) -> Result<FitResult> {
    let LsSetup { tag, names, x, y, x0, bounds, scales } = setup;
    let n = y.len();
    let ys = y.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let norm = 1.0 / (n as f64 * ys * ys);
    let objective = |p: &[f64]| {
        let v = ssr(y, &predict(p)) * norm;
        if v.is_finite() { v } else { f64::MAX }
    };
    let opts = MinimizeOptions {
        bounds: bounds.to_vec(),
        initial_step: Some(x0.iter().zip(scales).map(|(v, s)| 0.05 * v.abs().max(*s)).collect()),
        ..Default::default()
    };
    let m = minimize(objective, x0, &opts)?;
    let p = m.x;
    let fitted = predict(&p);
    let s = ssr(y, &fitted);
    let step: Vec<f64> = p.iter().zip(scales).map(|(v, s)| 1e-4 * v.abs().max(*s)).collect();
    let (param_uncertainty, flagged) = curvature_uncertainty(|q| ssr(y, &predict(q)), &p, &step, s, n);
    let unidentifiable = flagged.iter().map(|&i| names[i].clone()).collect();
    Ok(FitResult {
        model: tag,
        names,
        params: p,
        param_uncertainty,
        residual_rms: (s / n as f64).sqrt() / data_scale(y),
        iterations: m.iterations,
        evaluations: m.evaluations,
        converged: m.converged,
        unidentifiable,
        message: (!m.converged).then(|| "evaluation limit reached".to_string()),
        x: x.to_vec(),
        y: y.to_vec(),
        fitted,
    })
}

/// Covariance `2 s^2 H^-1` from a central-difference Hessian of the residual sum of
/// squares, with `s^2 = SSR/(N - p)`. Directions of vanishing curvature are excluded via a
/// pseudo-inverse and the parameters loading on them are returned as unidentifiable.
fn curvature_uncertainty(f: impl Fn(&[f64]) -> f64, p: &[f64], h: &[f64], f0: f64, n: usize) -> (Vec<f64>, Vec<usize>) {
    let k = p.len();
    let at = |d: &[(usize, f64)]| {
        let mut q = p.to_vec();
        for &(i, s) in d {
            q[i] += s;
        }
        f(&q)
    };
    let mut hs = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        let d2 = (at(&[(i, h[i])]) - 2.0 * f0 + at(&[(i, -h[i])])) / (h[i] * h[i]);
        hs[(i, i)] = d2 * h[i] * h[i];
        for j in 0..i {
            let dij = (at(&[(i, h[i]), (j, h[j])]) - at(&[(i, h[i]), (j, -h[j])]) - at(&[(i, -h[i]), (j, h[j])])
                + at(&[(i, -h[i]), (j, -h[j])]))
                / (4.0 * h[i] * h[j]);
            hs[(i, j)] = dij * h[i] * h[j];
            hs[(j, i)] = hs[(i, j)];
        }
    }
    if hs.iter().any(|v| !v.is_finite()) {
        return (vec![f64::INFINITY; k], (0..k).collect());
    }
    // hs is the Hessian in units of the difference steps, so it is well scaled
    let eig = SymmetricEigen::new(hs);
    let lmax = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let mut flagged = Vec::new();
    let mut pinv = DMatrix::<f64>::zeros(k, k);
    for (m, &l) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(m);
        if lmax <= 0.0 || l <= 1e-9 * lmax {
            for i in 0..k {
                if v[i].abs() > 0.1 && !flagged.contains(&i) {
                    flagged.push(i);
                }
            }
        } else {
            pinv += v * v.transpose() / l;
        }
    }
    flagged.sort_unstable();
    let s2 = if n > k { f0 / (n - k) as f64 } else { f64::NAN };
    let sigma = (0..k)
        .map(|i| if flagged.contains(&i) { f64::INFINITY } else { (2.0 * s2 * pinv[(i, i)]).sqrt() * h[i] })
        .collect();
    (sigma, flagged)
}

fn span(x: &[f64]) -> f64 {
    let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    hi - lo
}

fn min_x(x: &[f64]) -> f64 {
    x.iter().copied().fold(f64::INFINITY, f64::min)
}

fn check_xy(x: &[f64], y: &[f64], min_points: usize, what: &str) -> Result<()> {
    if x.len() != y.len() {
        return domain(format!("x has {} points but y has {}", x.len(), y.len()));
    }
    if x.len() < min_points {
        return domain(format!("{what} needs at least {min_points} points, got {}", x.len()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return domain("data must be finite");
    }
    Ok(())
}

/// Ordinary least squares of `y` on the given basis columns; returns coefficients and SSR.
fn linear_fit(columns: &[Vec<f64>], y: &[f64]) -> Option<(Vec<f64>, f64)> {
    let a = DMatrix::from_fn(y.len(), columns.len(), |r, c| columns[c][r]);
    let b = nalgebra::DVector::from_column_slice(y);
    let coef = a.clone().svd(true, true).solve(&b, 1e-14).ok()?;
    let ssr = (a * &coef - b).norm_squared();
    Some((coef.iter().copied().collect(), ssr))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExpKind {
    /// `A exp(-t/tau) + C`
    Decay,
    /// `A - B exp(-t/tau)`
    Recovery,
}

/// Single-exponential fit. The starting `tau` comes from a log-spaced scan with the linear
/// parameters solved exactly at each trial value.
pub fn fit_exponential(x: &[f64], y: &[f64], kind: ExpKind) -> Result<FitResult> {
    check_xy(x, y, 4, "exponential fit")?;
    let sp = span(x);
    if !(sp > 0.0) {
        return domain("exponential fit needs at least two distinct x values");
    }
    let x0 = min_x(x);
    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    for i in 0..=200 {
        let tau = sp * 10f64.powf(-2.0 + 3.0 * i as f64 / 200.0);
        let e: Vec<f64> = x.iter().map(|&t| (-(t - x0) / tau).exp()).collect();
        if let Some((c, s)) = linear_fit(&[e, vec![1.0; x.len()]], y) {
            if best.as_ref().is_none_or(|b| s < b.2) {
                best = Some((tau, c, s));
            }
        }
    }
    let Some((tau, c, _)) = best else {
        return domain("exponential initializer failed");
    };
    // shift the amplitude back to x = 0
    let amp = c[0] * (x0 / tau).exp();
    let amp = if amp.is_finite() { amp } else { c[0] };
    let ys = data_scale(y);
    let (model, guess, scales, bounds) = match kind {
        ExpKind::Decay => (
            FitModel::ExpDecay,
            vec![amp, tau, c[1]],
            vec![ys, sp, ys],
            vec![Bound::NONE, Bound::lower(0.0), Bound::NONE],
        ),
        ExpKind::Recovery => (
            FitModel::ExpRecovery,
            vec![c[1], -amp, tau],
            vec![ys, ys, sp],
            vec![Bound::NONE, Bound::NONE, Bound::lower(0.0)],
        ),
    };
    let r = fit_model(model, x, y, &guess, &bounds, &scales)?;
    let tau = match kind {
        ExpKind::Decay => r.params[1],
        ExpKind::Recovery => r.params[2],
    };
    let amp_fit = match kind {
        ExpKind::Decay => r.params[0],
        ExpKind::Recovery => r.params[1],
    };
    let mut r = r;
    if amp_fit.abs() <= 1e-9 * ys.max(y.iter().fold(0.0f64, |m, v| m.max(v.abs()))) && !r.unidentifiable.contains(&"tau".into())
    {
        r.unidentifiable.push("tau".into());
    }
    if r.is_identifiable("tau") && sp < 2.0 * tau {
        return Ok(r.fail(format!("data span {sp} covers less than 2 tau = {}", 2.0 * tau)));
    }
    Ok(r)
}

fn fit_model(model: FitModel, x: &[f64], y: &[f64], guess: &[f64], bounds: &[Bound], scales: &[f64]) -> Result<FitResult> {
    let predict = |p: &[f64]| -> Vec<f64> { x.iter().map(|&xi| model.eval(p, xi)).collect() };
    let guess: Vec<f64> = guess
        .iter()
        .zip(bounds)
        .map(|(&g, b)| {
            // keep starting values strictly inside lower bounds so the transform is regular
            match b.lower {
                Some(lo) if g <= lo => lo + 1e-3 * (g.abs().max(1e-300)),
                _ => g,
            }
        })
        .collect();
    least_squares(
        LsSetup { tag: model.tag(), names: model.param_names(), x, y, x0: &guess, bounds, scales },
        predict,
    )
}

/// Sum of `k` Lorentzians on a constant baseline. Peaks may be maxima or dips; the
/// polarity is taken from whichever excursion from the median is larger.
pub fn fit_lorentzian_sum(x: &[f64], y: &[f64], k: usize) -> Result<FitResult> {
    if k == 0 {
        return domain("lorentzian_sum needs at least one peak");
    }
    check_xy(x, y, 3 * k + 2, "lorentzian_sum")?;
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let xs: Vec<f64> = order.iter().map(|&i| x[i]).collect();
    let ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let mut sorted = ys.clone();
    sorted.sort_by(f64::total_cmp);
    let base = sorted[sorted.len() / 2];
    let sign = if sorted[sorted.len() - 1] - base >= base - sorted[0] { 1.0 } else { -1.0 };
    let s: Vec<f64> = ys.iter().map(|v| sign * (v - base)).collect();
    let top = s.iter().copied().fold(0.0, f64::max);

    let mut peaks: Vec<usize> = (1..s.len() - 1)
        .filter(|&i| s[i] > s[i - 1] && s[i] >= s[i + 1] && s[i] >= 0.1 * top && top > 0.0)
        .collect();
    peaks.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    let dx = span(&xs) / (xs.len() - 1) as f64;
    let model = FitModel::LorentzianSum(k);

    let mut guess = vec![base];
    let found = peaks.len();
    peaks.truncate(k);
    peaks.sort_unstable();
    for &i in &peaks {
        let half = s[i] / 2.0;
        let cross = |range: &mut dyn Iterator<Item = usize>| -> Option<f64> {
            let mut prev = i;
            for j in range {
                if s[j] <= half {
                    let t = (s[prev] - half) / (s[prev] - s[j]);
                    return Some(xs[prev] + t * (xs[j] - xs[prev]));
                }
                prev = j;
            }
            None
        };
        let left = cross(&mut (0..i).rev());
        let right = cross(&mut (i + 1..s.len()));
        let w = match (left, right) {
            (Some(l), Some(r)) => r - l,
            (Some(l), None) => 2.0 * (xs[i] - l),
            (None, Some(r)) => 2.0 * (r - xs[i]),
            (None, None) => 4.0 * dx,
        };
        guess.extend([xs[i], w.max(dx), sign * s[i]]);
    }
    if found < k {
        let mut names = model.param_names();
        names.truncate(guess.len());
        let np = guess.len();
        let r = FitResult {
            model: model.tag(),
            names,
            params: guess,
            param_uncertainty: vec![f64::NAN; np],
            residual_rms: f64::NAN,
            iterations: 0,
            evaluations: 0,
            converged: false,
            unidentifiable: Vec::new(),
            message: None,
            x: xs,
            y: ys,
            fitted: Vec::new(),
        };
        return Ok(r.fail(format!("found {found} local maxima but {k} peaks were requested")));
    }
    let (lo, hi) = (xs[0], xs[xs.len() - 1]);
    let mut bounds = vec![Bound::NONE];
    let mut scales = vec![top.max(base.abs())];
    for _ in 0..k {
        bounds.extend([Bound::between(lo, hi), Bound::lower(0.0), Bound::NONE]);
        scales.extend([hi - lo, dx, top]);
    }
    fit_model(model, &xs, &ys, &guess, &bounds, &scales)
}

/// Power law `a x^b` from a closed-form linear fit of `ln y` on `ln x`.
pub fn fit_power_law(x: &[f64], y: &[f64]) -> Result<FitResult> {
    check_xy(x, y, 2, "power_law")?;
    if x.iter().chain(y).any(|&v| v <= 0.0) {
        return domain("power_law needs positive x and y");
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|v| (v - mx) * (v - mx)).sum();
    if !(sxx > 0.0) {
        return domain("power_law needs at least two distinct x values");
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    let ln_a = my - b * mx;
    let a = ln_a.exp();
    let rss: f64 = lx.iter().zip(&ly).map(|(u, v)| (v - ln_a - b * u).powi(2)).sum();
    let s2 = if x.len() > 2 { rss / (n - 2.0) } else { f64::NAN };
    let sb = (s2 / sxx).sqrt();
    let sa = a * (s2 * (1.0 / n + mx * mx / sxx)).sqrt();
    let fitted: Vec<f64> = x.iter().map(|&v| a * v.powf(b)).collect();
    let lin = ssr(y, &fitted);
    Ok(FitResult {
        model: FitModel::PowerLaw.tag(),
        names: FitModel::PowerLaw.param_names(),
        params: vec![a, b],
        param_uncertainty: vec![sa, sb],
        residual_rms: (lin / n).sqrt() / data_scale(y),
        iterations: 0,
        evaluations: 0,
        converged: true,
        unidentifiable: Vec::new(),
        message: None,
        x: x.to_vec(),
        y: y.to_vec(),
        fitted,
    })
}

/// Dominant oscillation frequency of `y(x)` from the zero-padded FFT magnitude peak with
/// parabolic interpolation. `x` must be evenly spaced.
pub fn fft_frequency_estimate(x: &[f64], y: &[f64]) -> Result<f64> {
    check_xy(x, y, 4, "frequency estimate")?;
    let n = x.len();
    let dx = (x[n - 1] - x[0]) / (n - 1) as f64;
    if !(dx > 0.0) || x.windows(2).any(|w| ((w[1] - w[0]) - dx).abs() > 1e-6 * dx) {
        return domain("frequency estimate needs increasing, evenly spaced x");
    }
    let mean = y.iter().sum::<f64>() / n as f64;
    let m = (4 * n).next_power_of_two();
    let mut buf: Vec<rustfft::num_complex::Complex<f64>> = (0..m)
        .map(|i| rustfft::num_complex::Complex::new(if i < n { y[i] - mean } else { 0.0 }, 0.0))
        .collect();
    rustfft::FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let mag: Vec<f64> = buf[..=m / 2].iter().map(|c| c.norm()).collect();
    let k = (1..mag.len()).max_by(|&a, &b| mag[a].total_cmp(&mag[b]).then(b.cmp(&a))).unwrap_or(1);
    let shift = if k + 1 < mag.len() {
        let (a, b, c) = (mag[k - 1], mag[k], mag[k + 1]);
        let d = a - 2.0 * b + c;
        if d != 0.0 { 0.5 * (a - c) / d } else { 0.0 }
    } else {
        0.0
    };
    Ok((k as f64 + shift) / (m as f64 * dx))
}

/// Damped cosine with the frequency seeded from the FFT peak and amplitude and phase
/// from a linear fit at that frequency.
pub fn fit_damped_cosine(x: &[f64], y: &[f64]) -> Result<FitResult> {
    check_xy(x, y, 6, "damped_cosine")?;
    let f0 = fft_frequency_estimate(x, y)?;
    let n = x.len();
    let sp = span(x);
    let fs = (n - 1) as f64 / sp;
    let w = 2.0 * PI * f0;
    let cols = [x.iter().map(|t| (w * t).cos()).collect(), x.iter().map(|t| (w * t).sin()).collect(), vec![1.0; n]];
    let Some((c, _)) = linear_fit(&cols, y) else {
        return domain("damped_cosine initializer failed");
    };
    let amp = c[0].hypot(c[1]);
    let phi = (-c[1]).atan2(c[0]);
    let guess = [amp, f0, sp, phi, c[2]];
    let ys = data_scale(y);
    let bounds = [Bound::NONE, Bound::between(0.0, fs / 2.0), Bound::lower(0.0), Bound::NONE, Bound::NONE];
    let scales = [ys, f0.max(1.0 / sp), sp, 1.0, ys];
    let mut r = fit_model(FitModel::DampedCosine, x, y, &guess, &bounds, &scales)?;
    let amax = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if r.params[0].abs() <= 1e-9 * amax.max(f64::MIN_POSITIVE) {
        for name in ["f", "tau", "phi"] {
            if r.is_identifiable(name) {
                r.unidentifiable.push(name.into());
            }
        }
    }
    if !r.is_identifiable("f") {
        return Ok(r);
    }
    if f0 >= 0.4 * fs {
        return Ok(r.fail(format!("frequency {f0} is too close to the Nyquist limit {}", fs / 2.0)));
    }
    let periods = sp * r.params[1];
    if periods < 2.0 {
        return Ok(r.fail(format!("data covers {periods} periods, at least 2 are needed")));
    }
    Ok(r)
}
