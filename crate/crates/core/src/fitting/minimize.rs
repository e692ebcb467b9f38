use crate::error::{domain, Error, Result};

/// Optional box constraint on one parameter.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Bound {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl Bound {
    pub const NONE: Bound = Bound { lower: None, upper: None };

    pub fn lower(lo: f64) -> Self {
        Bound { lower: Some(lo), upper: None }
    }

    pub fn upper(hi: f64) -> Self {
        Bound { lower: None, upper: Some(hi) }
    }

    pub fn between(lo: f64, hi: f64) -> Self {
        Bound { lower: Some(lo), upper: Some(hi) }
    }

    // Internal (unbounded) to external coordinates, as in MINUIT.
    fn to_external(self, u: f64) -> f64 {
        match (self.lower, self.upper) {
            (Some(a), Some(b)) => a + (b - a) * (u.sin() + 1.0) / 2.0,
            (Some(a), None) => a - 1.0 + (u * u + 1.0).sqrt(),
            (None, Some(b)) => b + 1.0 - (u * u + 1.0).sqrt(),
            (None, None) => u,
        }
    }

    fn to_internal(self, x: f64) -> f64 {
        match (self.lower, self.upper) {
            (Some(a), Some(b)) => (2.0 * (x - a) / (b - a) - 1.0).clamp(-1.0, 1.0).asin(),
            (Some(a), None) => {
                let s = (x - a + 1.0).max(1.0);
                (s * s - 1.0).sqrt()
            }
            (None, Some(b)) => {
                let s = (b - x + 1.0).max(1.0);
                (s * s - 1.0).sqrt()
            }
            (None, None) => x,
        }
    }

    fn contains(self, x: f64) -> bool {
        self.lower.is_none_or(|a| x >= a) && self.upper.is_none_or(|b| x <= b)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinimizeOptions {
    /// Stop when the simplex diameter, relative to the parameter scale, drops below this.
    pub xtol: f64,
    /// Stop when the objective spread across the simplex drops below this fraction of the best value.
    pub ftol: f64,
    pub max_evaluations: usize,
    /// Fresh simplices built around the best point after convergence.
    pub restarts: usize,
    /// Initial simplex edge per parameter. Defaults to 5% of |x0|, or 2.5e-4 for zeros.
    pub initial_step: Option<Vec<f64>>,
    /// Empty means unbounded.
    pub bounds: Vec<Bound>,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            xtol: 1e-10,
            ftol: 1e-12,
            max_evaluations: 100_000,
            restarts: 3,
            initial_step: None,
            bounds: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// False when the evaluation cap was hit.
    pub converged: bool,
}

struct Counted<F> {
    f: F,
    bounds: Vec<Bound>,
    evaluations: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn external(&self, u: &[f64]) -> Vec<f64> {
        u.iter().zip(&self.bounds).map(|(&u, b)| b.to_external(u)).collect()
    }

    fn eval(&mut self, u: &[f64]) -> Result<f64> {
        let x = self.external(u);
        self.evaluations += 1;
        let v = (self.f)(&x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFiniteObjective(x))
        }
    }
}

/// Nelder-Mead simplex minimization with MINUIT-style parameter transforms for bounds.
///
/// Deterministic: identical inputs give bit-identical results.
pub fn minimize<F>(f: F, x0: &[f64], opts: &MinimizeOptions) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    if n == 0 {
        return domain("minimize needs at least one parameter");
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return domain(format!("starting point must be finite, got {x0:?}"));
    }
    let bounds = if opts.bounds.is_empty() { vec![Bound::NONE; n] } else { opts.bounds.clone() };
    if bounds.len() != n {
        return domain(format!("{} bounds given for {n} parameters", bounds.len()));
    }
    for (i, (b, &x)) in bounds.iter().zip(x0).enumerate() {
        if let (Some(a), Some(c)) = (b.lower, b.upper) {
            if !(a < c) {
                return domain(format!("parameter {i}: empty bound interval [{a}, {c}]"));
            }
        }
        if !b.contains(x) {
            return domain(format!("parameter {i}: starting value {x} violates its bounds"));
        }
    }
    let steps: Vec<f64> = match &opts.initial_step {
        Some(s) if s.len() == n => s.clone(),
        Some(s) => return domain(format!("{} initial steps given for {n} parameters", s.len())),
        None => x0.iter().map(|&x| if x == 0.0 { 2.5e-4 } else { 0.05 * x.abs() }).collect(),
    };

    let mut obj = Counted { f, bounds: bounds.clone(), evaluations: 0 };
    let u0: Vec<f64> = x0.iter().zip(&bounds).map(|(&x, b)| b.to_internal(x)).collect();
    // simplex edges in internal coordinates
    let du: Vec<f64> = (0..n)
        .map(|i| {
            let b = bounds[i];
            let mut xs = x0[i] + steps[i];
            if !b.contains(xs) {
                xs = x0[i] - steps[i];
            }
            let d = b.to_internal(xs) - u0[i];
            if d.abs() > 1e-12 { d } else { 0.1 }
        })
        .collect();

    let mut best_u = u0;
    let mut best_f = obj.eval(&best_u)?;
    let mut iterations = 0;
    let mut converged = false;
    for round in 0..=opts.restarts {
        let (u, fv, it, done) = simplex_run(&mut obj, &best_u, &du, opts)?;
        iterations += it;
        let improved = best_f - fv > opts.ftol * best_f.abs();
        if fv <= best_f {
            best_u = u;
            best_f = fv;
        }
        converged = done;
        if !done || (round > 0 && !improved) {
            break;
        }
    }
    let x = obj.external(&best_u);
    Ok(Minimum { x, f: best_f, iterations, evaluations: obj.evaluations, converged })
}

fn simplex_run<F: FnMut(&[f64]) -> f64>(
    obj: &mut Counted<F>,
    start: &[f64],
    du: &[f64],
    opts: &MinimizeOptions,
) -> Result<(Vec<f64>, f64, usize, bool)> {
    let n = start.len();
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    pts.push(start.to_vec());
    for i in 0..n {
        let mut p = start.to_vec();
        p[i] += du[i];
        pts.push(p);
    }
    let mut fs = Vec::with_capacity(n + 1);
    for p in &pts {
        fs.push(obj.eval(p)?);
    }
    let scale: Vec<f64> = (0..n).map(|i| start[i].abs().max(du[i].abs())).collect();

    let mut iterations = 0;
    loop {
        // stable sort keeps ties in insertion order, which keeps runs reproducible
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| fs[a].total_cmp(&fs[b]));
        pts = order.iter().map(|&k| pts[k].clone()).collect();
        fs = order.iter().map(|&k| fs[k]).collect();

        let spread = fs[n] - fs[0];
        let diameter = pts[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&pts[0]).zip(&scale).map(|((a, b), s)| (a - b).abs() / s))
            .fold(0.0, f64::max);
        if diameter < opts.xtol || spread <= opts.ftol * fs[0].abs() {
            return Ok((pts.swap_remove(0), fs[0], iterations, true));
        }
        if obj.evaluations >= opts.max_evaluations {
            return Ok((pts.swap_remove(0), fs[0], iterations, false));
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n).map(|i| pts[..n].iter().map(|p| p[i]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|i| centroid[i] + t * (pts[n][i] - centroid[i])).collect() };

        let xr = along(-1.0);
        let fr = obj.eval(&xr)?;
        if fr < fs[0] {
            let xe = along(-2.0);
            let fe = obj.eval(&xe)?;
            if fe < fr {
                pts[n] = xe;
                fs[n] = fe;
            } else {
                pts[n] = xr;
                fs[n] = fr;
            }
            continue;
        }
        if fr < fs[n - 1] {
            pts[n] = xr;
            fs[n] = fr;
            continue;
        }
        // outside contraction if the reflection helped at all, inside otherwise
        let xc = along(if fr < fs[n] { -0.5 } else { 0.5 });
        let fc = obj.eval(&xc)?;
        if fc < fs[n].min(fr) {
            pts[n] = xc;
            fs[n] = fc;
            continue;
        }
        // shrink toward the best vertex
        for k in 1..=n {
            let p: Vec<f64> = (0..n).map(|i| pts[0][i] + 0.5 * (pts[k][i] - pts[0][i])).collect();
            fs[k] = obj.eval(&p)?;
            pts[k] = p;
        }
    }
}
