use super::ast::*;
use super::{SeqError, SeqErrorKind};

/// What the experiment can do: addressable transitions, Rabi calibration and limits.
#[derive(Clone, Debug)]
pub struct ValidationContext {
    /// Transition frequencies in Hz that microwave pulses may address.
    pub transitions_hz: Vec<f64>,
    /// Cyclic Rabi frequency at unit amplitude, Hz.
    pub rabi_frequency_hz: Option<f64>,
    /// Largest allowed distance between a pulse frequency and the nearest transition.
    pub max_detuning_hz: f64,
    /// Cap on the duration of any single expanded sequence, s.
    pub max_duration_s: f64,
}

impl ValidationContext {
    pub fn new(transitions_hz: Vec<f64>) -> Self {
        ValidationContext { transitions_hz, rabi_frequency_hz: None, max_detuning_hz: 0.5e9, max_duration_s: 10.0 }
    }

    pub fn with_rabi(mut self, rabi_frequency_hz: f64) -> Self {
        self.rabi_frequency_hz = Some(rabi_frequency_hz);
        self
    }
}

fn err(kind: SeqErrorKind, span: Span, message: impl Into<String>, expected: &[&str]) -> SeqError {
    SeqError::new(kind, span, message, expected.iter().map(|s| s.to_string()).collect())
}

fn check_bound(v: &Value, scope: &[&str], span: Span) -> Result<(), SeqError> {
    match v {
        Value::Var(name) if !scope.contains(&name.as_str()) => Err(err(
            SeqErrorKind::Validation,
            span,
            format!("variable '{name}' is not bound by an enclosing sweep"),
            &["quantity", "enclosing sweep variable"],
        )),
        _ => Ok(()),
    }
}

fn resolve_statements<'a>(
    stmts: &'a mut [Statement],
    scope: &mut Vec<&'a str>,
    ctx: &ValidationContext,
) -> Result<(), SeqError> {
    for stmt in stmts.iter_mut() {
        let span = stmt.span;
        match &mut stmt.kind {
            StatementKind::Laser(l) => {
                for v in [Some(&l.duration), l.power.as_ref(), l.measure.as_ref()].into_iter().flatten() {
                    check_bound(v, scope, span)?;
                }
                if let Some(Value::Literal(p)) = &l.power {
                    if p.value < 0.0 {
                        return Err(err(SeqErrorKind::Validation, span, "laser power must be non-negative", &["power >= 0"]));
                    }
                }
            }
            StatementKind::Wait { duration } => check_bound(duration, scope, span)?,
            StatementKind::Measure { window } => check_bound(window, scope, span)?,
            StatementKind::Mw(m) => {
                for v in [m.frequency.as_ref(), m.amplitude.as_ref(), m.phase.as_ref()].into_iter().flatten() {
                    check_bound(v, scope, span)?;
                }
                if let Some(Value::Literal(a)) = &m.amplitude {
                    if a.value < 0.0 {
                        return Err(err(SeqErrorKind::Validation, span, "amplitude must be non-negative", &["amp >= 0"]));
                    }
                }
                match &mut m.length {
                    MwLength::Duration(d) => check_bound(d, scope, span)?,
                    MwLength::Angle { angle, duration } => {
                        let f_r = ctx.rabi_frequency_hz.filter(|f| *f > 0.0 && f.is_finite()).ok_or_else(|| {
                            err(
                                SeqErrorKind::Validation,
                                span,
                                "angle-form pulse needs a Rabi calibration",
                                &["explicit pulse duration", "Rabi frequency in the validation context"],
                            )
                        })?;
                        let amp = match &m.amplitude {
                            None => 1.0,
                            Some(Value::Literal(a)) => a.value,
                            Some(Value::Var(_)) => {
                                return Err(err(
                                    SeqErrorKind::Validation,
                                    span,
                                    "angle-form pulse cannot take a swept amplitude",
                                    &["literal amp", "explicit pulse duration"],
                                ))
                            }
                        };
                        if amp <= 0.0 {
                            return Err(err(SeqErrorKind::Validation, span, "angle-form pulse needs amp > 0", &["amp > 0"]));
                        }
                        *duration = Some(angle.cycles() / (f_r * amp));
                    }
                }
            }
            StatementKind::Sweep(sw) => {
                scope.push(sw.var.as_str());
                resolve_statements(&mut sw.body, scope, ctx)?;
                scope.pop();
            }
        }
    }
    Ok(())
}

/// Resolves angle-form pulses and checks that every expanded point is executable.
///
/// Angle pulses get `t = cycles / (f_R * amp)`, so a pi pulse at unit amplitude lasts
/// `1/(2 f_R)`.
pub fn validate(seq: &PulseSequence, ctx: &ValidationContext) -> Result<PulseSequence, SeqError> {
    let mut out = seq.clone();
    let mut scope = Vec::new();
    resolve_statements(&mut out.statements, &mut scope, ctx)?;
    for point in expand(&out)? {
        check_point(&point.sequence, ctx)?;
    }
    Ok(out)
}

fn literal_value(v: &Value) -> f64 {
    v.literal().expect("expanded sequences contain literals only").value
}

fn check_point(seq: &PulseSequence, ctx: &ValidationContext) -> Result<(), SeqError> {
    let mut total = 0.0;
    for stmt in &seq.statements {
        let span = stmt.span;
        match &stmt.kind {
            StatementKind::Laser(l) => {
                let d = literal_value(&l.duration);
                if let Some(m) = &l.measure {
                    if literal_value(m) > d {
                        return Err(err(
                            SeqErrorKind::Validation,
                            span,
                            "measurement window is longer than the laser pulse",
                            &["window <= pulse duration"],
                        ));
                    }
                }
                total += d;
            }
            StatementKind::Wait { duration } => total += literal_value(duration),
            StatementKind::Measure { window } => total += literal_value(window),
            StatementKind::Mw(m) => {
                total += match &m.length {
                    MwLength::Duration(d) => literal_value(d),
                    MwLength::Angle { duration, .. } => duration.expect("resolved angle pulse"),
                };
                if ctx.transitions_hz.is_empty() {
                    return Err(err(
                        SeqErrorKind::Validation,
                        span,
                        "no microwave transition is available to address",
                        &["sequence without mw pulses"],
                    ));
                }
                if let Some(f) = &m.frequency {
                    let f = literal_value(f);
                    let nearest = ctx.transitions_hz.iter().map(|t| (t - f).abs()).fold(f64::INFINITY, f64::min);
                    if nearest > ctx.max_detuning_hz {
                        return Err(err(
                            SeqErrorKind::Validation,
                            span,
                            format!(
                                "{} is {:.4} GHz away from the nearest transition",
                                super::format_quantity(Quantity::hertz(f)),
                                nearest / 1e9
                            ),
                            &["frequency near an available transition"],
                        ));
                    }
                }
            }
            StatementKind::Sweep(_) => unreachable!("expanded sequences contain no sweeps"),
        }
    }
    if !(total < ctx.max_duration_s) {
        let span = seq.statements.first().map(|s| s.span).unwrap_or_default();
        return Err(err(
            SeqErrorKind::Validation,
            span,
            format!("expanded sequence lasts {total} s, above the {} s cap", ctx.max_duration_s),
            &["shorter sequence"],
        ));
    }
    Ok(())
}

/// One concrete sequence and the sweep values that produced it, outermost sweep first.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub values: Vec<(String, f64)>,
    pub sequence: PulseSequence,
}

fn substitute(v: &Value, env: &[(String, f64)], dim: Dimension, span: Span) -> Result<Value, SeqError> {
    match v {
        Value::Literal(_) => Ok(v.clone()),
        Value::Var(name) => env
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|&(_, x)| Value::Literal(Quantity { value: x, dim }))
            .ok_or_else(|| {
                err(
                    SeqErrorKind::Validation,
                    span,
                    format!("variable '{name}' is not bound by an enclosing sweep"),
                    &["quantity", "enclosing sweep variable"],
                )
            }),
    }
}

fn substitute_opt(v: &Option<Value>, env: &[(String, f64)], dim: Dimension, span: Span) -> Result<Option<Value>, SeqError> {
    v.as_ref().map(|v| substitute(v, env, dim, span)).transpose()
}

fn flatten(stmts: &[Statement], env: &[(String, f64)], out: &mut Vec<Statement>) -> Result<(), SeqError> {
    for stmt in stmts {
        let span = stmt.span;
        let kind = match &stmt.kind {
            StatementKind::Laser(l) => StatementKind::Laser(Laser {
                duration: substitute(&l.duration, env, Dimension::Time, span)?,
                power: substitute_opt(&l.power, env, Dimension::Dimensionless, span)?,
                measure: substitute_opt(&l.measure, env, Dimension::Time, span)?,
            }),
            StatementKind::Wait { duration } => {
                StatementKind::Wait { duration: substitute(duration, env, Dimension::Time, span)? }
            }
            StatementKind::Measure { window } => {
                StatementKind::Measure { window: substitute(window, env, Dimension::Time, span)? }
            }
            StatementKind::Mw(m) => StatementKind::Mw(Mw {
                length: match &m.length {
                    MwLength::Duration(d) => MwLength::Duration(substitute(d, env, Dimension::Time, span)?),
                    angle => angle.clone(),
                },
                frequency: substitute_opt(&m.frequency, env, Dimension::Frequency, span)?,
                amplitude: substitute_opt(&m.amplitude, env, Dimension::Dimensionless, span)?,
                phase: substitute_opt(&m.phase, env, Dimension::Dimensionless, span)?,
            }),
            StatementKind::Sweep(sw) => {
                flatten(&sw.body, env, out)?;
                continue;
            }
        };
        out.push(Statement { kind, span });
    }
    Ok(())
}

/// Cartesian expansion over all sweeps; sweeps earlier in the source vary slowest.
///
/// Returns a single point when the sequence has no sweeps.
pub fn expand(seq: &PulseSequence) -> Result<Vec<SweepPoint>, SeqError> {
    let mut sweeps = Vec::new();
    fn collect<'a>(stmts: &'a [Statement], out: &mut Vec<(&'a Sweep, Span)>) {
        for s in stmts {
            if let StatementKind::Sweep(sw) = &s.kind {
                out.push((sw, s.span));
                collect(&sw.body, out);
            }
        }
    }
    collect(&seq.statements, &mut sweeps);
    let mut grids = Vec::with_capacity(sweeps.len());
    for (sw, span) in &sweeps {
        if sw.steps < 2 {
            return Err(err(
                SeqErrorKind::Expansion,
                *span,
                format!("sweep '{}' has {} step(s); at least 2 are required", sw.var, sw.steps),
                &["n >= 2"],
            ));
        }
        grids.push(sw.values());
    }
    let count: usize = grids.iter().map(Vec::len).product();
    let mut points = Vec::with_capacity(count);
    let mut index = vec![0usize; grids.len()];
    for _ in 0..count {
        let env: Vec<(String, f64)> =
            sweeps.iter().zip(&grids).zip(&index).map(|(((sw, _), g), &i)| (sw.var.clone(), g[i])).collect();
        let mut statements = Vec::new();
        flatten(&seq.statements, &env, &mut statements)?;
        points.push(SweepPoint { values: env, sequence: PulseSequence { statements } });
        for k in (0..index.len()).rev() {
            index[k] += 1;
            if index[k] < grids[k].len() {
                break;
            }
            index[k] = 0;
        }
    }
    Ok(points)
}
