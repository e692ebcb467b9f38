use std::fmt::Write;

use super::ast::*;

/// Shortest decimal magnitude `m` with `to_si(m) == si`, if one exists.
fn exact_magnitude(unit: Unit, si: f64) -> Option<f64> {
    let approx = unit.from_si(si);
    if !approx.is_finite() {
        return None;
    }
    (1..=17).find_map(|digits| {
        let m: f64 = format!("{:.*e}", digits - 1, approx).parse().ok()?;
        (unit.to_si(m) == si).then_some(m)
    })
}

/// Canonical text of a quantity: the largest unit giving a magnitude of at least one
/// that reproduces the stored SI value exactly, falling back to the base unit.
pub fn format_quantity(q: Quantity) -> String {
    let ladder = Unit::ladder(q.dim);
    if ladder.is_empty() {
        return format!("{}", q.value);
    }
    if q.value != 0.0 {
        for &unit in ladder {
            if let Some(m) = exact_magnitude(unit, q.value) {
                if m.abs() >= 1.0 {
                    return format!("{m}{}", unit.symbol());
                }
            }
        }
    }
    let base = ladder.iter().copied().find(|u| u.to_si(1.0) == 1.0).expect("base unit");
    format!("{}{}", q.value, base.symbol())
}

fn value(v: &Value) -> String {
    match v {
        Value::Literal(q) => format_quantity(*q),
        Value::Var(name) => name.clone(),
    }
}

fn write_statements(out: &mut String, stmts: &[Statement], depth: usize) {
    for s in stmts {
        let indent = "  ".repeat(depth);
        match &s.kind {
            StatementKind::Laser(l) => {
                write!(out, "{indent}laser {}", value(&l.duration)).unwrap();
                if let Some(p) = &l.power {
                    write!(out, " power={}", value(p)).unwrap();
                }
                if let Some(m) = &l.measure {
                    write!(out, " measure {}", value(m)).unwrap();
                }
            }
            StatementKind::Wait { duration } => write!(out, "{indent}wait {}", value(duration)).unwrap(),
            StatementKind::Measure { window } => write!(out, "{indent}measure {}", value(window)).unwrap(),
            StatementKind::Mw(m) => {
                let length = match &m.length {
                    MwLength::Duration(d) => value(d),
                    MwLength::Angle { angle: Angle::Pi, .. } => "pi".into(),
                    MwLength::Angle { angle: Angle::HalfPi, .. } => "pi/2".into(),
                };
                write!(out, "{indent}mw {length}").unwrap();
                for (name, v) in [("f", &m.frequency), ("amp", &m.amplitude), ("phase", &m.phase)] {
                    if let Some(v) = v {
                        write!(out, " {name}={}", value(v)).unwrap();
                    }
                }
            }
            StatementKind::Sweep(sw) => {
                writeln!(
                    out,
                    "{indent}sweep {} {}..{} n={} {{",
                    sw.var,
                    format_quantity(sw.start),
                    format_quantity(sw.stop),
                    sw.steps
                )
                .unwrap();
                write_statements(out, &sw.body, depth + 1);
                write!(out, "{indent}}}").unwrap();
            }
        }
        out.push('\n');
    }
}

/// Canonical program text. Parsing the output reproduces the sequence structurally,
/// except that durations resolved for angle-form pulses are not written.
pub fn serialize(seq: &PulseSequence) -> String {
    let mut out = String::new();
    write_statements(&mut out, &seq.statements, 0);
    out
}

#[cfg(test)]
mod tests {
    use super::super::parse_str;
    use super::*;

    #[test]
    fn canonical_units() {
        assert_eq!(format_quantity(Quantity::seconds(1e-5)), "10us");
        assert_eq!(format_quantity(Quantity::seconds(2e-3)), "2ms");
        assert_eq!(format_quantity(Quantity::seconds(0.5e-6)), "500ns");
        assert_eq!(format_quantity(Quantity::seconds(2.5)), "2.5s");
        assert_eq!(format_quantity(Quantity::seconds(0.0)), "0s");
        assert_eq!(format_quantity(Quantity::seconds(1e-10)), "0.0000000001s");
        assert_eq!(format_quantity(Quantity::hertz(3.35e9)), "3.35GHz");
        assert_eq!(format_quantity(Quantity::hertz(12.5e6)), "12.5MHz");
        assert_eq!(format_quantity(Quantity::tesla(0.01)), "10mT");
        assert_eq!(format_quantity(Quantity::scalar(-90.0)), "-90");
    }

    #[test]
    fn wait_line() {
        let seq = PulseSequence {
            statements: vec![Statement::new(StatementKind::Wait { duration: Value::Literal(Quantity::seconds(1e-5)) })],
        };
        assert_eq!(serialize(&seq), "wait 10us\n");
        assert_eq!(serialize(&PulseSequence::default()), "");
    }

    #[test]
    fn round_trip_protocols() {
        for text in [
            "laser 300us\nsweep tau 0ms..2ms n=41 { wait tau }\nlaser 20us measure 20us",
            "laser 300us\nwait 10us\nmw pi/2 f=3.35GHz\nsweep tau 0ns..2us n=51 {\n wait tau\n}\nmw pi phase=90 amp=0.25\nlaser 20us power=0.5 measure 1.5us\nmeasure 3us",
        ] {
            let seq = parse_str(text).unwrap();
            let text2 = serialize(&seq);
            assert_eq!(parse_str(&text2).unwrap(), seq, "{text2}");
            assert_eq!(serialize(&parse_str(&text2).unwrap()), text2);
        }
    }
}
