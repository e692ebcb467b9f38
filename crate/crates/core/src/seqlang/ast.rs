use std::fmt;

/// Physical dimension of a quantity slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Dimension {
    Time,
    Frequency,
    Field,
    Dimensionless,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dimension::Time => "time",
            Dimension::Frequency => "frequency",
            Dimension::Field => "field",
            Dimension::Dimensionless => "dimensionless",
        })
    }
}

/// Unit suffixes understood by the lexer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Unit {
    Ns,
    Us,
    Ms,
    S,
    Hz,
    KHz,
    MHz,
    GHz,
    MilliTesla,
    Tesla,
}

impl Unit {
    pub fn parse(suffix: &str) -> Option<Unit> {
        Some(match suffix {
            "ns" => Unit::Ns,
            "us" | "µs" | "μs" => Unit::Us,
            "ms" => Unit::Ms,
            "s" => Unit::S,
            "Hz" => Unit::Hz,
            "kHz" => Unit::KHz,
            "MHz" => Unit::MHz,
            "GHz" => Unit::GHz,
            "mT" => Unit::MilliTesla,
            "T" => Unit::Tesla,
            _ => return None,
        })
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Unit::Ns => "ns",
            Unit::Us => "us",
            Unit::Ms => "ms",
            Unit::S => "s",
            Unit::Hz => "Hz",
            Unit::KHz => "kHz",
            Unit::MHz => "MHz",
            Unit::GHz => "GHz",
            Unit::MilliTesla => "mT",
            Unit::Tesla => "T",
        }
    }

    pub fn dimension(self) -> Dimension {
        match self {
            Unit::Ns | Unit::Us | Unit::Ms | Unit::S => Dimension::Time,
            Unit::Hz | Unit::KHz | Unit::MHz | Unit::GHz => Dimension::Frequency,
            Unit::MilliTesla | Unit::Tesla => Dimension::Field,
        }
    }

    /// Converts a magnitude in this unit to SI (s, Hz, T).
    ///
    /// Sub-unit prefixes divide by an exact power of ten and super-unit prefixes
    /// multiply by one, so decimal literals land on the nearest double.
    pub fn to_si(self, magnitude: f64) -> f64 {
        match self {
            Unit::Ns => magnitude / 1e9,
            Unit::Us => magnitude / 1e6,
            Unit::Ms => magnitude / 1e3,
            Unit::S | Unit::Hz | Unit::Tesla => magnitude,
            Unit::KHz => magnitude * 1e3,
            Unit::MHz => magnitude * 1e6,
            Unit::GHz => magnitude * 1e9,
            Unit::MilliTesla => magnitude / 1e3,
        }
    }

    pub fn from_si(self, si: f64) -> f64 {
        match self {
            Unit::Ns => si * 1e9,
            Unit::Us => si * 1e6,
            Unit::Ms => si * 1e3,
            Unit::S | Unit::Hz | Unit::Tesla => si,
            Unit::KHz => si / 1e3,
            Unit::MHz => si / 1e6,
            Unit::GHz => si / 1e9,
            Unit::MilliTesla => si * 1e3,
        }
    }

    /// Units of a dimension, largest first.
    pub fn ladder(dim: Dimension) -> &'static [Unit] {
        match dim {
            Dimension::Time => &[Unit::S, Unit::Ms, Unit::Us, Unit::Ns],
            Dimension::Frequency => &[Unit::GHz, Unit::MHz, Unit::KHz, Unit::Hz],
            Dimension::Field => &[Unit::Tesla, Unit::MilliTesla],
            Dimension::Dimensionless => &[],
        }
    }
}

/// A magnitude in SI units tagged with its dimension.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quantity {
    pub value: f64,
    pub dim: Dimension,
}

impl Quantity {
    pub fn seconds(value: f64) -> Self {
        Quantity { value, dim: Dimension::Time }
    }
    pub fn hertz(value: f64) -> Self {
        Quantity { value, dim: Dimension::Frequency }
    }
    pub fn tesla(value: f64) -> Self {
        Quantity { value, dim: Dimension::Field }
    }
    pub fn scalar(value: f64) -> Self {
        Quantity { value, dim: Dimension::Dimensionless }
    }
}

/// A slot filled by either a literal or a sweep variable.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Literal(Quantity),
    Var(String),
}

impl Value {
    pub fn literal(&self) -> Option<Quantity> {
        match self {
            Value::Literal(q) => Some(*q),
            Value::Var(_) => None,
        }
    }

    pub fn var(&self) -> Option<&str> {
        match self {
            Value::Var(name) => Some(name),
            Value::Literal(_) => None,
        }
    }
}

/// 1-based source position.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Angle {
    Pi,
    HalfPi,
}

impl Angle {
    pub fn radians(self) -> f64 {
        match self {
            Angle::Pi => std::f64::consts::PI,
            Angle::HalfPi => std::f64::consts::FRAC_PI_2,
        }
    }

    /// Rotation as a fraction of a full Rabi cycle.
    pub fn cycles(self) -> f64 {
        match self {
            Angle::Pi => 0.5,
            Angle::HalfPi => 0.25,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MwLength {
    Duration(Value),
    /// Rotation angle; `duration` is filled in by validation from the Rabi calibration.
    Angle { angle: Angle, duration: Option<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Laser {
    pub duration: Value,
    pub power: Option<Value>,
    /// PL integration window starting with the pulse.
    pub measure: Option<Value>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mw {
    pub length: MwLength,
    pub frequency: Option<Value>,
    pub amplitude: Option<Value>,
    /// Degrees.
    pub phase: Option<Value>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub var: String,
    pub start: Quantity,
    pub stop: Quantity,
    pub steps: usize,
    pub body: Vec<Statement>,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        sweep_values(self.start.value, self.stop.value, self.steps)
    }
}

/// Linearly spaced sweep points; the last point equals `stop` exactly.
pub fn sweep_values(start: f64, stop: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..steps)
            .map(|i| if i + 1 == steps { stop } else { start + (stop - start) * i as f64 / (steps - 1) as f64 })
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StatementKind {
    Laser(Laser),
    Wait { duration: Value },
    Mw(Mw),
    /// PL integration with the laser off.
    Measure { window: Value },
    Sweep(Sweep),
}

/// A statement with its source position. Equality ignores the span.
#[derive(Clone, Debug)]
pub struct Statement {
    pub kind: StatementKind,
    pub span: Span,
}

impl PartialEq for Statement {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Statement {
    pub fn new(kind: StatementKind) -> Self {
        Statement { kind, span: Span::default() }
    }
}

/// Ordered list of statements, possibly containing sweeps.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PulseSequence {
    pub statements: Vec<Statement>,
}

impl PulseSequence {
    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    /// Sweeps in source order, outermost first.
    pub fn sweeps(&self) -> Vec<&Sweep> {
        fn walk<'a>(stmts: &'a [Statement], out: &mut Vec<&'a Sweep>) {
            for s in stmts {
                if let StatementKind::Sweep(sw) = &s.kind {
                    out.push(sw);
                    walk(&sw.body, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.statements, &mut out);
        out
    }
}
